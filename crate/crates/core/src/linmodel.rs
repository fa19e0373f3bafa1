//! L2-regularized binary logistic regression over sparse style vectors.
//!
//! The objective is the mean negative log-likelihood plus `lambda/2 * |w|^2`;
//! the intercept is not penalized. Training is full-batch gradient descent
//! with a backtracking (Armijo) line search started from zero, so it is
//! deterministic and the objective never increases between iterations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Family, FeatureSpace, StyleVector};
use crate::textproc::TaggedSentence;

const FORMAT_NAME: &str = "stylecloze-linear-model";
const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Regularized logistic loss on a fixed dataset.
pub struct Objective<'a> {
    xs: &'a [StyleVector],
    signs: Vec<f64>,
    lambda: f64,
    dim: usize,
}

impl<'a> Objective<'a> {
    pub fn new(xs: &'a [StyleVector], ys: &[bool], lambda: f64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "{} vectors but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InsufficientData("need at least two training examples".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
            return Err(Error::DegenerateData("training labels contain a single class".into()));
        }
        let dim = xs[0].dim;
        for x in xs {
            if x.dim != dim {
                return Err(Error::InvalidInput("vectors of differing dimension".into()));
            }
            if x.entries.iter().any(|&(i, v)| !v.is_finite() || i >= dim) {
                return Err(Error::InvalidInput("non-finite or out-of-range feature".into()));
            }
        }
        Ok(Objective {
            xs,
            signs: ys.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect(),
            lambda,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signed margins `s_i * (w.x_i + b)` with `s_i = +-1`.
    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.xs
            .iter()
            .zip(&self.signs)
            .map(|(x, s)| s * (x.dot(w) + b))
            .collect()
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn value(&self, w: &[f64], b: f64) -> f64 {
        let n = self.xs.len() as f64;
        let nll: f64 = self.margins(w, b).iter().map(|&m| softplus(-m)).sum();
        nll / n + self.penalty(w)
    }

    /// Objective value and gradient `(dw, db)`.
    pub fn value_and_gradient(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let n = self.xs.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.lambda * v).collect();
        let mut gb = 0.0;
        let mut nll = 0.0;
        for ((x, s), m) in self.xs.iter().zip(&self.signs).zip(self.margins(w, b)) {
            nll += softplus(-m);
            let r = -s * sigmoid(-m) / n;
            for &(i, v) in &x.entries {
                gw[i] += r * v;
            }
            gb += r;
        }
        (nll / n + self.penalty(w), gw, gb)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    /// Fingerprint of the feature space the weights are aligned to.
    pub space_fingerprint: String,
}

/// Trains with default options. Returns the model and the objective value
/// recorded before every iteration (and after the last).
pub fn train(xs: &[StyleVector], ys: &[bool], lambda: f64) -> Result<LinearModel> {
    train_with(xs, ys, lambda, TrainOptions::default()).map(|(m, _)| m)
}

pub fn train_with(
    xs: &[StyleVector],
    ys: &[bool],
    lambda: f64,
    opts: TrainOptions,
) -> Result<(LinearModel, Vec<f64>)> {
    let obj = Objective::new(xs, ys, lambda)?;
    let mut w = vec![0.0; obj.dim()];
    let mut b = 0.0;
    let mut step = 1.0;
    let (mut f, mut gw, mut gb) = obj.value_and_gradient(&w, b);
    let mut trace = vec![f];
    let mut iterations = 0;
    let grad_norm = |gw: &[f64], gb: f64| (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
    let mut gnorm = grad_norm(&gw, gb);

    while gnorm > opts.tolerance && iterations < opts.max_iterations {
        let g2 = gnorm * gnorm;
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(x, g)| x - step * g).collect();
            let b_new = b - step * gb;
            let f_new = obj.value(&w_new, b_new);
            if f_new <= f - 1e-4 * step * g2 {
                w = w_new;
                b = b_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // No representable descent step left.
            break;
        }
        step *= 2.0;
        (f, gw, gb) = obj.value_and_gradient(&w, b);
        gnorm = grad_norm(&gw, gb);
        trace.push(f);
    }
    if !f.is_finite() || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::TrainingFailure {
            step: iterations,
            reason: "non-finite objective".into(),
        });
    }
    Ok((
        LinearModel {
            weights: w,
            intercept: b,
            lambda,
            iterations,
            objective: f,
            gradient_norm: gnorm,
            space_fingerprint: String::new(),
        },
        trace,
    ))
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn bind(mut self, fingerprint: impl Into<String>) -> Self {
        self.space_fingerprint = fingerprint.into();
        self
    }

    pub fn score(&self, x: &StyleVector) -> Result<f64> {
        if x.dim != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector has dimension {} but the model expects {}",
                x.dim,
                self.dim()
            )));
        }
        Ok(x.dot(&self.weights) + self.intercept)
    }

    /// Posterior probability of the positive class.
    pub fn predict_proba(&self, x: &StyleVector) -> Result<f64> {
        self.score(x).map(sigmoid)
    }

    pub fn predict(&self, x: &StyleVector) -> Result<bool> {
        Ok(self.predict_proba(x)? > 0.5)
    }

    pub fn accuracy(&self, xs: &[StyleVector], ys: &[bool]) -> Result<f64> {
        if xs.is_empty() {
            return Err(Error::InsufficientData("empty evaluation set".into()));
        }
        let mut right = 0;
        for (x, &y) in xs.iter().zip(ys) {
            if self.predict(x)? == y {
                right += 1;
            }
        }
        Ok(right as f64 / xs.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        let weights: Vec<(usize, f64)> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (i, w))
            .collect();
        let v = serde_json::json!({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "lambda": self.lambda,
            "intercept": self.intercept,
            "dim": self.dim(),
            "weights": weights,
            "iterations": self.iterations,
            "objective": self.objective,
            "gradient_norm": self.gradient_norm,
            "space_fingerprint": self.space_fingerprint,
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn from_json(text: &str) -> Result<LinearModel> {
        #[derive(Deserialize)]
        struct Stored {
            format: String,
            version: u32,
            lambda: f64,
            intercept: f64,
            dim: usize,
            weights: Vec<(usize, f64)>,
            iterations: usize,
            objective: f64,
            gradient_norm: f64,
            space_fingerprint: String,
        }
        let s: Stored = serde_json::from_str(text)?;
        if s.format != FORMAT_NAME || s.version != FORMAT_VERSION {
            return Err(Error::Format("unsupported linear model format or version".into()));
        }
        let mut weights = vec![0.0; s.dim];
        for (i, w) in s.weights {
            *weights
                .get_mut(i)
                .ok_or_else(|| Error::Format(format!("weight index {i} out of range")))? = w;
        }
        Ok(LinearModel {
            weights,
            intercept: s.intercept,
            lambda: s.lambda,
            iterations: s.iterations,
            objective: s.objective,
            gradient_norm: s.gradient_norm,
            space_fingerprint: s.space_fingerprint,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    /// `(lambda, dev accuracy)` in grid order.
    pub scores: Vec<(f64, f64)>,
    pub selected_lambda: f64,
    #[serde(skip)]
    pub model: LinearModel,
}

/// Trains one model per lambda and keeps the best on dev. Ties go to the
/// larger lambda.
pub fn grid_search(
    train_x: &[StyleVector],
    train_y: &[bool],
    dev_x: &[StyleVector],
    dev_y: &[bool],
    grid: &[f64],
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty regularization grid".into()));
    }
    if dev_x.is_empty() {
        return Err(Error::InsufficientData("empty development set".into()));
    }
    let mut fitted: Vec<(f64, LinearModel, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let model = train(train_x, train_y, lambda)?;
            let acc = model.accuracy(dev_x, dev_y)?;
            Ok((lambda, model, acc))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (lambda, _, acc)) in fitted.iter().enumerate() {
        let (best_lambda, _, best_acc) = &fitted[best];
        if acc > best_acc || (acc == best_acc && lambda > best_lambda) {
            best = i;
        }
    }
    let scores = fitted.iter().map(|(l, _, a)| (*l, *a)).collect();
    let (selected_lambda, model, _) = fitted.swap_remove(best);
    Ok(GridSearchResult {
        scores,
        selected_lambda,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SalientFeature {
    pub feature: String,
    pub family: Family,
    pub weight: f64,
    pub doc_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SalientFeatures {
    /// Largest positive weights first.
    pub positive: Vec<SalientFeature>,
    /// Most negative weights first.
    pub negative: Vec<SalientFeature>,
}

/// Heaviest features for each class among those present in at least
/// `min_doc_freq` of `endings`.
pub fn top_features(
    model: &LinearModel,
    space: &FeatureSpace,
    endings: &[TaggedSentence],
    k: usize,
    min_doc_freq: f64,
) -> Result<SalientFeatures> {
    if model.dim() < space.dim() {
        return Err(Error::InvalidInput("model is smaller than the feature space".into()));
    }
    let df = space.document_frequency(endings)?;
    let mut candidates: Vec<SalientFeature> = space
        .entries()
        .iter()
        .filter(|e| df[e.index] >= min_doc_freq)
        .map(|e| SalientFeature {
            feature: e.display(),
            family: e.family,
            weight: model.weights[e.index],
            doc_freq: df[e.index],
        })
        .collect();
    candidates.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.feature.cmp(&b.feature)));
    let positive = candidates.iter().filter(|f| f.weight > 0.0).take(k).cloned().collect();
    let negative = candidates.iter().rev().filter(|f| f.weight < 0.0).take(k).cloned().collect();
    Ok(SalientFeatures { positive, negative })
}
