//! Single-layer LSTM language model with hand-written backpropagation
//! through time, trained with Adam.
//!
//! Parameter blocks (rows x cols):
//! embedding V x E, input weights 4H x E, recurrent weights 4H x H,
//! gate bias 1 x 4H, output weights V x H, output bias 1 x V.
//! Gate order inside the 4H blocks is input, forget, candidate, output.
//! Dropout (inverted) is applied to the embedded input and to the hidden
//! output before the projection, only while training.

use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, BOS};
use super::{check_ids, LanguageModel};
use crate::error::{Error, Result};

pub const PARAM_BLOCKS: [&str; 6] = [
    "embedding",
    "input_weights",
    "recurrent_weights",
    "gate_bias",
    "output_weights",
    "output_bias",
];

const EMB: usize = 0;
const WX: usize = 1;
const WH: usize = 2;
const B: usize = 3;
const WO: usize = 4;
const BO: usize = 5;

const CHECKPOINT_MAGIC: &[u8; 8] = b"SCNLM\0\0\0";
const CHECKPOINT_VERSION: u32 = 1;
const SIDECAR_FORMAT: &str = "stylecloze-neural-lm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    pub validation_fraction: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        NeuralConfig {
            embed_dim: 512,
            hidden_dim: 512,
            dropout: 0.6,
            learning_rate: 0.001,
            epochs: 10,
            batch_size: 32,
            clip_norm: 5.0,
            validation_fraction: 0.1,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl NeuralConfig {
    fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("embedding and hidden sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("learning rate and batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig("validation fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-token loss seen during the epoch, dropout active.
    pub train_loss: f64,
    pub validation_perplexity: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub train_stories: usize,
    pub validation_stories: usize,
    pub epochs: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralLm {
    vocab: Vocabulary,
    config: NeuralConfig,
    params: Vec<Array2<f64>>,
}

#[derive(Clone)]
struct State {
    h: Array1<f64>,
    c: Array1<f64>,
}

struct Step {
    input: u32,
    target: u32,
    x: Array1<f64>,
    mask_x: Option<Array1<f64>>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    gates: Array1<f64>,
    tanh_c: Array1<f64>,
    h_out: Array1<f64>,
    mask_h: Option<Array1<f64>>,
    probs: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + logits.mapv(|v| (v - max).exp()).sum().ln();
    logits.mapv(|v| v - lse)
}

fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Array1<f64> {
    let keep = 1.0 - p;
    Array1::from_shape_fn(n, |_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

fn outer_acc(acc: &mut Array2<f64>, col: &Array1<f64>, row: &Array1<f64>) {
    let a = col.view().insert_axis(Axis(1));
    let b = row.view().insert_axis(Axis(0));
    general_mat_mul(1.0, &a, &b, 1.0, acc);
}

impl NeuralLm {
    /// Randomly initialized model (uniform in `+-init_scale`, forget bias 1).
    pub fn new(vocab: Vocabulary, config: NeuralConfig) -> Result<NeuralLm> {
        config.validate()?;
        let (v, e, h) = (vocab.len(), config.embed_dim, config.hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = config.init_scale;
        let mut uniform = |r: usize, c: usize| {
            Array2::from_shape_fn((r, c), |_| rng.gen_range(-scale..=scale))
        };
        let mut params = vec![
            uniform(v, e),
            uniform(4 * h, e),
            uniform(4 * h, h),
            Array2::zeros((1, 4 * h)),
            uniform(v, h),
            Array2::zeros((1, v)),
        ];
        params[B].slice_mut(s![0, h..2 * h]).fill(1.0);
        Ok(NeuralLm {
            vocab,
            config,
            params,
        })
    }

    pub fn config(&self) -> &NeuralConfig {
        &self.config
    }

    pub fn params(&self) -> &[Array2<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    fn hidden(&self) -> usize {
        self.config.hidden_dim
    }

    fn zero_state(&self) -> State {
        State {
            h: Array1::zeros(self.hidden()),
            c: Array1::zeros(self.hidden()),
        }
    }

    /// Gate activations and the next state for input vector `x`.
    fn cell(&self, x: ArrayView1<f64>, prev: &State) -> (Array1<f64>, State, Array1<f64>) {
        let h = self.hidden();
        let mut z = self.params[WX].dot(&x) + self.params[WH].dot(&prev.h) + self.params[B].row(0);
        z.slice_mut(s![..2 * h]).mapv_inplace(sigmoid);
        z.slice_mut(s![2 * h..3 * h]).mapv_inplace(f64::tanh);
        z.slice_mut(s![3 * h..]).mapv_inplace(sigmoid);
        let i = z.slice(s![..h]);
        let f = z.slice(s![h..2 * h]);
        let g = z.slice(s![2 * h..3 * h]);
        let o = z.slice(s![3 * h..]);
        let c = &f * &prev.c + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        (z, State { h: h_new, c }, tanh_c)
    }

    fn output_log_probs(&self, h: &Array1<f64>) -> Array1<f64> {
        let logits = self.params[WO].dot(h) + self.params[BO].row(0);
        log_softmax(&logits)
    }

    fn advance(&self, state: &State, id: u32) -> State {
        let x = self.params[EMB].row(id as usize);
        self.cell(x, state).1
    }

    fn run_from_start(&self, ids: &[u32]) -> State {
        let mut st = self.advance(&self.zero_state(), BOS);
        for &id in ids {
            st = self.advance(&st, id);
        }
        st
    }

    fn check_sequence(&self, seq: &[u32]) -> Result<()> {
        if seq.len() < 2 || seq[0] != BOS {
            return Err(Error::InvalidInput(
                "training sequences start with <s> and hold at least one target".into(),
            ));
        }
        check_ids(&self.vocab, &seq[1..])
    }

    /// Forward pass over one `<s>`-initial sequence. Returns the summed loss
    /// and per-step caches.
    fn forward(&self, seq: &[u32], mut rng: Option<&mut ChaCha8Rng>) -> (f64, Vec<Step>) {
        let p = self.config.dropout;
        let mut state = self.zero_state();
        let mut steps = Vec::with_capacity(seq.len() - 1);
        let mut loss = 0.0;
        for t in 0..seq.len() - 1 {
            let input = seq[t];
            let target = seq[t + 1];
            let emb = self.params[EMB].row(input as usize).to_owned();
            let mask_x = rng.as_deref_mut().filter(|_| p > 0.0).map(|r| dropout_mask(r, emb.len(), p));
            let x = match &mask_x {
                Some(m) => &emb * m,
                None => emb,
            };
            let (gates, next, tanh_c) = self.cell(x.view(), &state);
            let mask_h = rng.as_deref_mut().filter(|_| p > 0.0).map(|r| dropout_mask(r, next.h.len(), p));
            let h_out = match &mask_h {
                Some(m) => &next.h * m,
                None => next.h.clone(),
            };
            let logp = self.output_log_probs(&h_out);
            loss -= logp[target as usize];
            steps.push(Step {
                input,
                target,
                x,
                mask_x,
                h_prev: std::mem::replace(&mut state.h, next.h.clone()),
                c_prev: std::mem::replace(&mut state.c, next.c.clone()),
                gates,
                tanh_c,
                h_out,
                mask_h,
                probs: logp.mapv(f64::exp),
            });
        }
        (loss, steps)
    }

    /// Adds `scale * d(loss)/d(params)` into `grads`.
    fn backward(&self, steps: &[Step], grads: &mut [Array2<f64>], scale: f64) {
        let h = self.hidden();
        let mut dh_next = Array1::<f64>::zeros(h);
        let mut dc_next = Array1::<f64>::zeros(h);
        for st in steps.iter().rev() {
            let mut dlogits = st.probs.clone();
            dlogits[st.target as usize] -= 1.0;
            dlogits *= scale;
            outer_acc(&mut grads[WO], &dlogits, &st.h_out);
            grads[BO].row_mut(0).scaled_add(1.0, &dlogits);
            let mut dh = self.params[WO].t().dot(&dlogits);
            if let Some(m) = &st.mask_h {
                dh *= m;
            }
            dh += &dh_next;

            let i = st.gates.slice(s![..h]);
            let f = st.gates.slice(s![h..2 * h]);
            let g = st.gates.slice(s![2 * h..3 * h]);
            let o = st.gates.slice(s![3 * h..]);
            let d_o = &dh * &st.tanh_c;
            let dc = &dh * &o * &st.tanh_c.mapv(|t| 1.0 - t * t) + &dc_next;
            let mut dz = Array1::<f64>::zeros(4 * h);
            dz.slice_mut(s![..h]).assign(&(&dc * &g * &i.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![h..2 * h]).assign(&(&dc * &st.c_prev * &f.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![2 * h..3 * h]).assign(&(&dc * &i * &g.mapv(|v| 1.0 - v * v)));
            dz.slice_mut(s![3 * h..]).assign(&(&d_o * &o.mapv(|v| v * (1.0 - v))));
            dc_next = &dc * &f;

            outer_acc(&mut grads[WX], &dz, &st.x);
            outer_acc(&mut grads[WH], &dz, &st.h_prev);
            grads[B].row_mut(0).scaled_add(1.0, &dz);
            let mut dx = self.params[WX].t().dot(&dz);
            if let Some(m) = &st.mask_x {
                dx *= m;
            }
            grads[EMB].row_mut(st.input as usize).scaled_add(1.0, &dx);
            dh_next = self.params[WH].t().dot(&dz);
        }
    }

    fn zero_grads(&self) -> Vec<Array2<f64>> {
        self.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect()
    }

    /// Mean per-token cross-entropy of one sequence, dropout off.
    pub fn loss(&self, seq: &[u32]) -> Result<f64> {
        self.check_sequence(seq)?;
        let (loss, steps) = self.forward(seq, None);
        Ok(loss / steps.len() as f64)
    }

    /// Mean per-token loss and its gradient per parameter block, dropout off.
    pub fn loss_and_gradients(&self, seq: &[u32]) -> Result<(f64, Vec<Array2<f64>>)> {
        self.check_sequence(seq)?;
        let (loss, steps) = self.forward(seq, None);
        let n = steps.len() as f64;
        let mut grads = self.zero_grads();
        self.backward(&steps, &mut grads, 1.0 / n);
        Ok((loss / n, grads))
    }

    /// Token-weighted mean cross-entropy over many sequences, dropout off.
    pub fn mean_cross_entropy(&self, seqs: &[Vec<u32>]) -> Result<f64> {
        let (mut total, mut count) = (0.0, 0usize);
        for seq in seqs {
            self.check_sequence(seq)?;
            let (loss, steps) = self.forward(seq, None);
            total += loss;
            count += steps.len();
        }
        if count == 0 {
            return Err(Error::InsufficientData("no tokens to evaluate".into()));
        }
        Ok(total / count as f64)
    }

    pub fn train(vocab: Vocabulary, stories: &[Vec<u32>], config: NeuralConfig) -> Result<(NeuralLm, TrainingLog)> {
        Self::train_with_callback(vocab, stories, config, |_, _| {})
    }

    /// Trains on `<s>`-initial story sequences; `on_epoch` sees the model
    /// after every epoch.
    pub fn train_with_callback(
        vocab: Vocabulary,
        stories: &[Vec<u32>],
        config: NeuralConfig,
        mut on_epoch: impl FnMut(usize, &NeuralLm),
    ) -> Result<(NeuralLm, TrainingLog)> {
        let mut model = NeuralLm::new(vocab, config.clone())?;
        for s in stories {
            model.check_sequence(s)?;
        }
        if stories.is_empty() {
            return Err(Error::InsufficientData("no training stories".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..stories.len()).collect();
        order.shuffle(&mut rng);
        let n_val = if stories.len() >= 2 {
            ((stories.len() as f64 * config.validation_fraction).ceil() as usize).min(stories.len() - 1)
        } else {
            0
        };
        let validation: Vec<Vec<u32>> = order[..n_val].iter().map(|&i| stories[i].clone()).collect();
        let mut train_idx: Vec<usize> = order[n_val..].to_vec();
        let mut log = TrainingLog {
            train_stories: train_idx.len(),
            validation_stories: n_val,
            epochs: Vec::new(),
        };

        let mut adam_m = model.zero_grads();
        let mut adam_v = model.zero_grads();
        let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut t = 0i32;
        let mut step = 0usize;
        for epoch in 1..=config.epochs {
            train_idx.shuffle(&mut rng);
            let (mut epoch_loss, mut epoch_tokens) = (0.0, 0usize);
            for batch in train_idx.chunks(config.batch_size) {
                let mut grads = model.zero_grads();
                let tokens: usize = batch.iter().map(|&i| stories[i].len() - 1).sum();
                for &i in batch {
                    let (loss, steps) = model.forward(&stories[i], Some(&mut rng));
                    if !loss.is_finite() {
                        return Err(Error::TrainingFailure {
                            step,
                            reason: "non-finite loss".into(),
                        });
                    }
                    epoch_loss += loss;
                    model.backward(&steps, &mut grads, 1.0 / tokens as f64);
                }
                epoch_tokens += tokens;
                if config.clip_norm > 0.0 {
                    let norm = grads.iter().map(|g| g.mapv(|v| v * v).sum()).sum::<f64>().sqrt();
                    if norm > config.clip_norm {
                        let k = config.clip_norm / norm;
                        grads.iter_mut().for_each(|g| *g *= k);
                    }
                }
                t += 1;
                let lr = config.learning_rate * (1.0 - beta2.powi(t)).sqrt() / (1.0 - beta1.powi(t));
                for ((p, g), (m, v)) in model
                    .params
                    .iter_mut()
                    .zip(&grads)
                    .zip(adam_m.iter_mut().zip(adam_v.iter_mut()))
                {
                    ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p -= lr * *m / (v.sqrt() + eps);
                    });
                }
                step += 1;
            }
            let validation_perplexity = if validation.is_empty() {
                None
            } else {
                Some(model.mean_cross_entropy(&validation)?.exp())
            };
            log.epochs.push(EpochStats {
                epoch,
                train_loss: epoch_loss / epoch_tokens.max(1) as f64,
                validation_perplexity,
            });
            on_epoch(epoch, &model);
        }
        Ok((model, log))
    }

    /// Little-endian checkpoint: magic, version, block count, then per block
    /// `rows: u32, cols: u32` and row-major `f64` values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.parameter_count() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&(p.nrows() as u32).to_le_bytes());
            out.extend_from_slice(&(p.ncols() as u32).to_le_bytes());
            for v in p.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// JSON sidecar holding configuration and vocabulary.
    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "format": SIDECAR_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.config,
            "vocab": self.vocab,
        }))?)
    }

    pub fn from_parts(bytes: &[u8], sidecar: &str) -> Result<NeuralLm> {
        let meta: serde_json::Value = serde_json::from_str(sidecar)?;
        if meta["format"] != SIDECAR_FORMAT || meta["version"] != CHECKPOINT_VERSION {
            return Err(Error::Format("unsupported neural LM sidecar".into()));
        }
        let config: NeuralConfig = serde_json::from_value(meta["config"].clone())?;
        let vocab: Vocabulary = serde_json::from_value::<Vocabulary>(meta["vocab"].clone())?.reindexed();
        let mut model = NeuralLm::new(vocab, config)?;

        let bad = |why: &str| Error::Format(format!("neural LM checkpoint: {why}"));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let chunk = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(chunk)
        };
        if take(8)? != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        if read_u32(take(4)?) != CHECKPOINT_VERSION {
            return Err(bad("unsupported version"));
        }
        if read_u32(take(4)?) as usize != model.params.len() {
            return Err(bad("wrong block count"));
        }
        for p in model.params.iter_mut() {
            let rows = read_u32(take(4)?) as usize;
            let cols = read_u32(take(4)?) as usize;
            if (rows, cols) != p.dim() {
                return Err(bad("block shape does not match the sidecar config"));
            }
            let raw = take(rows * cols * 8)?;
            for (dst, src) in p.iter_mut().zip(raw.chunks_exact(8)) {
                *dst = f64::from_le_bytes(src.try_into().unwrap());
            }
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(model)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        std::fs::write(&bin, self.to_bytes()).map_err(|e| Error::io(&bin, e))?;
        std::fs::write(&json, self.sidecar_json()?).map_err(|e| Error::io(&json, e))?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<NeuralLm> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let sidecar = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        Self::from_parts(&bytes, &sidecar)
    }
}

impl LanguageModel for NeuralLm {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, history: &[u32]) -> Result<Vec<f64>> {
        check_ids(&self.vocab, history)?;
        let st = self.run_from_start(history);
        Ok(self.output_log_probs(&st.h).mapv(f64::exp).to_vec())
    }

    fn seq_logprob(&self, tokens: &[u32], context: Option<&[u32]>) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::InvalidInput("cannot score an empty sequence".into()));
        }
        check_ids(&self.vocab, tokens)?;
        let ctx = context.unwrap_or(&[]);
        check_ids(&self.vocab, ctx)?;
        let mut st = self.run_from_start(ctx);
        let mut total = 0.0;
        for &t in tokens {
            total += self.output_log_probs(&st.h)[t as usize];
            st = self.advance(&st, t);
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langmodel::BOUNDARY;

    fn tiny_vocab(n: usize) -> Vocabulary {
        Vocabulary::from_tokens(
            ["<unk>", "<s>", "</s>"]
                .iter()
                .map(|s| s.to_string())
                .chain((0..n).map(|i| format!("w{i}")))
                .collect(),
            1,
        )
    }

    fn tiny_config(dim: usize) -> NeuralConfig {
        NeuralConfig {
            embed_dim: dim,
            hidden_dim: dim,
            epochs: 0,
            batch_size: 2,
            init_scale: 0.5,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut lm = NeuralLm::new(tiny_vocab(4), tiny_config(6)).unwrap();
        // Push biases away from zero so every block gets a generic gradient.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for b in [B, BO] {
            lm.params[b].mapv_inplace(|v| v + rng.gen_range(-0.5..0.5));
        }
        let seq = vec![BOS, 3, 4, BOUNDARY, 5, 6, 3, BOUNDARY];
        let (_, grads) = lm.loss_and_gradients(&seq).unwrap();
        let h = 1e-5;
        for (k, name) in PARAM_BLOCKS.iter().enumerate() {
            let mut num = Array2::<f64>::zeros(lm.params[k].raw_dim());
            for idx in 0..lm.params[k].len() {
                let (r, c) = (idx / lm.params[k].ncols(), idx % lm.params[k].ncols());
                let orig = lm.params[k][[r, c]];
                lm.params[k][[r, c]] = orig + h;
                let plus = lm.loss(&seq).unwrap();
                lm.params[k][[r, c]] = orig - h;
                let minus = lm.loss(&seq).unwrap();
                lm.params[k][[r, c]] = orig;
                num[[r, c]] = (plus - minus) / (2.0 * h);
            }
            let diff = (&grads[k] - &num).mapv(|v| v * v).sum().sqrt();
            let scale = grads[k].mapv(|v| v * v).sum().sqrt().max(num.mapv(|v| v * v).sum().sqrt());
            assert!(scale > 0.0, "{name} has zero gradient");
            assert!(diff / scale <= 1e-4, "{name}: relative error {}", diff / scale);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_inference_is_deterministic() {
        let lm = NeuralLm::new(tiny_vocab(5), tiny_config(8)).unwrap();
        for hist in [vec![], vec![3], vec![4, 5, BOUNDARY, 6]] {
            let d = lm.next_distribution(&hist).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        let a = lm.seq_logprob(&[3, 4, BOUNDARY], Some(&[5, 6])).unwrap();
        let b = lm.seq_logprob(&[3, 4, BOUNDARY], Some(&[5, 6])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seq_logprob_matches_loss() {
        let lm = NeuralLm::new(tiny_vocab(4), tiny_config(5)).unwrap();
        let seq = [BOS, 3, 4, 5, BOUNDARY];
        let lp = lm.seq_logprob(&seq[1..], None).unwrap();
        let loss = lm.loss(&seq).unwrap();
        assert!((lp + 4.0 * loss).abs() < 1e-12);
    }

    #[test]
    fn zero_epochs_leaves_initialization() {
        let vocab = tiny_vocab(4);
        let stories = vec![vec![BOS, 3, 4, BOUNDARY], vec![BOS, 5, 6, BOUNDARY]];
        let (trained, log) = NeuralLm::train(vocab.clone(), &stories, tiny_config(4)).unwrap();
        let fresh = NeuralLm::new(vocab, tiny_config(4)).unwrap();
        assert!(log.epochs.is_empty());
        assert_eq!(
            trained.mean_cross_entropy(&stories).unwrap(),
            fresh.mean_cross_entropy(&stories).unwrap()
        );
    }

    #[test]
    fn checkpoint_round_trip() {
        let lm = NeuralLm::new(tiny_vocab(3), tiny_config(4)).unwrap();
        let back = NeuralLm::from_parts(&lm.to_bytes(), &lm.sidecar_json().unwrap()).unwrap();
        assert_eq!(back, lm);
        let mut truncated = lm.to_bytes();
        truncated.pop();
        assert!(NeuralLm::from_parts(&truncated, &lm.sidecar_json().unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let lm = NeuralLm::new(tiny_vocab(3), tiny_config(4)).unwrap();
        assert!(lm.seq_logprob(&[42], None).is_err());
        assert!(lm.loss(&[3, 4]).is_err());
        assert!(NeuralLm::new(tiny_vocab(3), NeuralConfig { dropout: 1.0, ..tiny_config(4) }).is_err());
    }
}
