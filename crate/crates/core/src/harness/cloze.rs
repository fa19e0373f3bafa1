use rayon::prelude::*;
use serde::Serialize;

use super::StyleClassifier;
use crate::corpus::{Choice, ClozeInstance, PairedChoice};
use crate::error::{Error, Result};
use crate::textproc::Annotator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RulePath {
    /// One ending labeled right, the other wrong; kept as is.
    LabelsDiffer,
    /// Same label for both; the less confident one was reversed.
    Flipped,
    /// Same label and equal posteriors; A by convention.
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClozeDecision {
    pub id: String,
    pub chosen: Choice,
    /// `P(right)` for endings A and B.
    pub posteriors: (f64, f64),
    pub rule: RulePath,
}

/// Two-step rule over the right-class posteriors of endings A and B.
///
/// Each ending is labeled right iff its posterior exceeds 0.5. Differing
/// labels are kept. Otherwise the ending whose assigned label has the lower
/// posterior has its label reversed.
pub fn decide(id: impl Into<String>, pa: f64, pb: f64) -> ClozeDecision {
    let (la, lb) = (pa > 0.5, pb > 0.5);
    let (chosen, rule) = if la != lb {
        (if la { Choice::A } else { Choice::B }, RulePath::LabelsDiffer)
    } else {
        // The assigned label's posterior is p for right and 1 - p for
        // wrong; compare on p directly to avoid rounding in 1 - p.
        let a_less_confident = if la { pa < pb } else { pa > pb };
        if pa == pb {
            (Choice::A, RulePath::Tie)
        } else {
            let reversed = if a_less_confident { Choice::A } else { Choice::B };
            let chosen = if la { reversed.other() } else { reversed };
            (chosen, RulePath::Flipped)
        }
    };
    ClozeDecision {
        id: id.into(),
        chosen,
        posteriors: (pa, pb),
        rule,
    }
}

pub fn cloze_decide(
    classifier: &StyleClassifier,
    annotator: &Annotator,
    instance: &ClozeInstance,
) -> Result<ClozeDecision> {
    let pa = classifier.posterior(&annotator.annotate(&instance.ending_a)?)?;
    let pb = classifier.posterior(&annotator.annotate(&instance.ending_b)?)?;
    Ok(decide(&instance.id, pa, pb))
}

/// Fraction of instances where the decider picks the gold ending.
pub fn cloze_eval<F>(decider: F, instances: &[ClozeInstance]) -> Result<f64>
where
    F: Fn(&ClozeInstance) -> Result<Choice> + Sync,
{
    if instances.is_empty() {
        return Err(Error::InsufficientData("no cloze instances to evaluate".into()));
    }
    let correct: usize = instances
        .par_iter()
        .map(|inst| decider(inst).map(|c| usize::from(c == inst.gold)))
        .sum::<Result<usize>>()?;
    Ok(correct as f64 / instances.len() as f64)
}

/// The premise stands in as the first context sentence.
pub fn paired_as_cloze(item: &PairedChoice) -> ClozeInstance {
    ClozeInstance {
        id: item.id.clone(),
        context: [item.premise.clone(), String::new(), String::new(), String::new()],
        ending_a: item.alt1.clone(),
        ending_b: item.alt2.clone(),
        gold: item.gold,
    }
}

/// Treats the alternatives as an ending pair; the premise is ignored.
pub fn paired_choice_eval(
    classifier: &StyleClassifier,
    annotator: &Annotator,
    items: &[PairedChoice],
) -> Result<f64> {
    let instances: Vec<ClozeInstance> = items.iter().map(paired_as_cloze).collect();
    cloze_eval(
        |inst| cloze_decide(classifier, annotator, inst).map(|d| d.chosen),
        &instances,
    )
}
