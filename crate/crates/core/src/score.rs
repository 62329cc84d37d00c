//! Span-level precision, recall and F0.5 by exact `(start, end, replacement)`
//! matching against (possibly multi-annotator) gold edits.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::extract_edits;
use crate::data::M2Sentence;
use crate::edit::{EditSpan, TokenSeq};
use crate::error::{Error, Result};

/// `(1 + β²)·P·R / (β²·P + R)`, on whatever scale `p` and `r` use.
/// Returns 0 when both are 0.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * p * r / denom
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 { 1.0 } else { num as f64 / den as f64 }
}

/// Micro-averaged counts with derived metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScoreReport {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ScoreReport {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        ScoreReport { tp, fp, fn_ }
    }

    /// `tp / (tp + fp)`, 1 when nothing was proposed.
    pub fn precision(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, 1 when nothing was expected.
    pub fn recall(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fn_)
    }

    pub fn f_half(&self) -> f64 {
        f_beta(self.precision(), self.recall(), 0.5)
    }
}

impl std::ops::Add for ScoreReport {
    type Output = ScoreReport;

    fn add(self, other: ScoreReport) -> ScoreReport {
        ScoreReport {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

impl std::iter::Sum for ScoreReport {
    fn sum<I: Iterator<Item = ScoreReport>>(iter: I) -> Self {
        iter.fold(ScoreReport::default(), |a, b| a + b)
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP {} FP {} FN {} P {:.2} R {:.2} F0.5 {:.2}",
            self.tp,
            self.fp,
            self.fn_,
            100.0 * self.precision(),
            100.0 * self.recall(),
            100.0 * self.f_half()
        )
    }
}

/// Counts for one sentence against the best-matching annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceScore {
    pub counts: ScoreReport,
    pub annotator: usize,
}

/// Scores `hyp` against each annotator's edits and keeps the annotator with
/// the highest sentence F0.5 (first one on ties). No annotators at all is
/// treated as one annotator with no edits.
pub fn score_sentence(hyp: &[EditSpan], gold: &[Vec<EditSpan>]) -> SentenceScore {
    let hyp: BTreeSet<&EditSpan> = hyp.iter().collect();
    let empty = Vec::new();
    let annotators: Vec<&Vec<EditSpan>> = if gold.is_empty() {
        vec![&empty]
    } else {
        gold.iter().collect()
    };

    let mut best: Option<(SentenceScore, f64)> = None;
    for (annotator, edits) in annotators.into_iter().enumerate() {
        let gold: BTreeSet<&EditSpan> = edits.iter().collect();
        let tp = hyp.intersection(&gold).count() as u64;
        let counts = ScoreReport::new(tp, hyp.len() as u64 - tp, gold.len() as u64 - tp);
        let f = counts.f_half();
        if best.as_ref().is_none_or(|(_, best_f)| f > *best_f) {
            best = Some((SentenceScore { counts, annotator }, f));
        }
    }
    best.expect("at least one annotator").0
}

/// Sums per-sentence counts. `hyp` holds each sentence's hypothesis edits.
pub fn score_corpus(hyp: &[Vec<EditSpan>], gold: &[M2Sentence]) -> Result<ScoreReport> {
    if hyp.len() != gold.len() {
        return Err(Error::Contract(format!(
            "{} hypothesis sentences but {} gold sentences",
            hyp.len(),
            gold.len()
        )));
    }
    Ok(hyp
        .par_iter()
        .zip(gold)
        .map(|(h, g)| score_sentence(h, &g.gold_edits()).counts)
        .reduce(ScoreReport::default, |a, b| a + b))
}

/// Extracts edits from corrected sentences and scores them. Each output must
/// correspond to the gold source at the same index.
pub fn score_outputs(outputs: &[TokenSeq], gold: &[M2Sentence]) -> Result<ScoreReport> {
    if outputs.len() != gold.len() {
        return Err(Error::Contract(format!(
            "{} hypothesis sentences but {} gold sentences",
            outputs.len(),
            gold.len()
        )));
    }
    let hyp: Vec<Vec<EditSpan>> = outputs
        .par_iter()
        .zip(gold)
        .map(|(out, g)| extract_edits(&g.source, out))
        .collect();
    score_corpus(&hyp, gold)
}
