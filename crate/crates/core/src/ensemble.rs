//! Ensembling: averaging of tag probabilities inside the decoding loop, and
//! majority votes on span edits extracted from each member's output.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::align::extract_edits;
use crate::data::TagVocab;
use crate::decode::{CorrectionResult, run_pipeline};
use crate::edit::{EditSpan, Hyperparams, TokenSeq, apply_edits};
use crate::error::{Error, Result};
use crate::tagger::{TagDistribution, Tagger};
use crate::transforms::VerbLexicon;

/// Mean of `values` that is independent of their order and exact when all
/// values are equal.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let low = values[0];
    let spread: f64 = values.iter().map(|v| v - low).sum();
    low + spread / values.len() as f64
}

/// Element-wise mean of rows and error probabilities. Members must share a
/// vocabulary and shape.
pub fn average_distributions(dists: &[TagDistribution]) -> Result<TagDistribution> {
    let Some(first) = dists.first() else {
        return Err(Error::Contract(
            "averaging needs at least one distribution".into(),
        ));
    };
    for (member, d) in dists.iter().enumerate().skip(1) {
        if d.vocab_id != first.vocab_id {
            return Err(Error::EnsembleMember {
                member,
                reason: format!("vocabulary {} differs from {}", d.vocab_id, first.vocab_id),
            });
        }
        let same_shape = d.rows.len() == first.rows.len()
            && d.error_probs.len() == first.error_probs.len()
            && d.rows.iter().zip(&first.rows).all(|(a, b)| a.len() == b.len());
        if !same_shape {
            return Err(Error::EnsembleMember {
                member,
                reason: "distribution shape differs from member 0".into(),
            });
        }
    }

    let mut scratch = vec![0.0; dists.len()];
    let mut mean_at = |get: &dyn Fn(&TagDistribution) -> f64| {
        for (slot, d) in scratch.iter_mut().zip(dists) {
            *slot = get(d);
        }
        stable_mean(&mut scratch)
    };
    let rows = (0..first.rows.len())
        .map(|r| {
            (0..first.rows[r].len())
                .map(|c| mean_at(&|d: &TagDistribution| d.rows[r][c]))
                .collect()
        })
        .collect();
    let error_probs = (0..first.error_probs.len())
        .map(|i| mean_at(&|d: &TagDistribution| d.error_probs[i]))
        .collect();
    Ok(TagDistribution {
        vocab_id: first.vocab_id.clone(),
        rows,
        error_probs,
    })
}

/// A tagger whose prediction is the average of its members' predictions.
pub struct AveragingEnsemble<T> {
    members: Vec<T>,
}

impl<T: Tagger> AveragingEnsemble<T> {
    pub fn new(members: Vec<T>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Contract("ensemble needs at least one member".into()));
        };
        let id = first.vocab().id().to_string();
        if let Some(member) = members.iter().position(|m| m.vocab().id() != id) {
            return Err(Error::EnsembleMember {
                member,
                reason: "averaging requires identical tag vocabularies".into(),
            });
        }
        Ok(AveragingEnsemble { members })
    }

    pub fn members(&self) -> &[T] {
        &self.members
    }
}

impl<T: Tagger> Tagger for AveragingEnsemble<T> {
    fn vocab(&self) -> &TagVocab {
        self.members[0].vocab()
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        let dists = self
            .members
            .par_iter()
            .map(|m| m.predict(tokens))
            .collect::<Result<Vec<_>>>()?;
        average_distributions(&dists)
    }
}

/// Vote counts per exact `(start, end, replacement)` edit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    counts: BTreeMap<EditSpan, usize>,
    n_models: usize,
}

impl VoteTally {
    /// Each member votes at most once per edit.
    pub fn from_outputs(source: &TokenSeq, outputs: &[TokenSeq]) -> Self {
        let mut counts = BTreeMap::new();
        for output in outputs {
            for edit in extract_edits(source, output) {
                *counts.entry(edit).or_insert(0) += 1;
            }
        }
        VoteTally {
            counts,
            n_models: outputs.len(),
        }
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn votes(&self, edit: &EditSpan) -> usize {
        self.counts.get(edit).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EditSpan, usize)> {
        self.counts.iter().map(|(e, &n)| (e, n))
    }

    /// Edits with at least `n_min` votes, before conflict resolution.
    pub fn survivors(&self, n_min: usize) -> Vec<(EditSpan, usize)> {
        self.counts
            .iter()
            .filter(|&(_, &n)| n >= n_min)
            .map(|(e, &n)| (e.clone(), n))
            .collect()
    }
}

/// Greedy resolution of conflicting survivors: more votes first, then the
/// smaller start, the shorter span and the lexicographically smaller
/// replacement. Returned edits are sorted by position.
pub fn resolve_conflicts(mut survivors: Vec<(EditSpan, usize)>) -> Vec<EditSpan> {
    survivors.sort_by(|(a, va), (b, vb)| {
        vb.cmp(va)
            .then(a.start().cmp(&b.start()))
            .then(a.width().cmp(&b.width()))
            .then_with(|| a.replacement().cmp(b.replacement()))
    });
    let mut kept: Vec<EditSpan> = Vec::new();
    for (edit, _) in survivors {
        if kept.iter().all(|k| !k.conflicts(&edit)) {
            kept.push(edit);
        }
    }
    kept.sort();
    kept
}

fn check_quorum(n_min: usize, members: usize) -> Result<()> {
    if n_min == 0 || n_min > members {
        return Err(Error::Contract(format!(
            "n_min {n_min} must lie in [1, {members}] for {members} ensemble members"
        )));
    }
    Ok(())
}

/// Span-level majority vote over member outputs with quorum `n_min`.
pub fn majority_vote(source: &TokenSeq, outputs: &[TokenSeq], n_min: usize) -> Result<Vec<EditSpan>> {
    check_quorum(n_min, outputs.len())?;
    let tally = VoteTally::from_outputs(source, outputs);
    Ok(resolve_conflicts(tally.survivors(n_min)))
}

/// Applies the surviving votes to the source once.
pub fn vote_correct(source: &TokenSeq, outputs: &[TokenSeq], n_min: usize) -> Result<TokenSeq> {
    let edits = majority_vote(source, outputs, n_min)?;
    apply_edits(source, &edits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleMode {
    Average,
    Vote,
}

/// Corrects `source` with an ensemble of taggers.
///
/// AVERAGE runs the iterative pipeline on the averaged distribution. VOTE
/// runs the pipeline per member and votes on their outputs with
/// `hp.n_min`.
pub fn ensemble_correct<T: Tagger>(
    source: &TokenSeq,
    members: &[T],
    hp: &Hyperparams,
    mode: EnsembleMode,
    lexicon: &VerbLexicon,
) -> Result<TokenSeq> {
    match mode {
        EnsembleMode::Average => {
            let ensemble = AveragingEnsemble::new(members.iter().collect())?;
            Ok(run_pipeline(&ensemble, source, hp, lexicon)?.output)
        }
        EnsembleMode::Vote => {
            check_quorum(hp.n_min, members.len())?;
            let outputs = members
                .par_iter()
                .map(|m| run_pipeline(m, source, hp, lexicon).map(|r: CorrectionResult| r.output))
                .collect::<Result<Vec<_>>>()?;
            vote_correct(source, &outputs, hp.n_min)
        }
    }
}
