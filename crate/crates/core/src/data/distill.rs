use rayon::prelude::*;
use serde::Serialize;

use super::corpus::{ParallelCorpus, SentencePair};
use crate::edit::TokenSeq;
use crate::error::{Error, Result};

/// Sentences corrected in parallel per batch; results are consumed in input
/// order, so the batch size only affects wasted work past the limit.
const BATCH: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DistillStats {
    /// Sentences consumed up to and including the one that filled the limit.
    pub processed: usize,
    /// Sentences the corrector changed (equals the number of emitted pairs).
    pub edited: usize,
    /// Sentences the corrector failed on; they are skipped.
    pub failed: usize,
}

impl DistillStats {
    pub fn edited_fraction(&self) -> f64 {
        if self.processed == 0 {
            0.0
        } else {
            self.edited as f64 / self.processed as f64
        }
    }
}

/// Streams `sentences` through `corrector` and keeps `(input, output)` pairs
/// the corrector changed, in input order, until `limit` pairs are collected.
pub fn distill<F, I>(corrector: F, sentences: I, limit: usize) -> Result<(ParallelCorpus, DistillStats)>
where
    F: Fn(&TokenSeq) -> Result<TokenSeq> + Sync,
    I: IntoIterator<Item = TokenSeq>,
{
    if limit == 0 {
        return Err(Error::Contract("distillation limit must be at least 1".into()));
    }
    let mut stream = sentences.into_iter();
    let mut corpus = ParallelCorpus::default();
    let mut stats = DistillStats::default();
    loop {
        let batch: Vec<TokenSeq> = stream.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let results: Vec<Result<TokenSeq>> = batch.par_iter().map(&corrector).collect();
        for (source, result) in batch.into_iter().zip(results) {
            stats.processed += 1;
            match result {
                Err(_) => stats.failed += 1,
                Ok(output) if output != source => {
                    stats.edited += 1;
                    corpus
                        .push(SentencePair::new(source, output).expect("differing sides are not both empty"));
                    if corpus.len() == limit {
                        return Ok((corpus, stats));
                    }
                }
                Ok(_) => {}
            }
        }
    }
    Ok((corpus, stats))
}
