//! The prediction boundary. Anything that turns a token sequence into
//! per-position tag probabilities implements [`Tagger`].

mod baseline;
mod matrix;

pub use baseline::{BaselineModel, ContextCounts, train_baseline};
pub use matrix::{
    MATRIX_FORMAT, MatrixHeader, MatrixReader, MatrixRecord, MatrixTagger, MatrixWriter, MissingSentence,
    read_matrix_file, write_matrix_file,
};

use crate::align::encode_tags;
use crate::data::TagVocab;
use crate::edit::TokenSeq;
use crate::error::{Error, Result};
use crate::transforms::VerbLexicon;

/// Row sums must be within this of 1 for in-memory distributions.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Per-position probabilities over a tag vocabulary. Position 0 is the
/// sentinel START position.
#[derive(Debug, Clone, PartialEq)]
pub struct TagDistribution {
    pub vocab_id: String,
    pub rows: Vec<Vec<f64>>,
    /// Probability that each position needs an edit.
    pub error_probs: Vec<f64>,
}

impl TagDistribution {
    /// All mass on `$KEEP`, zero error probability.
    pub fn all_keep(vocab: &TagVocab, token_count: usize) -> Self {
        let mut row = vec![0.0; vocab.len()];
        row[TagVocab::KEEP_INDEX] = 1.0;
        TagDistribution {
            vocab_id: vocab.id().to_string(),
            rows: vec![row; token_count + 1],
            error_probs: vec![0.0; token_count + 1],
        }
    }

    pub fn positions(&self) -> usize {
        self.rows.len()
    }

    /// Checks shape, probability ranges and row normalisation.
    pub fn validate(&self, vocab_size: usize, tolerance: f64) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Distribution("no rows (START position missing)".into()));
        }
        if self.error_probs.len() != self.rows.len() {
            return Err(Error::Distribution(format!(
                "{} error probabilities for {} rows",
                self.error_probs.len(),
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != vocab_size {
                return Err(Error::Distribution(format!(
                    "row {i} has {} entries, vocabulary has {vocab_size}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !is_probability(**p)) {
                return Err(Error::Distribution(format!(
                    "row {i} holds {p}, not a probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Distribution(format!("row {i} sums to {sum}")));
            }
        }
        if let Some(p) = self.error_probs.iter().find(|p| !is_probability(**p)) {
            return Err(Error::Distribution(format!("error probability {p} out of range")));
        }
        Ok(())
    }
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

pub trait Tagger: Send + Sync {
    fn vocab(&self) -> &TagVocab;

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution>;
}

impl<T: Tagger + ?Sized> Tagger for &T {
    fn vocab(&self) -> &TagVocab {
        (**self).vocab()
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        (**self).predict(tokens)
    }
}

impl<T: Tagger + ?Sized> Tagger for Box<T> {
    fn vocab(&self) -> &TagVocab {
        (**self).vocab()
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        (**self).predict(tokens)
    }
}

/// Puts all mass on the tags `encode_tags` would emit toward a fixed target.
/// Useful as a perfect reference tagger; out-of-vocabulary tags fall on
/// `@@UNKNOWN@@`.
#[derive(Debug, Clone)]
pub struct OracleTagger {
    target: TokenSeq,
    vocab: TagVocab,
    lexicon: VerbLexicon,
}

impl OracleTagger {
    pub fn new(target: TokenSeq, vocab: TagVocab, lexicon: VerbLexicon) -> Self {
        OracleTagger {
            target,
            vocab,
            lexicon,
        }
    }
}

impl Tagger for OracleTagger {
    fn vocab(&self) -> &TagVocab {
        &self.vocab
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        let tags = encode_tags(tokens, &self.target, &self.lexicon);
        let mut dist = TagDistribution::all_keep(&self.vocab, tokens.len());
        for (pos, tag) in tags.tags().iter().enumerate() {
            if tag.is_keep() {
                continue;
            }
            let row = &mut dist.rows[pos];
            row[TagVocab::KEEP_INDEX] = 0.0;
            row[self.vocab.index_or_unknown(tag)] = 1.0;
            dist.error_probs[pos] = 1.0;
        }
        Ok(dist)
    }
}
