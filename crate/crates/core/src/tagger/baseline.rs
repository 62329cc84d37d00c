use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TagDistribution, Tagger};
use crate::data::{ParallelCorpus, TagVocab, encoding_passes};
use crate::edit::{TokenSeq, parse_tag};
use crate::error::{Error, Result};
use crate::transforms::VerbLexicon;

const MODEL_FORMAT: &str = "gec-editkit/baseline-v1";
const START: &str = "<S>";
const PAD: &str = "<PAD>";

/// Tag counts per context window, one table per window width `0..=max`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContextCounts {
    tables: Vec<BTreeMap<String, BTreeMap<usize, u64>>>,
}

impl ContextCounts {
    pub fn new(max_width: usize) -> Self {
        ContextCounts {
            tables: vec![BTreeMap::new(); max_width + 1],
        }
    }

    pub fn max_width(&self) -> usize {
        self.tables.len().saturating_sub(1)
    }

    fn add(&mut self, width: usize, key: String, tag: usize) {
        *self.tables[width].entry(key).or_default().entry(tag).or_insert(0) += 1;
    }

    /// Counts add; merging is associative and commutative.
    pub fn merge(mut self, other: ContextCounts) -> ContextCounts {
        if other.tables.len() > self.tables.len() {
            self.tables.resize(other.tables.len(), BTreeMap::new());
        }
        for (mine, theirs) in self.tables.iter_mut().zip(other.tables) {
            for (key, tags) in theirs {
                let slot = mine.entry(key).or_default();
                for (tag, n) in tags {
                    *slot.entry(tag).or_insert(0) += n;
                }
            }
        }
        self
    }

    pub fn get(&self, width: usize, key: &str) -> Option<&BTreeMap<usize, u64>> {
        self.tables.get(width)?.get(key)
    }

    pub fn is_empty(&self) -> bool {
        self.tables.iter().all(BTreeMap::is_empty)
    }
}

/// Window of `2 * width + 1` tokens centred on `pos` in `[START] + tokens`.
fn context_key(tokens: &[String], pos: usize, width: usize) -> String {
    let token_at = |i: isize| -> &str {
        if i == 0 {
            START
        } else if i < 0 || i as usize > tokens.len() {
            PAD
        } else {
            &tokens[i as usize - 1]
        }
    };
    let pos = pos as isize;
    let w = width as isize;
    (pos - w..=pos + w).map(token_at).collect::<Vec<_>>().join(" ")
}

/// Count-based tagger with additive smoothing. Unseen contexts back off to
/// narrower windows, down to the current token alone.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    vocab: TagVocab,
    context_width: usize,
    smoothing: f64,
    counts: ContextCounts,
}

impl PartialEq for BaselineModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.context_width == other.context_width
            && self.smoothing.to_bits() == other.smoothing.to_bits()
            && self.counts == other.counts
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    context_width: usize,
    smoothing: f64,
    vocab: Vec<String>,
    counts: ContextCounts,
}

impl BaselineModel {
    pub fn untrained(vocab: TagVocab, context_width: usize, smoothing: f64) -> Result<Self> {
        Self::with_counts(vocab, context_width, smoothing, ContextCounts::new(context_width))
    }

    pub fn with_counts(
        vocab: TagVocab,
        context_width: usize,
        smoothing: f64,
        counts: ContextCounts,
    ) -> Result<Self> {
        if !(smoothing.is_finite() && smoothing >= 0.0) {
            return Err(Error::Contract(format!(
                "smoothing {smoothing} must be finite and >= 0"
            )));
        }
        if counts.max_width() != context_width {
            return Err(Error::Contract(format!(
                "counts cover width {} but the model uses {context_width}",
                counts.max_width()
            )));
        }
        if let Some(bad) = counts
            .tables
            .iter()
            .flat_map(|t| t.values())
            .flat_map(|tags| tags.keys())
            .find(|&&idx| idx >= vocab.len())
        {
            return Err(Error::Contract(format!("tag index {bad} outside the vocabulary")));
        }
        Ok(BaselineModel {
            vocab,
            context_width,
            smoothing,
            counts,
        })
    }

    pub fn context_width(&self) -> usize {
        self.context_width
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn counts(&self) -> &ContextCounts {
        &self.counts
    }

    fn row_for(&self, tokens: &[String], pos: usize) -> Vec<f64> {
        let v = self.vocab.len();
        let observed = (0..=self.context_width)
            .rev()
            .find_map(|w| self.counts.get(w, &context_key(tokens, pos, w)));
        let total: u64 = observed.map_or(0, |tags| tags.values().sum());
        let denom = total as f64 + self.smoothing * v as f64;
        if denom <= 0.0 {
            return vec![1.0 / v as f64; v];
        }
        let mut row = vec![self.smoothing / denom; v];
        if let Some(tags) = observed {
            for (&tag, &n) in tags {
                row[tag] = (n as f64 + self.smoothing) / denom;
            }
        }
        row
    }

    pub fn save<W: Write>(&self, mut writer: W) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            context_width: self.context_width,
            smoothing: self.smoothing,
            vocab: self.vocab.tags().iter().map(ToString::to_string).collect(),
            counts: self.counts.clone(),
        };
        serde_json::to_writer(&mut writer, &file).map_err(std::io::Error::from)?;
        writeln!(writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R, origin: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_reader(reader).map_err(|e| Error::format(origin, e.line(), e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::format(
                origin,
                1,
                format!("unsupported model format {:?}", file.format),
            ));
        }
        let tags = file
            .vocab
            .iter()
            .map(|t| parse_tag(t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::format(origin, 1, e.to_string()))?;
        let vocab = TagVocab::from_tags(tags).map_err(|e| Error::format(origin, 1, e.to_string()))?;
        Self::with_counts(vocab, file.context_width, file.smoothing, file.counts)
            .map_err(|e| Error::format(origin, 1, e.to_string()))
    }
}

impl Tagger for BaselineModel {
    fn vocab(&self) -> &TagVocab {
        &self.vocab
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        let rows: Vec<Vec<f64>> = (0..=tokens.len()).map(|pos| self.row_for(tokens, pos)).collect();
        let error_probs = rows
            .iter()
            .map(|row| (1.0 - row[TagVocab::KEEP_INDEX]).clamp(0.0, 1.0))
            .collect();
        Ok(TagDistribution {
            vocab_id: self.vocab.id().to_string(),
            rows,
            error_probs,
        })
    }
}

fn count_pair(
    mut counts: ContextCounts,
    source: &TokenSeq,
    target: &TokenSeq,
    vocab: &TagVocab,
    context_width: usize,
    lexicon: &VerbLexicon,
) -> ContextCounts {
    let mut passes = encoding_passes(source, target, lexicon);
    // The converged sentence contributes its all-KEEP pass too.
    passes.push((target.clone(), crate::edit::TagSeq::all_keep(target.len())));
    for (tokens, tags) in passes {
        for (pos, tag) in tags.tags().iter().enumerate() {
            let tag = vocab.index_or_unknown(tag);
            for w in 0..=context_width {
                counts.add(w, context_key(&tokens, pos, w), tag);
            }
        }
    }
    counts
}

/// Accumulates tag counts over every encoding pass of every pair.
pub fn train_baseline(
    corpus: &ParallelCorpus,
    vocab: TagVocab,
    context_width: usize,
    smoothing: f64,
    lexicon: &VerbLexicon,
) -> Result<BaselineModel> {
    let counts = corpus
        .pairs()
        .par_iter()
        .fold(
            || ContextCounts::new(context_width),
            |acc, pair| count_pair(acc, &pair.source, &pair.target, &vocab, context_width, lexicon),
        )
        .reduce(|| ContextCounts::new(context_width), ContextCounts::merge);
    BaselineModel::with_counts(vocab, context_width, smoothing, counts)
}
