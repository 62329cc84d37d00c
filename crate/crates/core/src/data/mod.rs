//! Corpus and vocabulary lifecycle: file formats, vocabulary construction,
//! filtering, hyperparameter search and distillation.

mod corpus;
mod distill;
mod m2;
mod tune;
mod vocab;

pub use corpus::{
    ParallelCorpus, SentencePair, filter_edit_free, read_sentences, read_tsv, write_sentences, write_tsv,
};
pub use distill::{DistillStats, distill};
pub use m2::{Annotation, M2Edit, M2Sentence, read_m2, sentence_with_edits, write_m2};
pub use tune::{Trial, TuneOutcome, tune_hyperparams};
pub use vocab::{
    MANDATORY_TAGS, TagVocab, VOCAB_HEADER, build_vocab, count_tags, encoding_passes, vocab_from_counts,
};
