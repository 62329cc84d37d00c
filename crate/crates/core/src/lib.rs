//! Edit-tag grammatical error correction.
//!
//! Corrections are expressed as per-token edit tags (`$KEEP`, `$DELETE`,
//! `$APPEND_x`, `$REPLACE_x`, and g-transformations). A tagger predicts a
//! probability distribution over a tag vocabulary for every position; the
//! decoder applies the most probable tags and iterates. Neural taggers are
//! external and plug in through probability-matrix files; [`tagger::BaselineModel`]
//! is a small count-based tagger for experiments without one.
//!
//! ```
//! use gec_editkit::{align::encode_tags, decode::apply_tags, TokenSeq, VerbLexicon};
//!
//! let lex = VerbLexicon::empty();
//! let src = TokenSeq::from_line("He go home");
//! let tgt = TokenSeq::from_line("He goes home");
//! let tags = encode_tags(&src, &tgt, &lex);
//! assert_eq!(tags.to_line(), "$KEEP $KEEP $REPLACE_goes $KEEP");
//! assert_eq!(apply_tags(&src, &tags, &lex).unwrap(), tgt);
//! ```

pub mod align;
pub mod cli;
pub mod data;
pub mod decode;
pub mod edit;
pub mod ensemble;
pub mod error;
pub mod score;
pub mod tagger;
pub mod transforms;

pub use edit::{EditSpan, Hyperparams, Tag, TagSeq, TokenSeq, apply_edits};
pub use error::{Error, Result};
pub use transforms::VerbLexicon;
