//! Core value types: token sequences, edit tags, edit spans and decoding
//! hyperparameters, plus the simultaneous span-edit application used by
//! voting ensembles.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A whitespace-tokenized sentence. Every token is non-empty and free of
/// whitespace; the sequence itself may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

pub(crate) fn is_valid_token(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_whitespace)
}

impl TokenSeq {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
            return Err(Error::InvalidToken(bad.clone()));
        }
        Ok(TokenSeq(tokens))
    }

    pub fn empty() -> Self {
        TokenSeq(Vec::new())
    }

    /// Splits a line on whitespace. Never fails.
    pub fn from_line(line: &str) -> Self {
        TokenSeq(line.split_whitespace().map(str::to_string).collect())
    }

    /// Callers guarantee the tokens are valid.
    pub(crate) fn from_vec_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| is_valid_token(t)));
        TokenSeq(tokens)
    }

    pub fn to_line(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        TokenSeq::new(tokens)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Self {
        seq.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseVariant {
    /// First character upper-cased, the rest lower-cased.
    Capital,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Number {
    Singular,
    Plural,
}

/// One edit operation attached to a token position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Keep,
    Delete,
    Append(String),
    Replace(String),
    TransformCase(CaseVariant),
    TransformAgreement(Number),
    /// Verb form change keyed `FROM_TO`, e.g. `VB_VBZ`.
    TransformVerb(String),
    /// Joins the token with the following one (empty separator).
    Merge,
    SplitHyphen,
    Unknown,
}

const KEEP: &str = "$KEEP";
const DELETE: &str = "$DELETE";
const MERGE: &str = "$MERGE_SPACE";
const SPLIT_HYPHEN: &str = "$TRANSFORM_SPLIT_HYPHEN";
const UNKNOWN: &str = "@@UNKNOWN@@";
const APPEND_PREFIX: &str = "$APPEND_";
const REPLACE_PREFIX: &str = "$REPLACE_";
const CASE_PREFIX: &str = "$TRANSFORM_CASE_";
const AGREEMENT_PREFIX: &str = "$TRANSFORM_AGREEMENT_";
const VERB_PREFIX: &str = "$TRANSFORM_VERB_";

impl Tag {
    pub fn is_keep(&self) -> bool {
        matches!(self, Tag::Keep)
    }

    pub fn is_transform(&self) -> bool {
        matches!(
            self,
            Tag::TransformCase(_)
                | Tag::TransformAgreement(_)
                | Tag::TransformVerb(_)
                | Tag::Merge
                | Tag::SplitHyphen
        )
    }

    /// Tags allowed at the sentinel START position.
    pub fn allowed_at_start(&self) -> bool {
        matches!(self, Tag::Keep | Tag::Append(_))
    }

    pub fn append(token: impl Into<String>) -> Result<Tag> {
        let token = token.into();
        if !is_valid_token(&token) {
            return Err(Error::InvalidToken(token));
        }
        Ok(Tag::Append(token))
    }

    pub fn replace(token: impl Into<String>) -> Result<Tag> {
        let token = token.into();
        if !is_valid_token(&token) {
            return Err(Error::InvalidToken(token));
        }
        Ok(Tag::Replace(token))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Keep => f.write_str(KEEP),
            Tag::Delete => f.write_str(DELETE),
            Tag::Append(tok) => write!(f, "{APPEND_PREFIX}{tok}"),
            Tag::Replace(tok) => write!(f, "{REPLACE_PREFIX}{tok}"),
            Tag::TransformCase(v) => {
                let name = match v {
                    CaseVariant::Capital => "CAPITAL",
                    CaseVariant::Lower => "LOWER",
                    CaseVariant::Upper => "UPPER",
                };
                write!(f, "{CASE_PREFIX}{name}")
            }
            Tag::TransformAgreement(n) => {
                let name = match n {
                    Number::Singular => "SINGULAR",
                    Number::Plural => "PLURAL",
                };
                write!(f, "{AGREEMENT_PREFIX}{name}")
            }
            Tag::TransformVerb(key) => write!(f, "{VERB_PREFIX}{key}"),
            Tag::Merge => f.write_str(MERGE),
            Tag::SplitHyphen => f.write_str(SPLIT_HYPHEN),
            Tag::Unknown => f.write_str(UNKNOWN),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(text: &str) -> Result<Tag> {
        let bad = || Error::TagParse(text.to_string());
        match text {
            KEEP => return Ok(Tag::Keep),
            DELETE => return Ok(Tag::Delete),
            MERGE => return Ok(Tag::Merge),
            SPLIT_HYPHEN => return Ok(Tag::SplitHyphen),
            UNKNOWN => return Ok(Tag::Unknown),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix(CASE_PREFIX) {
            return match rest {
                "CAPITAL" => Ok(Tag::TransformCase(CaseVariant::Capital)),
                "LOWER" => Ok(Tag::TransformCase(CaseVariant::Lower)),
                "UPPER" => Ok(Tag::TransformCase(CaseVariant::Upper)),
                _ => Err(bad()),
            };
        }
        if let Some(rest) = text.strip_prefix(AGREEMENT_PREFIX) {
            return match rest {
                "SINGULAR" => Ok(Tag::TransformAgreement(Number::Singular)),
                "PLURAL" => Ok(Tag::TransformAgreement(Number::Plural)),
                _ => Err(bad()),
            };
        }
        let payload = |prefix: &str| {
            text.strip_prefix(prefix)
                .filter(|rest| is_valid_token(rest))
                .map(str::to_string)
        };
        if text.starts_with(VERB_PREFIX) {
            return payload(VERB_PREFIX).map(Tag::TransformVerb).ok_or_else(bad);
        }
        if text.starts_with(APPEND_PREFIX) {
            return payload(APPEND_PREFIX).map(Tag::Append).ok_or_else(bad);
        }
        if text.starts_with(REPLACE_PREFIX) {
            return payload(REPLACE_PREFIX).map(Tag::Replace).ok_or_else(bad);
        }
        Err(bad())
    }
}

pub fn parse_tag(text: &str) -> Result<Tag> {
    text.parse()
}

pub fn format_tag(tag: &Tag) -> String {
    tag.to_string()
}

/// One tag per position of `[START] + tokens`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagSeq(Vec<Tag>);

impl TagSeq {
    pub fn new(tags: Vec<Tag>) -> Result<Self> {
        match tags.first() {
            None => Err(Error::Contract(
                "tag sequence needs at least the START position".into(),
            )),
            Some(first) if !first.allowed_at_start() => Err(Error::InvalidStartTag(first.to_string())),
            Some(_) => Ok(TagSeq(tags)),
        }
    }

    pub fn all_keep(token_count: usize) -> Self {
        TagSeq(vec![Tag::Keep; token_count + 1])
    }

    /// Number of tokens the sequence is aligned to.
    pub fn token_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_all_keep(&self) -> bool {
        self.0.iter().all(Tag::is_keep)
    }

    pub fn edit_count(&self) -> usize {
        self.0.iter().filter(|t| !t.is_keep()).count()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Tag> {
        self.0
    }

    pub fn to_line(&self) -> String {
        self.0
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let tags = line
            .split_whitespace()
            .map(parse_tag)
            .collect::<Result<Vec<_>>>()?;
        TagSeq::new(tags)
    }
}

impl fmt::Display for TagSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Replacement of source tokens `[start, end)` by `replacement`.
///
/// `start == end` is a pure insertion (non-empty replacement); an empty
/// replacement over a non-empty range is a deletion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EditSpan {
    start: usize,
    end: usize,
    replacement: TokenSeq,
}

impl EditSpan {
    pub fn new(start: usize, end: usize, replacement: TokenSeq) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidSpan {
                start,
                end,
                reason: "start exceeds end",
            });
        }
        if start == end && replacement.is_empty() {
            return Err(Error::InvalidSpan {
                start,
                end,
                reason: "insertion with an empty replacement",
            });
        }
        Ok(EditSpan {
            start,
            end,
            replacement,
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn replacement(&self) -> &TokenSeq {
        &self.replacement
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.start < self.end && self.replacement.is_empty()
    }

    /// Source tokens covered by the span.
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    /// Two edits overlap when their source ranges intersect, when both
    /// insert at the same point, or when an insertion lands strictly inside
    /// the other edit's range.
    pub fn overlaps(&self, other: &EditSpan) -> bool {
        match (self.is_insertion(), other.is_insertion()) {
            (true, true) => self.start == other.start,
            (true, false) => other.start < self.start && self.start < other.end,
            (false, true) => self.start < other.start && other.start < self.end,
            (false, false) => self.start < other.end && other.start < self.end,
        }
    }

    /// [`overlaps`](Self::overlaps), plus an insertion touching either
    /// boundary of a non-empty range.
    pub fn conflicts(&self, other: &EditSpan) -> bool {
        if self.overlaps(other) {
            return true;
        }
        let touches = |ins: &EditSpan, span: &EditSpan| {
            ins.is_insertion() && !span.is_insertion() && (ins.start == span.start || ins.start == span.end)
        };
        touches(self, other) || touches(other, self)
    }
}

impl fmt::Display for EditSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, [{}])", self.start, self.end, self.replacement)
    }
}

/// Applies non-overlapping edits to `source` as if simultaneously. At a
/// shared boundary, an insertion lands after an edit ending there and before
/// an edit starting there.
pub fn apply_edits(source: &TokenSeq, edits: &[EditSpan]) -> Result<TokenSeq> {
    let mut sorted: Vec<&EditSpan> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));

    for edit in &sorted {
        if edit.end > source.len() {
            return Err(Error::OutOfRange {
                start: edit.start,
                end: edit.end,
                len: source.len(),
            });
        }
    }

    // After sorting, checking each edit against the widest earlier range and
    // the previous insertion is enough.
    let mut widest: Option<&EditSpan> = None;
    let mut last_insertion: Option<&EditSpan> = None;
    for edit in &sorted {
        if let Some(prev) = widest {
            if edit.overlaps(prev) {
                return Err(overlap_error(prev, edit));
            }
        }
        if edit.is_insertion() {
            if let Some(prev) = last_insertion {
                if prev.start == edit.start {
                    return Err(overlap_error(prev, edit));
                }
            }
            last_insertion = Some(edit);
        } else if widest.is_none_or(|w| edit.end > w.end) {
            widest = Some(edit);
        }
    }

    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for edit in sorted {
        out.extend_from_slice(&source[cursor..edit.start]);
        out.extend(edit.replacement.iter().cloned());
        cursor = edit.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(TokenSeq::from_vec_unchecked(out))
}

fn overlap_error(first: &EditSpan, second: &EditSpan) -> Error {
    Error::OverlappingEdits {
        first: first.to_string(),
        second: second.to_string(),
    }
}

/// Decoding and ensembling knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Additional confidence added to the KEEP probability.
    pub ac: f64,
    /// Minimum error probability.
    pub mep: f64,
    pub max_iters: usize,
    /// Vote quorum for span-voting ensembles.
    pub n_min: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            ac: 0.0,
            mep: 0.0,
            max_iters: 4,
            n_min: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ac) {
            return Err(Error::Hyperparams(format!("ac {} not in [0, 1]", self.ac)));
        }
        if !(0.0..=1.0).contains(&self.mep) {
            return Err(Error::Hyperparams(format!("mep {} not in [0, 1]", self.mep)));
        }
        if self.max_iters == 0 {
            return Err(Error::Hyperparams("max_iters must be at least 1".into()));
        }
        if self.n_min == 0 {
            return Err(Error::Hyperparams("n_min must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_tweaks(self, ac: f64, mep: f64) -> Self {
        Hyperparams { ac, mep, ..self }
    }
}
