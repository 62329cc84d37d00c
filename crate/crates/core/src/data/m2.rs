//! Reader and writer for the subset of the M2 annotation format used by
//! BEA-2019 style gold files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::edit::{EditSpan, TokenSeq, is_valid_token};
use crate::error::{Error, Result};

const FIELD_SEP: &str = "|||";
const NONE: &str = "-NONE-";
/// Edit type written when no linguistic classification is available.
const UNCLASSIFIED: &str = "UNK";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Edit {
    pub span: EditSpan,
    /// Edit type such as `R:VERB`; kept for round-tripping only.
    pub kind: String,
    pub required: String,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub annotator: usize,
    /// The annotator explicitly marked the sentence as correct.
    pub noop: bool,
    pub edits: Vec<M2Edit>,
}

impl Annotation {
    pub fn spans(&self) -> Vec<EditSpan> {
        self.edits.iter().map(|e| e.span.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Sentence {
    pub source: TokenSeq,
    /// Sorted by annotator id.
    pub annotations: Vec<Annotation>,
}

impl M2Sentence {
    /// Per-annotator gold edit sets; a sentence without annotations counts
    /// as a single annotator proposing nothing.
    pub fn gold_edits(&self) -> Vec<Vec<EditSpan>> {
        if self.annotations.is_empty() {
            return vec![Vec::new()];
        }
        self.annotations.iter().map(Annotation::spans).collect()
    }
}

struct BlockBuilder {
    source: TokenSeq,
    annotations: BTreeMap<usize, Annotation>,
}

impl BlockBuilder {
    fn finish(self) -> M2Sentence {
        M2Sentence {
            source: self.source,
            annotations: self.annotations.into_values().collect(),
        }
    }
}

fn parse_tokens(text: &str, origin: &str, line: usize) -> Result<TokenSeq> {
    if text.is_empty() {
        return Ok(TokenSeq::empty());
    }
    let tokens: Vec<String> = text.split(' ').map(str::to_string).collect();
    if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
        return Err(Error::format(origin, line, format!("invalid token {bad:?}")));
    }
    Ok(TokenSeq::from_vec_unchecked(tokens))
}

fn parse_annotation_line(body: &str, block: &mut BlockBuilder, origin: &str, line: usize) -> Result<()> {
    let err = |msg: String| Error::format(origin, line, msg);
    let fields: Vec<&str> = body.split(FIELD_SEP).collect();
    let [offsets, kind, replacement, required, comment, annotator] = fields.as_slice() else {
        return Err(err(format!(
            "expected 6 '|||'-separated fields, found {}",
            fields.len()
        )));
    };
    let annotator: usize = annotator
        .parse()
        .map_err(|_| err(format!("invalid annotator id {annotator:?}")))?;
    let Some((start, end)) = offsets.split_once(' ') else {
        return Err(err(format!("invalid offsets {offsets:?}")));
    };
    let entry = block.annotations.entry(annotator).or_insert_with(|| Annotation {
        annotator,
        noop: false,
        edits: Vec::new(),
    });
    if (start, end) == ("-1", "-1") {
        entry.noop = true;
        return Ok(());
    }
    let parse_offset = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(format!("invalid offset {s:?}")))
    };
    let (start, end) = (parse_offset(start)?, parse_offset(end)?);
    if end > block.source.len() {
        return Err(err(format!(
            "edit ({start}, {end}) exceeds source length {}",
            block.source.len()
        )));
    }
    let replacement = if *replacement == NONE {
        TokenSeq::empty()
    } else {
        parse_tokens(replacement, origin, line)?
    };
    let span = EditSpan::new(start, end, replacement).map_err(|e| err(e.to_string()))?;
    entry.edits.push(M2Edit {
        span,
        kind: kind.to_string(),
        required: required.to_string(),
        comment: comment.to_string(),
    });
    Ok(())
}

pub fn read_m2<R: BufRead>(reader: R, origin: &str) -> Result<Vec<M2Sentence>> {
    let mut sentences = Vec::new();
    let mut block: Option<BlockBuilder> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            if let Some(done) = block.take() {
                sentences.push(done.finish());
            }
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("S ")
            .or(if line == "S" { Some("") } else { None })
        {
            if let Some(done) = block.take() {
                sentences.push(done.finish());
            }
            block = Some(BlockBuilder {
                source: parse_tokens(rest, origin, lineno)?,
                annotations: BTreeMap::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let Some(current) = block.as_mut() else {
                return Err(Error::format(origin, lineno, "annotation before any S line"));
            };
            parse_annotation_line(rest, current, origin, lineno)?;
        } else {
            return Err(Error::format(
                origin,
                lineno,
                format!("expected an S or A line, found {line:?}"),
            ));
        }
    }
    if let Some(done) = block.take() {
        sentences.push(done.finish());
    }
    Ok(sentences)
}

pub fn write_m2<W: Write>(mut writer: W, sentences: &[M2Sentence]) -> Result<()> {
    for sentence in sentences {
        writeln!(writer, "S {}", sentence.source.to_line())?;
        for ann in &sentence.annotations {
            if ann.noop {
                writeln!(
                    writer,
                    "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{}",
                    ann.annotator
                )?;
            }
            for edit in &ann.edits {
                let replacement = if edit.span.replacement().is_empty() {
                    NONE.to_string()
                } else {
                    edit.span.replacement().to_line()
                };
                writeln!(
                    writer,
                    "A {} {}|||{}|||{}|||{}|||{}|||{}",
                    edit.span.start(),
                    edit.span.end(),
                    edit.kind,
                    replacement,
                    edit.required,
                    edit.comment,
                    ann.annotator
                )?;
            }
        }
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

/// Builds an M2 block whose single annotator (id 0) proposes `edits`; an
/// empty edit list becomes a noop annotation.
pub fn sentence_with_edits(source: TokenSeq, edits: Vec<EditSpan>) -> M2Sentence {
    let noop = edits.is_empty();
    M2Sentence {
        source,
        annotations: vec![Annotation {
            annotator: 0,
            noop,
            edits: edits
                .into_iter()
                .map(|span| M2Edit {
                    span,
                    kind: UNCLASSIFIED.to_string(),
                    required: "REQUIRED".to_string(),
                    comment: NONE.to_string(),
                })
                .collect(),
        }],
    }
}
