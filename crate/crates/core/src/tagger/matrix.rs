//! JSON-lines interchange of tag distributions produced by external taggers.

use std::collections::HashMap;
use std::io::{BufRead, Lines, Write};

use serde::{Deserialize, Serialize};

use super::{TagDistribution, Tagger};
use crate::data::TagVocab;
use crate::edit::TokenSeq;
use crate::error::{Error, Result};

pub const MATRIX_FORMAT: &str = "gec-editkit/matrix-v1";

/// Row normalisation tolerance accepted when reading files.
const FILE_ROW_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format: String,
    pub vocab_sha256: String,
    pub vocab_size: usize,
}

impl MatrixHeader {
    pub fn for_vocab(vocab: &TagVocab) -> Self {
        MatrixHeader {
            format: MATRIX_FORMAT.to_string(),
            vocab_sha256: vocab.id().to_string(),
            vocab_size: vocab.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub tokens: TokenSeq,
    pub rows: Vec<Vec<f64>>,
    pub error_probs: Vec<f64>,
}

impl MatrixRecord {
    pub fn into_distribution(self, vocab_id: &str) -> (TokenSeq, TagDistribution) {
        (
            self.tokens,
            TagDistribution {
                vocab_id: vocab_id.to_string(),
                rows: self.rows,
                error_probs: self.error_probs,
            },
        )
    }
}

/// Streams records after validating the header line.
pub struct MatrixReader<R> {
    lines: Lines<R>,
    origin: String,
    header: MatrixHeader,
    line: usize,
}

impl<R: BufRead> MatrixReader<R> {
    pub fn new(reader: R, origin: &str) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::format(origin, 1, "missing header line"))?;
        let header: MatrixHeader =
            serde_json::from_str(&first).map_err(|e| Error::format(origin, 1, format!("bad header: {e}")))?;
        if header.format != MATRIX_FORMAT {
            return Err(Error::format(
                origin,
                1,
                format!("unsupported format {:?}", header.format),
            ));
        }
        Ok(MatrixReader {
            lines,
            origin: origin.to_string(),
            header,
            line: 1,
        })
    }

    pub fn header(&self) -> &MatrixHeader {
        &self.header
    }

    fn check(&self, record: &MatrixRecord) -> Result<()> {
        let err = |msg: String| Error::format(&self.origin, self.line, msg);
        if record.rows.len() != record.tokens.len() + 1 {
            return Err(err(format!(
                "{} rows for {} tokens (expected tokens + 1)",
                record.rows.len(),
                record.tokens.len()
            )));
        }
        let dist = TagDistribution {
            vocab_id: self.header.vocab_sha256.clone(),
            rows: record.rows.clone(),
            error_probs: record.error_probs.clone(),
        };
        dist.validate(self.header.vocab_size, FILE_ROW_TOLERANCE)
            .map_err(|e| err(e.to_string()))
    }
}

impl<R: BufRead> Iterator for MatrixReader<R> {
    type Item = Result<MatrixRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: MatrixRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    return Some(Err(Error::format(
                        &self.origin,
                        self.line,
                        format!("malformed record: {e}"),
                    )));
                }
            };
            return Some(self.check(&record).map(|()| record));
        }
    }
}

pub fn read_matrix_file<R: BufRead>(reader: R, origin: &str) -> Result<(MatrixHeader, Vec<MatrixRecord>)> {
    let reader = MatrixReader::new(reader, origin)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

pub struct MatrixWriter<W: Write> {
    writer: W,
    vocab_size: usize,
}

impl<W: Write> MatrixWriter<W> {
    pub fn new(mut writer: W, header: &MatrixHeader) -> Result<Self> {
        serde_json::to_writer(&mut writer, header).map_err(std::io::Error::from)?;
        writeln!(writer)?;
        Ok(MatrixWriter {
            writer,
            vocab_size: header.vocab_size,
        })
    }

    pub fn write(&mut self, record: &MatrixRecord) -> Result<()> {
        if record.rows.len() != record.tokens.len() + 1 {
            return Err(Error::Distribution(format!(
                "{} rows for {} tokens",
                record.rows.len(),
                record.tokens.len()
            )));
        }
        if let Some(row) = record.rows.iter().find(|r| r.len() != self.vocab_size) {
            return Err(Error::Distribution(format!(
                "row of length {} for vocabulary size {}",
                row.len(),
                self.vocab_size
            )));
        }
        serde_json::to_writer(&mut self.writer, record).map_err(std::io::Error::from)?;
        writeln!(self.writer)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        Ok(self.writer)
    }
}

pub fn write_matrix_file<W: Write>(writer: W, header: &MatrixHeader, records: &[MatrixRecord]) -> Result<()> {
    let mut out = MatrixWriter::new(writer, header)?;
    for record in records {
        out.write(record)?;
    }
    out.finish()?;
    Ok(())
}

/// What a [`MatrixTagger`] answers for a sentence absent from its file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingSentence {
    /// All mass on `$KEEP`, so the pipeline stops.
    #[default]
    Keep,
    Error,
}

/// Replays precomputed distributions, looked up by sentence.
#[derive(Debug, Clone)]
pub struct MatrixTagger {
    vocab: TagVocab,
    table: HashMap<TokenSeq, TagDistribution>,
    missing: MissingSentence,
}

impl MatrixTagger {
    /// Later records for a repeated sentence replace earlier ones.
    pub fn new(
        vocab: TagVocab,
        header: &MatrixHeader,
        records: Vec<MatrixRecord>,
        missing: MissingSentence,
    ) -> Result<Self> {
        if header.vocab_sha256 != vocab.id() {
            return Err(Error::VocabMismatch {
                expected: vocab.id().to_string(),
                found: header.vocab_sha256.clone(),
            });
        }
        let table = records
            .into_iter()
            .map(|r| r.into_distribution(vocab.id()))
            .collect();
        Ok(MatrixTagger {
            vocab,
            table,
            missing,
        })
    }
}

impl Tagger for MatrixTagger {
    fn vocab(&self) -> &TagVocab {
        &self.vocab
    }

    fn predict(&self, tokens: &TokenSeq) -> Result<TagDistribution> {
        match (self.table.get(tokens), self.missing) {
            (Some(dist), _) => Ok(dist.clone()),
            (None, MissingSentence::Keep) => Ok(TagDistribution::all_keep(&self.vocab, tokens.len())),
            (None, MissingSentence::Error) => Err(Error::NoPrediction(tokens.to_line())),
        }
    }
}
