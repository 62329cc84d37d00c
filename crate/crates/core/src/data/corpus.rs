use std::io::{BufRead, Write};

use crate::edit::{TokenSeq, is_valid_token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentencePair {
    pub source: TokenSeq,
    pub target: TokenSeq,
}

impl SentencePair {
    /// Rejects pairs where both sides are empty.
    pub fn new(source: TokenSeq, target: TokenSeq) -> Result<Self> {
        if source.is_empty() && target.is_empty() {
            return Err(Error::Contract("sentence pair with both sides empty".into()));
        }
        Ok(SentencePair { source, target })
    }

    pub fn is_edited(&self) -> bool {
        self.source != self.target
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn new(pairs: Vec<SentencePair>) -> Self {
        ParallelCorpus { pairs }
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, pair: SentencePair) {
        self.pairs.push(pair);
    }

    pub fn into_pairs(self) -> Vec<SentencePair> {
        self.pairs
    }
}

impl FromIterator<SentencePair> for ParallelCorpus {
    fn from_iter<I: IntoIterator<Item = SentencePair>>(iter: I) -> Self {
        ParallelCorpus::new(iter.into_iter().collect())
    }
}

/// Keeps only pairs whose source and target differ, in order.
pub fn filter_edit_free(corpus: &ParallelCorpus) -> ParallelCorpus {
    corpus.pairs.iter().filter(|p| p.is_edited()).cloned().collect()
}

fn parse_tokens(text: &str, origin: &str, line: usize) -> Result<TokenSeq> {
    if text.is_empty() {
        return Ok(TokenSeq::empty());
    }
    let tokens: Vec<&str> = text.split(' ').collect();
    if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
        return Err(Error::format(
            origin,
            line,
            format!("invalid token {bad:?} (tokens are separated by single spaces)"),
        ));
    }
    Ok(TokenSeq::from_vec_unchecked(
        tokens.into_iter().map(str::to_string).collect(),
    ))
}

/// One sentence per line, tokens separated by single spaces. An empty line is
/// an empty sentence.
pub fn read_sentences<R: BufRead>(reader: R, origin: &str) -> Result<Vec<TokenSeq>> {
    reader
        .lines()
        .enumerate()
        .map(|(idx, line)| parse_tokens(&line?, origin, idx + 1))
        .collect()
}

pub fn write_sentences<W: Write>(mut writer: W, sentences: &[TokenSeq]) -> Result<()> {
    for sentence in sentences {
        writeln!(writer, "{}", sentence.to_line())?;
    }
    writer.flush()?;
    Ok(())
}

/// `source<TAB>target` per line.
pub fn read_tsv<R: BufRead>(reader: R, origin: &str) -> Result<ParallelCorpus> {
    let mut corpus = ParallelCorpus::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let Some((src, tgt)) = line.split_once('\t') else {
            return Err(Error::format(origin, lineno, "expected source<TAB>target"));
        };
        if tgt.contains('\t') {
            return Err(Error::format(origin, lineno, "more than one tab"));
        }
        let pair = SentencePair::new(
            parse_tokens(src, origin, lineno)?,
            parse_tokens(tgt, origin, lineno)?,
        )
        .map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        corpus.push(pair);
    }
    Ok(corpus)
}

pub fn write_tsv<W: Write>(mut writer: W, corpus: &ParallelCorpus) -> Result<()> {
    for pair in corpus.pairs() {
        writeln!(writer, "{}\t{}", pair.source.to_line(), pair.target.to_line())?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(s: &str, t: &str) -> SentencePair {
        SentencePair::new(TokenSeq::from_line(s), TokenSeq::from_line(t)).unwrap()
    }

    #[test]
    fn filter_keeps_edited_pairs_in_order() {
        let corpus = ParallelCorpus::new(vec![
            pair("a", "b"),
            pair("same", "same"),
            pair("c", "d"),
            pair("x y", "x y"),
            pair("e", "e f"),
        ]);
        let filtered = filter_edit_free(&corpus);
        assert_eq!(
            filtered.pairs(),
            [pair("a", "b"), pair("c", "d"), pair("e", "e f")]
        );
        assert_eq!(filter_edit_free(&filtered), filtered);
        assert!(filter_edit_free(&ParallelCorpus::new(vec![pair("a", "a")])).is_empty());
        assert!(filter_edit_free(&ParallelCorpus::default()).is_empty());
    }

    #[test]
    fn empty_both_sides_rejected() {
        assert!(SentencePair::new(TokenSeq::empty(), TokenSeq::empty()).is_err());
        let err = read_tsv("a\tb\n\t\n".as_bytes(), "c.tsv").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn tsv_errors_are_positioned() {
        let err = read_tsv("a\tb\nno tab here\n".as_bytes(), "c.tsv").unwrap_err();
        assert_eq!(err.to_string(), "c.tsv:2: expected source<TAB>target");
        let err = read_tsv("a  b\tc\n".as_bytes(), "c.tsv").unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn sentences_with_empty_lines() {
        let sents = read_sentences("a b\n\nc\n".as_bytes(), "s").unwrap();
        assert_eq!(sents.len(), 3);
        assert!(sents[1].is_empty());
        let mut out = Vec::new();
        write_sentences(&mut out, &sents).unwrap();
        assert_eq!(out, b"a b\n\nc\n");
    }

    fn corpus_strategy() -> impl Strategy<Value = ParallelCorpus> {
        let side = prop::collection::vec("[a-zA-Z.,'-]{1,5}", 0..6);
        prop::collection::vec((side.clone(), side), 0..10).prop_map(|raw| {
            raw.into_iter()
                .filter_map(|(s, t)| {
                    SentencePair::new(TokenSeq::new(s).unwrap(), TokenSeq::new(t).unwrap()).ok()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn tsv_round_trip(corpus in corpus_strategy()) {
            let mut buf = Vec::new();
            write_tsv(&mut buf, &corpus).unwrap();
            prop_assert_eq!(read_tsv(buf.as_slice(), "t").unwrap(), corpus);
        }
    }
}
