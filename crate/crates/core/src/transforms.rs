//! Token-general rewrites ("g-transformations"): case, noun number, verb
//! form, hyphen split and merge.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use crate::edit::{CaseVariant, Number, Tag, TokenSeq, is_valid_token};
use crate::error::{Error, Result};

const BUNDLED_LEXICON: &str = include_str!("../data/verb_forms.tsv");

/// Implicit form of every lexicon base entry.
pub const BASE_FORM: &str = "VB";

/// Verb inflection table: `(base, form) -> inflected`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerbLexicon {
    forms: BTreeMap<(String, String), String>,
    // inflected word -> (form, base), sorted for deterministic lookup
    inverse: BTreeMap<String, BTreeSet<(String, String)>>,
    form_names: BTreeSet<String>,
}

impl VerbLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The small sample lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON.as_bytes(), "<bundled verb lexicon>")
            .expect("bundled verb lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::parse(bytes.as_slice(), &path.display().to_string())
    }

    /// Reads `base<TAB>form<TAB>inflected` lines; blank lines are skipped.
    pub fn parse<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut lex = VerbLexicon::empty();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [base, form, inflected] = fields.as_slice() else {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            };
            for field in [base, form, inflected] {
                if !is_valid_token(field) {
                    return Err(Error::format(origin, lineno, format!("invalid field {field:?}")));
                }
            }
            if form.contains('_') || *form == BASE_FORM {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("form {form:?} is reserved or contains '_'"),
                ));
            }
            lex.insert(base, form, inflected)
                .map_err(|msg| Error::format(origin, lineno, msg))?;
        }
        Ok(lex)
    }

    fn insert(&mut self, base: &str, form: &str, inflected: &str) -> Result<(), String> {
        let key = (base.to_string(), form.to_string());
        if self.forms.contains_key(&key) {
            return Err(format!("duplicate entry for ({base}, {form})"));
        }
        if !self.forms.keys().any(|(b, _)| b == base) {
            self.inverse
                .entry(base.to_string())
                .or_default()
                .insert((BASE_FORM.to_string(), base.to_string()));
        }
        self.forms.insert(key, inflected.to_string());
        self.inverse
            .entry(inflected.to_string())
            .or_default()
            .insert((form.to_string(), base.to_string()));
        self.form_names.insert(form.to_string());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    fn form_of<'a>(&'a self, base: &'a str, form: &str) -> Option<&'a str> {
        if form == BASE_FORM {
            return Some(base);
        }
        self.forms
            .get(&(base.to_string(), form.to_string()))
            .map(String::as_str)
    }

    /// Rewrites `word`, read as form `from` of some base, into form `to`.
    /// The lexicographically smallest matching base wins.
    pub fn inflect(&self, word: &str, from: &str, to: &str) -> Option<&str> {
        self.inverse
            .get(word)?
            .iter()
            .filter(|(form, _)| form == from)
            .find_map(|(_, base)| self.form_of(base, to))
    }

    /// All `FROM_TO` keys this lexicon can express, sorted.
    pub fn form_pair_keys(&self) -> Vec<String> {
        let mut names: Vec<&str> = self.form_names.iter().map(String::as_str).collect();
        names.push(BASE_FORM);
        names.sort_unstable();
        let mut keys = Vec::new();
        for from in &names {
            for to in &names {
                if from != to {
                    keys.push(format!("{from}_{to}"));
                }
            }
        }
        keys
    }
}

fn inapplicable(tag: &Tag, token: &str) -> Error {
    Error::InapplicableTransform {
        tag: tag.to_string(),
        token: token.to_string(),
    }
}

fn capitalize(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => first
            .to_uppercase()
            .chain(chars.flat_map(char::to_lowercase))
            .collect(),
        None => String::new(),
    }
}

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("child", "children"),
    ("foot", "feet"),
    ("goose", "geese"),
    ("man", "men"),
    ("mouse", "mice"),
    ("person", "people"),
    ("tooth", "teeth"),
    ("woman", "women"),
];

const SIBILANT_ENDINGS: &[&str] = &["s", "x", "z", "ch", "sh"];

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u')
}

fn pluralize(word: &str) -> Option<String> {
    if !word.chars().all(char::is_alphabetic) {
        return None;
    }
    if let Some((_, plural)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == word) {
        return Some(plural.to_string());
    }
    if SIBILANT_ENDINGS.iter().any(|e| word.ends_with(e)) {
        return Some(format!("{word}es"));
    }
    let mut rev = word.chars().rev();
    if let (Some('y'), Some(prev)) = (rev.next(), rev.next()) {
        if !is_vowel(prev) {
            return Some(format!("{}ies", &word[..word.len() - 1]));
        }
    }
    Some(format!("{word}s"))
}

fn singularize(word: &str) -> Option<String> {
    if !word.chars().all(char::is_alphabetic) {
        return None;
    }
    if let Some((singular, _)) = IRREGULAR_PLURALS.iter().find(|(_, p)| *p == word) {
        return Some(singular.to_string());
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.chars().last().is_some_and(|c| !is_vowel(c)) {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if SIBILANT_ENDINGS.iter().any(|e| stem.ends_with(e)) {
            return Some(stem.to_string());
        }
    }
    match word.strip_suffix('s') {
        Some(stem) if !stem.is_empty() && !stem.ends_with('s') => Some(stem.to_string()),
        _ => None,
    }
}

/// Applies a transform tag to `token`. `next_token` is only consulted by
/// `MERGE`, which consumes it. Results equal to the input count as
/// inapplicable.
pub fn apply_transform(
    tag: &Tag,
    token: &str,
    next_token: Option<&str>,
    lexicon: &VerbLexicon,
) -> Result<TokenSeq> {
    let single = |out: Option<String>| -> Result<TokenSeq> {
        match out {
            Some(out) if out != token && is_valid_token(&out) => Ok(TokenSeq::from_vec_unchecked(vec![out])),
            _ => Err(inapplicable(tag, token)),
        }
    };
    match tag {
        Tag::TransformCase(CaseVariant::Capital) => single(Some(capitalize(token))),
        Tag::TransformCase(CaseVariant::Lower) => single(Some(token.to_lowercase())),
        Tag::TransformCase(CaseVariant::Upper) => single(Some(token.to_uppercase())),
        Tag::TransformAgreement(Number::Plural) => single(pluralize(token)),
        Tag::TransformAgreement(Number::Singular) => single(singularize(token)),
        Tag::TransformVerb(key) => {
            let out = key
                .split_once('_')
                .and_then(|(from, to)| lexicon.inflect(token, from, to))
                .map(str::to_string);
            single(out)
        }
        Tag::SplitHyphen => {
            let parts: Vec<&str> = token.split('-').collect();
            if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(inapplicable(tag, token));
            }
            Ok(TokenSeq::from_vec_unchecked(
                parts.into_iter().map(str::to_string).collect(),
            ))
        }
        Tag::Merge => match next_token {
            Some(next) => Ok(TokenSeq::from_vec_unchecked(vec![format!("{token}{next}")])),
            None => Err(inapplicable(tag, token)),
        },
        _ => Err(Error::Contract(format!("{tag} is not a transform tag"))),
    }
}

/// Candidate transforms in detection priority order.
fn candidates(lexicon: &VerbLexicon) -> impl Iterator<Item = Tag> + '_ {
    [
        Tag::TransformCase(CaseVariant::Capital),
        Tag::TransformCase(CaseVariant::Lower),
        Tag::TransformCase(CaseVariant::Upper),
        Tag::TransformAgreement(Number::Singular),
        Tag::TransformAgreement(Number::Plural),
    ]
    .into_iter()
    .chain(lexicon.form_pair_keys().into_iter().map(Tag::TransformVerb))
    .chain(std::iter::once(Tag::SplitHyphen))
}

/// Finds the highest-priority transform rewriting `src` into `target`
/// (CASE, then AGREEMENT, then VERB, then SPLIT_HYPHEN).
pub fn detect_transform(src: &str, target: &[String], lexicon: &VerbLexicon) -> Option<Tag> {
    if target.is_empty() {
        return None;
    }
    candidates(lexicon).find(|tag| apply_transform(tag, src, None, lexicon).is_ok_and(|out| *out == *target))
}
