use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::align::encode_tags;
use crate::data::corpus::ParallelCorpus;
use crate::decode::apply_tags;
use crate::edit::{Tag, TagSeq, TokenSeq, parse_tag};
use crate::error::{Error, Result};
use crate::transforms::VerbLexicon;

pub const VOCAB_HEADER: &str = "gec-editkit/vocab-v1";

/// Tags that every vocabulary carries, in index order.
pub const MANDATORY_TAGS: [Tag; 3] = [Tag::Keep, Tag::Delete, Tag::Unknown];

/// Bidirectional tag/index map. `$KEEP` is always index 0.
#[derive(Debug, Clone)]
pub struct TagVocab {
    tags: Vec<Tag>,
    index: HashMap<Tag, usize>,
    id: String,
}

impl PartialEq for TagVocab {
    fn eq(&self, other: &Self) -> bool {
        self.tags == other.tags
    }
}

impl Eq for TagVocab {}

impl TagVocab {
    pub const KEEP_INDEX: usize = 0;

    pub fn from_tags(tags: Vec<Tag>) -> Result<Self> {
        if tags.first() != Some(&Tag::Keep) {
            return Err(Error::InvalidVocab("$KEEP must be at index 0".into()));
        }
        let mut index = HashMap::with_capacity(tags.len());
        for (i, tag) in tags.iter().enumerate() {
            if index.insert(tag.clone(), i).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate tag {tag}")));
            }
        }
        for tag in &MANDATORY_TAGS {
            if !index.contains_key(tag) {
                return Err(Error::InvalidVocab(format!("missing mandatory tag {tag}")));
            }
        }
        let id = hex::encode(Sha256::digest(render(&tags).as_bytes()));
        Ok(TagVocab { tags, index, id })
    }

    pub fn mandatory() -> Self {
        Self::from_tags(MANDATORY_TAGS.to_vec()).expect("mandatory tags form a valid vocabulary")
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, index: usize) -> &Tag {
        &self.tags[index]
    }

    pub fn index_of(&self, tag: &Tag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    /// Out-of-vocabulary tags map to `@@UNKNOWN@@`.
    pub fn index_or_unknown(&self, tag: &Tag) -> usize {
        self.index_of(tag).unwrap_or_else(|| self.index[&Tag::Unknown])
    }

    /// SHA-256 of the vocabulary file contents; identifies the vocabulary in
    /// matrix files and models.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn to_text(&self) -> String {
        render(&self.tags)
    }

    pub fn parse<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut lines = reader.lines();
        match lines.next().transpose()? {
            Some(header) if header == VOCAB_HEADER => {}
            Some(header) => {
                return Err(Error::format(origin, 1, format!("unexpected header {header:?}")));
            }
            None => return Err(Error::format(origin, 1, "empty vocabulary file")),
        }
        let mut tags = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let tag = parse_tag(&line).map_err(|e| Error::format(origin, idx + 2, e.to_string()))?;
            tags.push(tag);
        }
        Self::from_tags(tags).map_err(|e| Error::format(origin, 2, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::parse(bytes.as_slice(), &path.display().to_string())
    }
}

fn render(tags: &[Tag]) -> String {
    let mut out = String::from(VOCAB_HEADER);
    out.push('\n');
    for tag in tags {
        out.push_str(&tag.to_string());
        out.push('\n');
    }
    out
}

/// Runs encode/apply passes until the source reaches the target and returns
/// every pass's tag sequence (the final all-KEEP pass excluded).
pub fn encoding_passes(
    source: &TokenSeq,
    target: &TokenSeq,
    lexicon: &VerbLexicon,
) -> Vec<(TokenSeq, TagSeq)> {
    let mut passes = Vec::new();
    let mut cur = source.clone();
    // Convergence takes at most |target| + 1 passes; the bound only guards
    // against a broken encoder.
    for _ in 0..=target.len() + 1 {
        if cur == *target {
            break;
        }
        let tags = encode_tags(&cur, target, lexicon);
        let next = apply_tags(&cur, &tags, lexicon).expect("encoded tags fit their sentence");
        passes.push((cur, tags));
        cur = next;
    }
    passes
}

/// Counts every tag of every encoding pass over the corpus.
pub fn count_tags(corpus: &ParallelCorpus, lexicon: &VerbLexicon) -> BTreeMap<Tag, u64> {
    let mut counts = BTreeMap::new();
    for pair in corpus.pairs() {
        for (_, tags) in encoding_passes(&pair.source, &pair.target, lexicon) {
            for tag in tags.tags() {
                *counts.entry(tag.clone()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Keeps the mandatory tags plus the `size_cap - 3` most frequent others;
/// frequency ties go to the lexicographically smaller formatted tag.
pub fn build_vocab(corpus: &ParallelCorpus, size_cap: usize, lexicon: &VerbLexicon) -> Result<TagVocab> {
    if size_cap < MANDATORY_TAGS.len() {
        return Err(Error::Contract(format!(
            "vocabulary size cap {size_cap} is below the {} mandatory tags",
            MANDATORY_TAGS.len()
        )));
    }
    Ok(vocab_from_counts(&count_tags(corpus, lexicon), size_cap))
}

pub fn vocab_from_counts(counts: &BTreeMap<Tag, u64>, size_cap: usize) -> TagVocab {
    let mut ranked: Vec<(u64, String, &Tag)> = counts
        .iter()
        .filter(|(tag, _)| !MANDATORY_TAGS.contains(tag))
        .map(|(tag, &n)| (n, tag.to_string(), tag))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut tags = MANDATORY_TAGS.to_vec();
    tags.extend(
        ranked
            .into_iter()
            .take(size_cap.saturating_sub(MANDATORY_TAGS.len()))
            .map(|(_, _, tag)| tag.clone()),
    );
    TagVocab::from_tags(tags).expect("ranked tags are unique")
}
