//! From tag distributions to corrected sentences: inference tweaks, tag
//! selection, single-pass application and the iterative pipeline.

use crate::data::TagVocab;
use crate::edit::{Hyperparams, Tag, TagSeq, TokenSeq};
use crate::error::{Error, Result};
use crate::tagger::{TagDistribution, Tagger};
use crate::transforms::{VerbLexicon, apply_transform};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionResult {
    pub output: TokenSeq,
    pub iterations_used: usize,
    pub per_iteration_tags: Vec<TagSeq>,
}

/// Picks one tag per position.
///
/// `ac` is added to the `$KEEP` probability before the argmax (ties go to
/// the lowest index, i.e. `$KEEP`). A non-KEEP winner whose probability is
/// below `mep` is demoted to `$KEEP`, and when no position's error
/// probability reaches `mep` the whole sentence is left alone. START only
/// considers `$KEEP` and `$APPEND_*`. `@@UNKNOWN@@` decodes as `$KEEP`.
pub fn select_tags(dist: &TagDistribution, vocab: &TagVocab, ac: f64, mep: f64) -> Result<TagSeq> {
    if dist.vocab_id != vocab.id() {
        return Err(Error::VocabMismatch {
            expected: vocab.id().to_string(),
            found: dist.vocab_id.clone(),
        });
    }
    if let Some(row) = dist.rows.iter().find(|r| r.len() != vocab.len()) {
        return Err(Error::Distribution(format!(
            "row of length {} for vocabulary size {}",
            row.len(),
            vocab.len()
        )));
    }
    let positions = dist.rows.len();
    if positions == 0 {
        return Err(Error::Distribution("no rows (START position missing)".into()));
    }
    let max_error = dist.error_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_error < mep {
        return Ok(TagSeq::all_keep(positions - 1));
    }

    let tags = dist
        .rows
        .iter()
        .enumerate()
        .map(|(pos, row)| {
            let mut best = TagVocab::KEEP_INDEX;
            let mut best_score = row[best] + ac;
            for (idx, &p) in row.iter().enumerate().skip(1) {
                if pos == 0 && !vocab.tag(idx).allowed_at_start() {
                    continue;
                }
                if p > best_score {
                    best = idx;
                    best_score = p;
                }
            }
            let tag = vocab.tag(best);
            if matches!(tag, Tag::Unknown) || row[best] < mep {
                Tag::Keep
            } else {
                tag.clone()
            }
        })
        .collect();
    TagSeq::new(tags)
}

/// Applies one pass of tags. Inapplicable transforms and `@@UNKNOWN@@`
/// leave the token as is; `MERGE` swallows the next position, whose tag is
/// ignored.
pub fn apply_tags(tokens: &TokenSeq, tags: &TagSeq, lexicon: &VerbLexicon) -> Result<TokenSeq> {
    if tags.tags().len() != tokens.len() + 1 {
        return Err(Error::TagLengthMismatch {
            tokens: tokens.len(),
            expected: tokens.len() + 1,
            found: tags.tags().len(),
        });
    }
    let mut out: Vec<String> = Vec::with_capacity(tokens.len() + 2);
    if let Tag::Append(tok) = &tags.tags()[0] {
        out.push(tok.clone());
    }
    let mut skip_next = false;
    for (i, token) in tokens.iter().enumerate() {
        if std::mem::take(&mut skip_next) {
            continue;
        }
        match &tags.tags()[i + 1] {
            Tag::Keep | Tag::Unknown => out.push(token.clone()),
            Tag::Delete => {}
            Tag::Append(extra) => {
                out.push(token.clone());
                out.push(extra.clone());
            }
            Tag::Replace(with) => out.push(with.clone()),
            tag => {
                let next = tokens.get(i + 1).map(String::as_str);
                match apply_transform(tag, token, next, lexicon) {
                    Ok(rewritten) => {
                        out.extend(rewritten.into_inner());
                        skip_next = matches!(tag, Tag::Merge);
                    }
                    Err(Error::InapplicableTransform { .. }) => out.push(token.clone()),
                    Err(other) => return Err(other),
                }
            }
        }
    }
    Ok(TokenSeq::from_vec_unchecked(out))
}

/// predict, select, apply; repeated until a pass selects only `$KEEP` or
/// `max_iters` passes ran. The tweaks apply on every pass.
pub fn run_pipeline<T: Tagger + ?Sized>(
    tagger: &T,
    tokens: &TokenSeq,
    hp: &Hyperparams,
    lexicon: &VerbLexicon,
) -> Result<CorrectionResult> {
    hp.validate()?;
    let mut current = tokens.clone();
    let mut per_iteration_tags = Vec::new();
    for _ in 0..hp.max_iters {
        let dist = tagger.predict(&current)?;
        if dist.rows.len() != current.len() + 1 {
            return Err(Error::Distribution(format!(
                "{} rows for {} tokens",
                dist.rows.len(),
                current.len()
            )));
        }
        let tags = select_tags(&dist, tagger.vocab(), hp.ac, hp.mep)?;
        let done = tags.is_all_keep();
        if !done {
            current = apply_tags(&current, &tags, lexicon)?;
        }
        per_iteration_tags.push(tags);
        if done {
            break;
        }
    }
    Ok(CorrectionResult {
        output: current,
        iterations_used: per_iteration_tags.len(),
        per_iteration_tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::CaseVariant;
    use crate::tagger::OracleTagger;
    use proptest::prelude::*;

    fn toks(s: &str) -> TokenSeq {
        TokenSeq::from_line(s)
    }

    fn vocab() -> TagVocab {
        TagVocab::from_tags(vec![
            Tag::Keep,
            Tag::Delete,
            Tag::Unknown,
            Tag::Replace("x".into()),
            Tag::Append("the".into()),
            Tag::Merge,
        ])
        .unwrap()
    }

    fn dist(vocab: &TagVocab, rows: Vec<Vec<f64>>) -> TagDistribution {
        let error_probs = rows.iter().map(|r| 1.0 - r[0]).collect();
        TagDistribution {
            vocab_id: vocab.id().to_string(),
            rows,
            error_probs,
        }
    }

    #[test]
    fn plain_argmax_without_tweaks() {
        let v = vocab();
        let d = dist(
            &v,
            vec![
                vec![0.1, 0.0, 0.0, 0.0, 0.9, 0.0],
                vec![0.3, 0.0, 0.0, 0.7, 0.0, 0.0],
            ],
        );
        let tags = select_tags(&d, &v, 0.0, 0.0).unwrap();
        assert_eq!(tags.tags(), [Tag::Append("the".into()), Tag::Replace("x".into())]);
    }

    #[test]
    fn start_position_masks_non_append() {
        let v = vocab();
        let d = dist(
            &v,
            vec![
                vec![0.1, 0.6, 0.0, 0.3, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            ],
        );
        assert_eq!(select_tags(&d, &v, 0.0, 0.0).unwrap().tags()[0], Tag::Keep);
    }

    #[test]
    fn full_confidence_forces_keep() {
        let v = vocab();
        let d = dist(
            &v,
            vec![
                vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            ],
        );
        assert!(select_tags(&d, &v, 1.0, 0.0).unwrap().is_all_keep());
    }

    #[test]
    fn low_probability_edit_is_gated() {
        let v = vocab();
        let d = dist(
            &v,
            vec![
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.35, 0.25, 0.0, 0.4, 0.0, 0.0],
            ],
        );
        assert_eq!(
            select_tags(&d, &v, 0.0, 0.0).unwrap().tags()[1],
            Tag::Replace("x".into())
        );
        assert!(select_tags(&d, &v, 0.0, 0.5).unwrap().is_all_keep());
    }

    #[test]
    fn sentence_gate_uses_error_probs() {
        let v = vocab();
        let mut d = dist(
            &v,
            vec![
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.9, 0.0, 0.0],
            ],
        );
        d.error_probs = vec![0.1, 0.2];
        // Token gate would pass (0.9 >= 0.5) but no position is errorful enough.
        assert!(select_tags(&d, &v, 0.0, 0.5).unwrap().is_all_keep());
    }

    #[test]
    fn ties_favour_keep_and_unknown_decodes_as_keep() {
        let v = vocab();
        let d = dist(
            &v,
            vec![
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.5, 0.0, 0.0],
            ],
        );
        assert!(select_tags(&d, &v, 0.0, 0.0).unwrap().is_all_keep());
        let d = dist(
            &v,
            vec![
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            ],
        );
        assert!(select_tags(&d, &v, 0.0, 0.0).unwrap().is_all_keep());
    }

    #[test]
    fn vocab_mismatch_is_rejected() {
        let v = vocab();
        let d = TagDistribution::all_keep(&TagVocab::mandatory(), 1);
        assert!(matches!(
            select_tags(&d, &v, 0.0, 0.0),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let lex = VerbLexicon::empty();
        assert_eq!(
            apply_tags(&toks("a b"), &TagSeq::all_keep(2), &lex).unwrap(),
            toks("a b")
        );
        let tags = TagSeq::new(vec![Tag::Keep, Tag::Keep, Tag::Replace("goes".into())]).unwrap();
        assert_eq!(apply_tags(&toks("He go"), &tags, &lex).unwrap(), toks("He goes"));
        let tags = TagSeq::new(vec![Tag::Append("The".into()), Tag::Keep]).unwrap();
        assert_eq!(apply_tags(&toks("cats"), &tags, &lex).unwrap(), toks("The cats"));
        let tags = TagSeq::new(vec![Tag::Keep, Tag::Delete, Tag::Append("b".into())]).unwrap();
        assert_eq!(apply_tags(&toks("x a"), &tags, &lex).unwrap(), toks("a b"));
    }

    #[test]
    fn apply_transforms_and_merge() {
        let lex = VerbLexicon::empty();
        let tags = TagSeq::new(vec![
            Tag::Keep,
            Tag::TransformCase(CaseVariant::Capital),
            Tag::Merge,
            Tag::Delete,
        ])
        .unwrap();
        assert_eq!(
            apply_tags(&toks("he any one"), &tags, &lex).unwrap(),
            toks("He anyone")
        );
        // MERGE on the last token and an inapplicable transform fall back to KEEP.
        let tags = TagSeq::new(vec![Tag::Keep, Tag::TransformVerb("VB_VBZ".into()), Tag::Merge]).unwrap();
        assert_eq!(apply_tags(&toks("go on"), &tags, &lex).unwrap(), toks("go on"));
    }

    #[test]
    fn apply_length_mismatch() {
        let err = apply_tags(&toks("a b"), &TagSeq::all_keep(1), &VerbLexicon::empty());
        assert!(matches!(err, Err(Error::TagLengthMismatch { .. })));
    }

    fn oracle(target: &str, vocab_tags: Vec<Tag>) -> OracleTagger {
        let mut tags = vec![Tag::Keep, Tag::Delete, Tag::Unknown];
        tags.extend(vocab_tags);
        OracleTagger::new(
            toks(target),
            TagVocab::from_tags(tags).unwrap(),
            VerbLexicon::empty(),
        )
    }

    #[test]
    fn pipeline_on_correct_sentence_stops_after_one_pass() {
        let tagger = oracle("a b", vec![]);
        let res = run_pipeline(
            &tagger,
            &toks("a b"),
            &Hyperparams::default(),
            &VerbLexicon::empty(),
        )
        .unwrap();
        assert_eq!(res.output, toks("a b"));
        assert_eq!(res.iterations_used, 1);
    }

    #[test]
    fn pipeline_converges_on_two_insertions() {
        let tagger = oracle(
            "I like black cats",
            vec![Tag::Append("like".into()), Tag::Append("black".into())],
        );
        let lex = VerbLexicon::empty();
        let res = run_pipeline(&tagger, &toks("I cats"), &Hyperparams::default(), &lex).unwrap();
        assert_eq!(res.output, toks("I like black cats"));
        // Two editing passes, then a confirming all-KEEP pass.
        assert_eq!(res.iterations_used, 3);
        assert_eq!(res.per_iteration_tags[0].edit_count(), 1);
        assert_eq!(res.per_iteration_tags[1].edit_count(), 1);
        assert!(res.per_iteration_tags[2].is_all_keep());

        let hp = Hyperparams {
            max_iters: 2,
            ..Default::default()
        };
        let res = run_pipeline(&tagger, &toks("I cats"), &hp, &lex).unwrap();
        assert_eq!(res.output, toks("I like black cats"));
        assert_eq!(res.iterations_used, 2);

        let hp = Hyperparams {
            max_iters: 1,
            ..Default::default()
        };
        let res = run_pipeline(&tagger, &toks("I cats"), &hp, &lex).unwrap();
        assert_eq!(res.output, toks("I like cats"));
        assert_eq!(res.iterations_used, 1);
    }

    fn random_dist(v: &TagVocab) -> impl Strategy<Value = TagDistribution> {
        let size = v.len();
        let id = v.id().to_string();
        (1..6usize)
            .prop_flat_map(move |n| {
                (
                    prop::collection::vec(prop::collection::vec(0.0f64..1.0, size), n),
                    prop::collection::vec(0.0f64..=1.0, n),
                )
            })
            .prop_map(move |(raw, errs)| TagDistribution {
                vocab_id: id.clone(),
                rows: raw
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum::<f64>() + 1e-9;
                        r.into_iter().map(|x| x / s).collect()
                    })
                    .collect(),
                error_probs: errs,
            })
    }

    proptest! {
        #[test]
        fn raising_mep_never_adds_edits(d in random_dist(&vocab()), ac in 0.0f64..1.0) {
            let v = vocab();
            let mut last = usize::MAX;
            for step in 0..=20 {
                let mep = step as f64 / 20.0;
                let n = select_tags(&d, &v, ac, mep).unwrap().edit_count();
                prop_assert!(n <= last);
                last = n;
            }
        }

        #[test]
        fn full_ac_is_identity(d in random_dist(&vocab())) {
            prop_assert!(select_tags(&d, &vocab(), 1.0, 0.0).unwrap().is_all_keep());
        }
    }
}
