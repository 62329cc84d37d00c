//! Token-level Levenshtein alignment, span-edit extraction and one-pass tag
//! encoding of a source/target pair.

use crate::edit::{EditSpan, Tag, TagSeq, TokenSeq};
use crate::transforms::{VerbLexicon, detect_transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// One alignment step. For `Insert`, `src_index` is the source position the
/// target token is inserted before; for `Delete`, `tgt_index` is the target
/// position the deletion happens at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlignmentOp {
    pub kind: OpKind,
    pub src_index: usize,
    pub tgt_index: usize,
}

/// Minimal unit-cost alignment. Backtrace prefers MATCH, then SUBSTITUTE,
/// then DELETE, then INSERT.
pub fn align_tokens(source: &[String], target: &[String]) -> Vec<AlignmentOp> {
    let (n, m) = (source.len(), target.len());
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for (j, c) in cost[..width].iter_mut().enumerate() {
        *c = j;
    }
    for i in 1..=n {
        cost[i * width] = i;
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + usize::from(source[i - 1] != target[j - 1]);
            let up = cost[(i - 1) * width + j] + 1;
            let left = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let diag = cost[(i - 1) * width + j - 1];
            if source[i - 1] == target[j - 1] && here == diag {
                ops.push(AlignmentOp {
                    kind: OpKind::Match,
                    src_index: i - 1,
                    tgt_index: j - 1,
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if source[i - 1] != target[j - 1] && here == diag + 1 {
                ops.push(AlignmentOp {
                    kind: OpKind::Substitute,
                    src_index: i - 1,
                    tgt_index: j - 1,
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            ops.push(AlignmentOp {
                kind: OpKind::Delete,
                src_index: i - 1,
                tgt_index: j,
            });
            i -= 1;
        } else {
            ops.push(AlignmentOp {
                kind: OpKind::Insert,
                src_index: i,
                tgt_index: j - 1,
            });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Merges maximal runs of non-MATCH alignment steps into span edits, sorted
/// by start.
pub fn extract_edits(source: &TokenSeq, target: &TokenSeq) -> Vec<EditSpan> {
    let mut edits = Vec::new();
    let mut run: Option<(usize, usize, Vec<String>)> = None;
    for op in align_tokens(source, target) {
        if op.kind == OpKind::Match {
            if let Some(span) = run.take() {
                edits.push(finish_span(span));
            }
            continue;
        }
        let (_, end, replacement) = run.get_or_insert_with(|| (op.src_index, op.src_index, Vec::new()));
        match op.kind {
            OpKind::Substitute => {
                *end = op.src_index + 1;
                replacement.push(target[op.tgt_index].clone());
            }
            OpKind::Delete => *end = op.src_index + 1,
            OpKind::Insert => replacement.push(target[op.tgt_index].clone()),
            OpKind::Match => unreachable!(),
        }
    }
    if let Some(span) = run.take() {
        edits.push(finish_span(span));
    }
    edits
}

fn finish_span((start, end, replacement): (usize, usize, Vec<String>)) -> EditSpan {
    EditSpan::new(start, end, TokenSeq::from_vec_unchecked(replacement))
        .expect("alignment runs always form valid spans")
}

/// Encodes one correction pass as per-position tags over `[START] + source`.
///
/// Substitutions prefer transform tags over `$REPLACE`. Insertions (and the
/// surplus of a one-to-many substitution) only place their first token per
/// pass; the rest surfaces on later passes once re-aligned.
pub fn encode_tags(source: &TokenSeq, target: &TokenSeq, lexicon: &VerbLexicon) -> TagSeq {
    let mut tags = vec![Tag::Keep; source.len() + 1];
    for edit in extract_edits(source, target) {
        let (start, width) = (edit.start(), edit.width());
        let replacement = edit.replacement();

        if width == 0 {
            tags[start] = Tag::Append(replacement[0].clone());
            continue;
        }
        if width == 1 {
            if let Some(tag) = detect_transform(&source[start], replacement, lexicon) {
                tags[start + 1] = tag;
                continue;
            }
        }
        if width == 2
            && replacement.len() == 1
            && replacement[0] == format!("{}{}", source[start], source[start + 1])
        {
            tags[start + 1] = Tag::Merge;
            continue;
        }
        for offset in 0..width {
            let src = &source[start + offset];
            tags[start + offset + 1] = match replacement.get(offset) {
                None => Tag::Delete,
                Some(tgt) if tgt == src => Tag::Keep,
                Some(tgt) => detect_transform(src, std::slice::from_ref(tgt), lexicon)
                    .unwrap_or_else(|| Tag::Replace(tgt.clone())),
            };
        }
    }
    TagSeq::new(tags).expect("START only ever receives KEEP or APPEND")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::apply_tags;
    use crate::edit::apply_edits;
    use proptest::prelude::*;

    fn toks(s: &str) -> TokenSeq {
        TokenSeq::from_line(s)
    }

    fn kinds(ops: &[AlignmentOp]) -> Vec<OpKind> {
        ops.iter().map(|o| o.kind).collect()
    }

    /// Exhaustive minimal edit-script cost, independent of the DP table.
    fn brute_cost(a: &[String], b: &[String]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ar)), Some((y, br))) => {
                let diag = brute_cost(ar, br) + usize::from(x != y);
                diag.min(brute_cost(ar, b) + 1).min(brute_cost(a, br) + 1)
            }
        }
    }

    fn script_cost(ops: &[AlignmentOp]) -> usize {
        ops.iter().filter(|o| o.kind != OpKind::Match).count()
    }

    /// Replays an alignment; both sides must be reconstructed exactly.
    fn replay(ops: &[AlignmentOp], source: &[String], target: &[String]) -> (Vec<String>, Vec<String>) {
        let (mut src, mut tgt) = (Vec::new(), Vec::new());
        for op in ops {
            match op.kind {
                OpKind::Match | OpKind::Substitute => {
                    src.push(source[op.src_index].clone());
                    tgt.push(target[op.tgt_index].clone());
                }
                OpKind::Delete => src.push(source[op.src_index].clone()),
                OpKind::Insert => tgt.push(target[op.tgt_index].clone()),
            }
        }
        (src, tgt)
    }

    #[test]
    fn align_examples() {
        assert_eq!(
            kinds(&align_tokens(&toks("a b"), &toks("a b"))),
            [OpKind::Match, OpKind::Match]
        );
        let ops = align_tokens(&toks("He go"), &toks("He goes"));
        assert_eq!(kinds(&ops), [OpKind::Match, OpKind::Substitute]);
        assert_eq!(brute_cost(&toks("He go"), &toks("He goes")), script_cost(&ops));
        assert_eq!(kinds(&align_tokens(&toks(""), &toks("x"))), [OpKind::Insert]);
        assert_eq!(kinds(&align_tokens(&toks("x"), &toks(""))), [OpKind::Delete]);
    }

    #[test]
    fn tie_break_prefers_substitution_then_deletion() {
        // "a b" -> "c": SUB+DEL and DEL+SUB both cost 2; backtrace from the
        // end takes SUBSTITUTE first.
        let ops = align_tokens(&toks("a b"), &toks("c"));
        assert_eq!(kinds(&ops), [OpKind::Delete, OpKind::Substitute]);
    }

    #[test]
    fn extract_examples() {
        assert!(extract_edits(&toks("a b c"), &toks("a b c")).is_empty());
        assert_eq!(
            extract_edits(&toks("He go to school"), &toks("He goes to school")),
            vec![EditSpan::new(1, 2, toks("goes")).unwrap()]
        );
        assert_eq!(
            extract_edits(&toks("I like dog"), &toks("I like the dog")),
            vec![EditSpan::new(2, 2, toks("the")).unwrap()]
        );
        assert_eq!(
            extract_edits(&toks("a b c d"), &toks("x c")),
            vec![
                EditSpan::new(0, 2, toks("x")).unwrap(),
                EditSpan::new(3, 4, toks("")).unwrap()
            ]
        );
    }

    #[test]
    fn encode_examples() {
        let lex = VerbLexicon::empty();
        assert!(encode_tags(&toks("a b"), &toks("a b"), &lex).is_all_keep());
        assert_eq!(
            encode_tags(&toks("He go"), &toks("He goes"), &lex).into_inner(),
            vec![Tag::Keep, Tag::Keep, Tag::Replace("goes".into())]
        );
        // With a verb lexicon the same correction becomes a transform.
        assert_eq!(
            encode_tags(&toks("He go"), &toks("He goes"), &VerbLexicon::bundled()).into_inner()[2],
            Tag::TransformVerb("VB_VBZ".into())
        );
    }

    #[test]
    fn two_pass_insertion() {
        let lex = VerbLexicon::empty();
        let target = toks("I like black cats");
        let pass1 = encode_tags(&toks("I cats"), &target, &lex);
        assert_eq!(pass1.tags(), [Tag::Keep, Tag::Append("like".into()), Tag::Keep]);
        let mid = apply_tags(&toks("I cats"), &pass1, &lex).unwrap();
        assert_eq!(mid, toks("I like cats"));
        let pass2 = encode_tags(&mid, &target, &lex);
        assert_eq!(
            pass2.tags(),
            [Tag::Keep, Tag::Keep, Tag::Append("black".into()), Tag::Keep]
        );
        assert_eq!(apply_tags(&mid, &pass2, &lex).unwrap(), target);
    }

    #[test]
    fn merge_and_split_and_front_insertion() {
        let lex = VerbLexicon::empty();
        let tags = encode_tags(&toks("any one came"), &toks("anyone came"), &lex);
        assert_eq!(tags.tags()[1], Tag::Merge);
        assert_eq!(
            apply_tags(&toks("any one came"), &tags, &lex).unwrap(),
            toks("anyone came")
        );

        let tags = encode_tags(&toks("a well-known fact"), &toks("a well known fact"), &lex);
        assert_eq!(tags.tags()[2], Tag::SplitHyphen);

        let tags = encode_tags(&toks("cats"), &toks("The cats"), &lex);
        assert_eq!(tags.tags()[0], Tag::Append("The".into()));
    }

    #[test]
    fn one_to_many_substitution_defers_surplus() {
        let lex = VerbLexicon::empty();
        let target = toks("x y z");
        let tags = encode_tags(&toks("a"), &target, &lex);
        assert_eq!(tags.tags(), [Tag::Keep, Tag::Replace("x".into())]);
        let mut cur = toks("a");
        let mut passes = 0;
        while cur != target {
            cur = apply_tags(&cur, &encode_tags(&cur, &target, &lex), &lex).unwrap();
            passes += 1;
        }
        assert_eq!(passes, 3);
    }

    fn sentence() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::sample::select(vec!["a", "b", "c", "d", "A", "bs", "a-b"]),
            0..8,
        )
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
    }

    proptest! {
        #[test]
        fn alignment_is_minimal_and_reconstructs(src in sentence(), tgt in sentence()) {
            let ops = align_tokens(&src, &tgt);
            prop_assert_eq!(script_cost(&ops), brute_cost(&src, &tgt));
            let (s, t) = replay(&ops, &src, &tgt);
            prop_assert_eq!(s, src);
            prop_assert_eq!(t, tgt);
        }

        #[test]
        fn extracted_edits_reproduce_target(src in sentence(), tgt in sentence()) {
            let (src, tgt) = (TokenSeq::new(src).unwrap(), TokenSeq::new(tgt).unwrap());
            let edits = extract_edits(&src, &tgt);
            prop_assert_eq!(apply_edits(&src, &edits).unwrap(), tgt);
            for pair in edits.windows(2) {
                prop_assert!(pair[0].end() < pair[1].start());
            }
            for e in &edits {
                prop_assert_ne!(&src[e.start()..e.end()], &e.replacement()[..]);
            }
        }

        #[test]
        fn iterated_encoding_converges(src in sentence(), tgt in sentence()) {
            let lex = VerbLexicon::bundled();
            let (mut cur, tgt) = (TokenSeq::new(src).unwrap(), TokenSeq::new(tgt).unwrap());
            let mut iterations = 0;
            loop {
                let tags = encode_tags(&cur, &tgt, &lex);
                prop_assert_eq!(tags.is_all_keep(), cur == tgt);
                if cur == tgt {
                    break;
                }
                cur = apply_tags(&cur, &tags, &lex).unwrap();
                iterations += 1;
                prop_assert!(iterations <= tgt.len() + 1);
            }
        }
    }
}
