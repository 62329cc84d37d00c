use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gec-editkit"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

const TRAIN: &str = "\
He go to school .\tHe goes to school .
She go home .\tShe goes home .
They goes home .\tThey go home .
He like cats .\tHe likes cats .
I like cats .\tI like cats .
We walks to the park .\tWe walk to the park .
he go to the park .\tHe goes to the park .
She walk to school .\tShe walks to school .
";

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_path_buf();
    fs::write(path.join("train.tsv"), TRAIN).unwrap();
    fs::write(
        path.join("input.txt"),
        "He go home .\nThey goes to school .\nI like cats .\n",
    )
    .unwrap();
    fs::write(
        path.join("dev.m2"),
        "S He go home .\nA 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0\n\n\
         S I like cats .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n",
    )
    .unwrap();
    (dir, path)
}

fn train_models(dir: &Path) {
    run(
        dir,
        &["build-vocab", "--input", "train.tsv", "--output", "vocab.txt"],
    );
    for (name, width) in [("m0.json", "0"), ("m1.json", "1"), ("m2.json", "2")] {
        run(
            dir,
            &[
                "train-baseline",
                "--input",
                "train.tsv",
                "--vocab",
                "vocab.txt",
                "--context-width",
                width,
                "--output",
                name,
            ],
        );
    }
}

#[test]
fn filter_drops_identical_pairs() {
    let (_tmp, dir) = workspace();
    run(
        &dir,
        &["filter", "--input", "train.tsv", "--output", "filtered.tsv"],
    );
    let filtered = read(&dir, "filtered.tsv");
    assert_eq!(filtered.lines().count(), 7);
    assert!(!filtered.contains("I like cats .\tI like cats ."));
}

#[test]
fn vocab_starts_with_mandatory_tags() {
    let (_tmp, dir) = workspace();
    run(
        &dir,
        &[
            "build-vocab",
            "--input",
            "train.tsv",
            "--size-cap",
            "5",
            "--output",
            "v.txt",
        ],
    );
    let lines: Vec<String> = read(&dir, "v.txt").lines().map(String::from).collect();
    assert_eq!(
        &lines[..4],
        ["gec-editkit/vocab-v1", "$KEEP", "$DELETE", "@@UNKNOWN@@"]
    );
    assert_eq!(lines.len(), 6);
    // "goes" is the most frequent correction in the corpus
    assert_eq!(lines[4], "$REPLACE_goes");
}

#[test]
fn encode_then_apply_reaches_targets() {
    let (_tmp, dir) = workspace();
    fs::write(dir.join("pair.tsv"), "He go home\tHe goes home\nA B\tA x y B\n").unwrap();
    run(&dir, &["encode", "--input", "pair.tsv", "--output", "tags.tsv"]);
    let tags = read(&dir, "tags.tsv");
    assert_eq!(
        tags,
        "He go home\t$KEEP $KEEP $REPLACE_goes $KEEP\n\
         A B\t$KEEP $APPEND_x $KEEP\n\
         A x B\t$KEEP $KEEP $APPEND_y $KEEP\n"
    );
    run(&dir, &["apply", "--input", "tags.tsv", "--output", "applied.txt"]);
    assert_eq!(read(&dir, "applied.txt"), "He goes home\nA x B\nA x y B\n");

    // With the verb lexicon the agreement fix becomes a verb transform.
    let out = run(&dir, &["--bundled-lexicon", "encode", "--input", "pair.tsv"]);
    assert!(
        String::from_utf8_lossy(&out.stdout)
            .starts_with("He go home\t$KEEP $KEEP $TRANSFORM_VERB_VB_VBZ $KEEP\n")
    );
}

#[test]
fn correct_and_score() {
    let (_tmp, dir) = workspace();
    train_models(&dir);
    run(
        &dir,
        &[
            "correct",
            "--model",
            "baseline:m1.json",
            "--input",
            "input.txt",
            "--output",
            "out.txt",
        ],
    );
    let out = read(&dir, "out.txt");
    assert_eq!(out.lines().next(), Some("He goes home ."));
    assert_eq!(out.lines().count(), 3);

    fs::write(dir.join("hyp.txt"), "He goes home .\nI like cats .\n").unwrap();
    let report = run(&dir, &["score", "--hyp", "hyp.txt", "--gold", "dev.m2"]);
    assert_eq!(
        String::from_utf8_lossy(&report.stdout),
        "TP 1 FP 0 FN 0 P 100.00 R 100.00 F0.5 100.00\n"
    );
}

#[test]
fn unanimous_vote_over_identical_outputs() {
    let (_tmp, dir) = workspace();
    fs::write(dir.join("src.txt"), "He go home\nA b\n").unwrap();
    fs::write(dir.join("member.txt"), "He goes home\nA b c\n").unwrap();
    run(
        &dir,
        &[
            "ensemble",
            "--mode",
            "vote",
            "--n-min",
            "3",
            "--outputs",
            "member.txt",
            "--outputs",
            "member.txt",
            "--outputs",
            "member.txt",
            "--input",
            "src.txt",
            "--output",
            "voted.txt",
        ],
    );
    assert_eq!(read(&dir, "voted.txt"), read(&dir, "member.txt"));
}

#[test]
fn model_ensembles_and_worker_independence() {
    let (_tmp, dir) = workspace();
    train_models(&dir);
    let members = [
        "--model",
        "baseline:m0.json",
        "--model",
        "baseline:m1.json",
        "--model",
        "baseline:m2.json",
    ];
    let mut outputs = Vec::new();
    for mode in ["vote", "average"] {
        for workers in ["1", "4"] {
            let mut args = vec![
                "--workers",
                workers,
                "ensemble",
                "--mode",
                mode,
                "--input",
                "input.txt",
            ];
            args.extend(members);
            outputs.push((mode, run(&dir, &args).stdout));
        }
    }
    assert_eq!(outputs[0].1, outputs[1].1);
    assert_eq!(outputs[2].1, outputs[3].1);
}

#[test]
fn tune_is_reproducible() {
    let (_tmp, dir) = workspace();
    train_models(&dir);
    let args = [
        "tune",
        "--model",
        "baseline:m1.json",
        "--model",
        "baseline:m2.json",
        "--dev",
        "dev.m2",
        "--trials",
        "50",
        "--seed",
        "7",
    ];
    let a = run(&dir, &args).stdout;
    let b = run(&dir, &args).stdout;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.starts_with("trial 0 ac 0 mep 0 "));
    assert!(text.lines().last().unwrap().starts_with("best ac "));
}

#[test]
fn distill_keeps_changed_sentences_in_order() {
    let (_tmp, dir) = workspace();
    train_models(&dir);
    fs::write(
        dir.join("mono.txt"),
        "I like cats .\nHe go home .\nShe go to school .\nWe like dogs .\nHe go to the park .\n",
    )
    .unwrap();
    let out = run(
        &dir,
        &[
            "distill",
            "--model",
            "baseline:m1.json",
            "--input",
            "mono.txt",
            "--limit",
            "2",
            "--output",
            "d.tsv",
        ],
    );
    assert_eq!(
        read(&dir, "d.tsv"),
        "He go home .\tHe goes home .\nShe go to school .\tShe goes to school .\n"
    );
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("processed 3 edited 2 failed 0"));
}

#[test]
fn matrix_members_need_matching_vocab() {
    let (_tmp, dir) = workspace();
    run(
        &dir,
        &["build-vocab", "--input", "train.tsv", "--output", "vocab.txt"],
    );
    fs::write(
        dir.join("matrix.jsonl"),
        "{\"format\":\"gec-editkit/matrix-v1\",\"vocab_sha256\":\"00\",\"vocab_size\":3}\n",
    )
    .unwrap();
    let out = bin()
        .current_dir(&dir)
        .args([
            "correct",
            "--model",
            "matrix:matrix.jsonl",
            "--vocab",
            "vocab.txt",
            "--input",
            "input.txt",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("vocabulary mismatch"));
}

#[test]
fn failures_exit_nonzero_without_output() {
    let (_tmp, dir) = workspace();
    fs::write(dir.join("bad.tsv"), "a b\tc\nno tab here\n").unwrap();
    let out = bin()
        .current_dir(&dir)
        .args(["filter", "--input", "bad.tsv", "--output", "never.tsv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.tsv:2:"));
    assert!(!dir.join("never.tsv").exists());

    let out = bin()
        .current_dir(&dir)
        .args(["correct", "--input", "input.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = bin().current_dir(&dir).args(["frobnicate"]).output().unwrap();
    assert!(!out.status.success());
}
