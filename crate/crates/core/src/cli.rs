//! Command-line surface. Every subcommand is a thin wrapper over one library
//! operation; outputs are written to a temporary file and renamed into place
//! only on success.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tempfile::NamedTempFile;

use crate::align::extract_edits;
use crate::data::{
    ParallelCorpus, TagVocab, build_vocab, distill, encoding_passes, filter_edit_free, read_m2,
    read_sentences, read_tsv, tune_hyperparams, write_sentences, write_tsv,
};
use crate::decode::{apply_tags, run_pipeline};
use crate::edit::{Hyperparams, TagSeq, TokenSeq};
use crate::ensemble::{EnsembleMode, ensemble_correct, vote_correct};
use crate::error::Error;
use crate::score::score_outputs;
use crate::tagger::{BaselineModel, MatrixTagger, MissingSentence, Tagger, read_matrix_file, train_baseline};
use crate::transforms::VerbLexicon;

#[derive(Debug, Parser)]
#[command(
    name = "gec-editkit",
    version,
    about = "Edit-tag grammatical error correction toolkit"
)]
pub struct Cli {
    /// Worker threads for sentence-parallel work (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Verb-form lexicon (`base<TAB>FORM<TAB>inflected`) enabling
    /// `$TRANSFORM_VERB_*` tags.
    #[arg(long, global = true, conflicts_with = "bundled_lexicon")]
    pub lexicon: Option<PathBuf>,

    /// Use the built-in verb-form lexicon.
    #[arg(long, global = true)]
    pub bundled_lexicon: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a tag vocabulary from a parallel TSV corpus.
    BuildVocab {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5000)]
        size_cap: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Encode each TSV pair as `tokens<TAB>tags` lines, one per pass.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply one pass of `tokens<TAB>tags` lines, writing sentences.
    Apply {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the count-based baseline tagger.
    TrainBaseline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 1)]
        context_width: usize,
        #[arg(long, default_value_t = 0.1)]
        smoothing: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Correct sentences with a single model.
    Correct {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        hp: HyperArgs,
    },
    /// Correct sentences with an ensemble of models or of member outputs.
    Ensemble {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        model: ModelArgs,
        /// Member output files (one corrected sentence per line); VOTE only.
        #[arg(long = "outputs", conflicts_with = "model")]
        outputs: Vec<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Votes an edit needs (default: members − 1, at least 1).
        #[arg(long)]
        n_min: Option<usize>,
        #[command(flatten)]
        hp: HyperArgs,
    },
    /// Score corrected sentences against M2 gold annotations.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Random search for the inference tweaks on an M2 dev set.
    Tune {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Vote)]
        mode: ModeArg,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long, default_value_t = 4)]
        max_iters: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Keep only the sentences a model changes, as a parallel TSV corpus.
    Distill {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Vote)]
        mode: ModeArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        limit: usize,
        #[arg(long)]
        n_min: Option<usize>,
        #[command(flatten)]
        hp: HyperArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Drop unedited pairs from a parallel TSV corpus.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Vote,
    Average,
}

impl From<ModeArg> for EnsembleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Vote => EnsembleMode::Vote,
            ModeArg::Average => EnsembleMode::Average,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// `baseline:PATH` (trained model) or `matrix:PATH` (probability file,
    /// needs --vocab). Repeat for ensembles.
    #[arg(long = "model", id = "model")]
    pub models: Vec<String>,

    /// Vocabulary for matrix members.
    #[arg(long)]
    pub vocab: Option<PathBuf>,

    /// Fail on sentences missing from a matrix file instead of keeping them.
    #[arg(long)]
    pub strict_matrix: bool,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Additive confidence bias on `$KEEP`.
    #[arg(long, default_value_t = 0.0)]
    pub ac: f64,
    /// Minimum error probability.
    #[arg(long, default_value_t = 0.0)]
    pub mep: f64,
    #[arg(long, default_value_t = 4)]
    pub max_iters: usize,
}

impl HyperArgs {
    fn to_hyperparams(&self, n_min: usize) -> Hyperparams {
        Hyperparams {
            ac: self.ac,
            mep: self.mep,
            max_iters: self.max_iters,
            n_min,
        }
    }
}

pub fn default_n_min(members: usize) -> usize {
    members.saturating_sub(1).max(1)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let lexicon = match (&cli.lexicon, cli.bundled_lexicon) {
        (Some(path), _) => VerbLexicon::load(path)?,
        (None, true) => VerbLexicon::bundled(),
        (None, false) => VerbLexicon::empty(),
    };
    let lex = &lexicon;

    match cli.command {
        Command::BuildVocab {
            input,
            size_cap,
            output,
        } => {
            let corpus = load_tsv(&input)?;
            let vocab = build_vocab(&corpus, size_cap, lex)?;
            write_output(
                output.as_deref(),
                |w| Ok(w.write_all(vocab.to_text().as_bytes())?),
            )
        }
        Command::Encode { input, output } => {
            let corpus = load_tsv(&input)?;
            let encoded: Vec<Vec<(TokenSeq, TagSeq)>> = corpus
                .pairs()
                .par_iter()
                .map(|p| encoding_passes(&p.source, &p.target, lex))
                .collect();
            write_output(output.as_deref(), |w| {
                for (tokens, tags) in encoded.iter().flatten() {
                    writeln!(w, "{tokens}\t{tags}")?;
                }
                Ok(())
            })
        }
        Command::Apply { input, output } => {
            let origin = input.display().to_string();
            let mut outputs = Vec::new();
            for (idx, line) in open(&input)?.lines().enumerate() {
                let line = line?;
                let (tokens, tags) = parse_tagged_line(&line, &origin, idx + 1)?;
                outputs.push(
                    apply_tags(&tokens, &tags, lex)
                        .map_err(|e| Error::format(&origin, idx + 1, e.to_string()))?,
                );
            }
            write_output(output.as_deref(), |w| Ok(write_sentences(w, &outputs)?))
        }
        Command::TrainBaseline {
            input,
            vocab,
            context_width,
            smoothing,
            output,
        } => {
            let corpus = load_tsv(&input)?;
            let vocab = TagVocab::load(&vocab)?;
            let model = train_baseline(&corpus, vocab, context_width, smoothing, lex)?;
            write_output(output.as_deref(), |w| Ok(model.save(w)?))
        }
        Command::Correct {
            model,
            input,
            output,
            hp,
        } => {
            let members = load_members(&model)?;
            let [tagger] = members.as_slice() else {
                bail!("correct takes exactly one --model (use `ensemble` for several)");
            };
            let sentences = load_sentences(&input)?;
            let hp = hp.to_hyperparams(1);
            let outputs = sentences
                .par_iter()
                .map(|s| Ok(run_pipeline(tagger, s, &hp, lex)?.output))
                .collect::<crate::Result<Vec<_>>>()?;
            write_output(output.as_deref(), |w| Ok(write_sentences(w, &outputs)?))
        }
        Command::Ensemble {
            mode,
            model,
            outputs: member_files,
            input,
            output,
            n_min,
            hp,
        } => {
            let sentences = load_sentences(&input)?;
            let corrected = if member_files.is_empty() {
                let members = load_members(&model)?;
                let hp = hp.to_hyperparams(n_min.unwrap_or(default_n_min(members.len())));
                sentences
                    .par_iter()
                    .map(|s| ensemble_correct(s, &members, &hp, mode.into(), lex))
                    .collect::<crate::Result<Vec<_>>>()?
            } else {
                if mode != ModeArg::Vote {
                    bail!("--outputs members only support --mode vote");
                }
                let n_min = n_min.unwrap_or(default_n_min(member_files.len()));
                let member_outputs = member_files
                    .iter()
                    .map(|p| {
                        let out = load_sentences(p)?;
                        if out.len() != sentences.len() {
                            bail!(
                                "{}: {} sentences, input has {}",
                                p.display(),
                                out.len(),
                                sentences.len()
                            );
                        }
                        Ok(out)
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                (0..sentences.len())
                    .into_par_iter()
                    .map(|i| {
                        let outs: Vec<TokenSeq> = member_outputs.iter().map(|m| m[i].clone()).collect();
                        vote_correct(&sentences[i], &outs, n_min)
                    })
                    .collect::<crate::Result<Vec<_>>>()?
            };
            write_output(output.as_deref(), |w| Ok(write_sentences(w, &corrected)?))
        }
        Command::Score { hyp, gold, output } => {
            let hyp = load_sentences(&hyp)?;
            let gold = read_m2(open(&gold)?, &gold.display().to_string())?;
            let report = score_outputs(&hyp, &gold)?;
            write_output(output.as_deref(), |w| Ok(writeln!(w, "{report}")?))
        }
        Command::Tune {
            model,
            mode,
            dev,
            trials,
            seed,
            n_min,
            max_iters,
            output,
        } => {
            let members = load_members(&model)?;
            let dev = read_m2(open(&dev)?, &dev.display().to_string())?;
            let base = Hyperparams {
                max_iters,
                n_min: n_min.unwrap_or(default_n_min(members.len())),
                ..Hyperparams::default()
            };
            let correct =
                |s: &TokenSeq, hp: &Hyperparams| ensemble_correct(s, &members, hp, mode.into(), lex);
            let outcome = tune_hyperparams(correct, &dev, base, trials, seed)?;
            write_output(output.as_deref(), |w| {
                Ok(w.write_all(outcome.to_report().as_bytes())?)
            })
        }
        Command::Distill {
            model,
            mode,
            input,
            limit,
            n_min,
            hp,
            output,
        } => {
            let members = load_members(&model)?;
            let hp = hp.to_hyperparams(n_min.unwrap_or(default_n_min(members.len())));
            hp.validate()?;
            let sentences = load_sentences(&input)?;
            let correct = |s: &TokenSeq| ensemble_correct(s, &members, &hp, mode.into(), lex);
            let (corpus, stats) = distill(correct, sentences, limit)?;
            debug_assert!(
                corpus
                    .pairs()
                    .iter()
                    .all(|p| !extract_edits(&p.source, &p.target).is_empty())
            );
            write_output(output.as_deref(), |w| Ok(write_tsv(w, &corpus)?))?;
            eprintln!(
                "processed {} edited {} failed {} edited_fraction {:.4}",
                stats.processed,
                stats.edited,
                stats.failed,
                stats.edited_fraction()
            );
            Ok(())
        }
        Command::Filter { input, output } => {
            let corpus = filter_edit_free(&load_tsv(&input)?);
            write_output(output.as_deref(), |w| Ok(write_tsv(w, &corpus)?))
        }
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn load_tsv(path: &Path) -> anyhow::Result<ParallelCorpus> {
    Ok(read_tsv(open(path)?, &path.display().to_string())?)
}

fn load_sentences(path: &Path) -> anyhow::Result<Vec<TokenSeq>> {
    Ok(read_sentences(open(path)?, &path.display().to_string())?)
}

fn parse_tagged_line(line: &str, origin: &str, lineno: usize) -> crate::Result<(TokenSeq, TagSeq)> {
    let Some((tokens, tags)) = line.split_once('\t') else {
        return Err(Error::format(origin, lineno, "expected `tokens<TAB>tags`"));
    };
    let positioned = |e: Error| Error::format(origin, lineno, e.to_string());
    let tokens = if tokens.is_empty() {
        TokenSeq::empty()
    } else {
        TokenSeq::new(tokens.split(' ')).map_err(positioned)?
    };
    let tags = TagSeq::parse_line(tags).map_err(positioned)?;
    Ok((tokens, tags))
}

fn load_members(args: &ModelArgs) -> anyhow::Result<Vec<Box<dyn Tagger>>> {
    if args.models.is_empty() {
        bail!("at least one --model is required");
    }
    let vocab = args.vocab.as_deref().map(TagVocab::load).transpose()?;
    let missing = if args.strict_matrix {
        MissingSentence::Error
    } else {
        MissingSentence::Keep
    };
    args.models
        .iter()
        .map(|spec| -> anyhow::Result<Box<dyn Tagger>> {
            let (kind, path) = spec
                .split_once(':')
                .with_context(|| format!("model spec {spec:?} must be baseline:PATH or matrix:PATH"))?;
            let path = Path::new(path);
            let origin = path.display().to_string();
            match kind {
                "baseline" => Ok(Box::new(BaselineModel::load(open(path)?, &origin)?)),
                "matrix" => {
                    let vocab = vocab.clone().context("matrix models need --vocab")?;
                    let (header, records) = read_matrix_file(open(path)?, &origin)?;
                    Ok(Box::new(MatrixTagger::new(vocab, &header, records, missing)?))
                }
                other => bail!("unknown model kind {other:?} in {spec:?}"),
            }
        })
        .collect()
}

/// Runs `fill` against the destination. Files are written to a temporary
/// sibling and renamed on success, so failures leave nothing behind.
fn write_output(
    path: Option<&Path>,
    fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let Some(path) = path else {
        let stdout = io::stdout();
        let mut w = BufWriter::new(stdout.lock());
        fill(&mut w)?;
        w.flush()?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    let mut w = BufWriter::new(tmp);
    fill(&mut w)?;
    let tmp = w.into_inner().map_err(|e| e.into_error())?;
    tmp.persist(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    Ok(())
}
