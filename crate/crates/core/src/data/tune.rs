use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::m2::M2Sentence;
use crate::edit::{Hyperparams, TokenSeq};
use crate::error::{Error, Result};
use crate::score::{ScoreReport, score_outputs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub ac: f64,
    pub mep: f64,
    pub report: ScoreReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: Hyperparams,
    pub report: ScoreReport,
    /// Every evaluated trial in sampling order; trial 0 is `(0, 0)`.
    pub trials: Vec<Trial>,
}

impl TuneOutcome {
    /// Deterministic text report: one line per trial, then the winner.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.trials.iter().enumerate() {
            writeln!(out, "trial {i} ac {} mep {} {}", t.ac, t.mep, t.report).unwrap();
        }
        writeln!(
            out,
            "best ac {} mep {} {}",
            self.best.ac, self.best.mep, self.report
        )
        .unwrap();
        out
    }
}

/// Random search over `(ac, mep)` in `[0, 1)²`.
///
/// Trial 0 is always `(0, 0)`; the remaining `trials - 1` pairs come from a
/// ChaCha8 stream seeded with `seed`. The winner maximizes corpus F0.5, ties
/// going to the lower `ac`, then the lower `mep`. Other fields of `base`
/// (iterations, quorum) are kept.
pub fn tune_hyperparams<F>(
    correct: F,
    dev: &[M2Sentence],
    base: Hyperparams,
    trials: usize,
    seed: u64,
) -> Result<TuneOutcome>
where
    F: Fn(&TokenSeq, &Hyperparams) -> Result<TokenSeq> + Sync,
{
    if trials == 0 {
        return Err(Error::Contract("tuning needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = vec![(0.0, 0.0)];
    candidates.extend((1..trials).map(|_| (rng.random::<f64>(), rng.random::<f64>())));

    let mut log = Vec::with_capacity(trials);
    for (ac, mep) in candidates {
        let hp = base.with_tweaks(ac, mep);
        let outputs = dev
            .par_iter()
            .map(|s| correct(&s.source, &hp))
            .collect::<Result<Vec<_>>>()?;
        log.push(Trial {
            ac,
            mep,
            report: score_outputs(&outputs, dev)?,
        });
    }

    let best = log
        .iter()
        .copied()
        .reduce(|best, t| {
            let (f, bf) = (t.report.f_half(), best.report.f_half());
            let better = f > bf || (f == bf && (t.ac, t.mep) < (best.ac, best.mep));
            if better { t } else { best }
        })
        .expect("at least one trial");
    Ok(TuneOutcome {
        best: base.with_tweaks(best.ac, best.mep),
        report: best.report,
        trials: log,
    })
}
