//! Experiment runners and report serialization behind the command-line tool.
//!
//! Trial `i` of a run with `--seed s` uses trial seed `s + i`. From a trial
//! seed, [`derive_seed`] stream 0 draws the hidden vector, stream 1 the
//! cover family and stream 2 the examples. Rows are emitted in trial order.
//!
//! CSV columns (frozen):
//! `seed,n,k,t,alpha,eta,delta,mistakes,samples,identified,exact_bound,paper_bound,wall_ns,inner_invocations`.
//! JSON output is an array of objects with the same keys in the same order.
//! Missing values are empty CSV fields and JSON `null`. `wall_ns` (and
//! `mean_round_ns` in tradeoff tables) are the only non-reproducible fields.

use std::io::Write;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::{sample_family, CoverFamily, CoverParams};
use crate::error::{Error, Result};
use crate::learner::{asymptotic_mistake_bound, OnlineLearner};
use crate::noisy::{noisy_learn, InnerLearner, MitmInner, NoisyParams, PacOnlineInner};
use crate::oracle::{derive_seed, gen_hidden, ExampleSource, Examples, LabeledExample, Noise};
use crate::pac::{pac_learn, PacParams};

/// Fields that depend on wall-clock time.
pub const WALL_CLOCK_FIELDS: &[&str] = &["wall_ns", "mean_round_ns"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Writes rows as CSV (header from the field names) or a JSON array.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, mut w: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for row in rows {
                csv.serialize(row).map_err(csv_err)?;
            }
            csv.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows).map_err(std::io::Error::from)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// One trial of a learning run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub t: Option<usize>,
    pub alpha: Option<usize>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub mistakes: Option<u64>,
    pub samples: u64,
    pub identified: bool,
    pub exact_bound: Option<u64>,
    pub paper_bound: Option<f64>,
    pub wall_ns: u64,
    pub inner_invocations: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub rows: Vec<TrialRow>,
}

impl RunReport {
    pub fn write<W: Write>(&self, format: OutputFormat, w: W) -> Result<()> {
        write_rows(&self.rows, format, w)
    }

    pub fn all_identified(&self) -> bool {
        self.rows.iter().all(|r| r.identified)
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiselessConfig {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub alpha: usize,
    pub trials: u64,
    pub seed: u64,
    /// Cap on examples per trial; defaults to `10 n + 100`.
    pub max_samples: Option<u64>,
    /// When set, trials run through the PAC conversion with this confidence.
    pub delta: Option<f64>,
}

impl NoiselessConfig {
    fn cap(&self) -> u64 {
        self.max_samples.unwrap_or(10 * self.n as u64 + 100)
    }
}

/// Online protocol: predict, reveal, update, until identification or the
/// sample cap.
fn run_online<S: Examples>(learner: &mut OnlineLearner, src: &mut S, cap: u64) -> Result<u64> {
    let mut samples = 0;
    while learner.identified().is_none() && samples < cap {
        let e = src.next_example()?;
        learner.observe(&e.a, e.label)?;
        samples += 1;
    }
    Ok(samples)
}

pub fn noiseless_trial(cfg: &NoiselessConfig, trial_seed: u64) -> Result<TrialRow> {
    let start = Instant::now();
    let hidden = gen_hidden(cfg.n, cfg.k, derive_seed(trial_seed, 0))?;
    let mut learner = OnlineLearner::new(cfg.n, cfg.k, cfg.t, cfg.alpha, derive_seed(trial_seed, 1))?;
    let mut src = ExampleSource::uniform(hidden.clone(), Noise::None, derive_seed(trial_seed, 2))?;
    let exact_bound = learner.exact_mistake_bound();
    let (samples, identified) = match cfg.delta {
        None => {
            let samples = run_online(&mut learner, &mut src, cfg.cap())?;
            (samples, learner.identified().as_ref() == Some(&hidden))
        }
        Some(delta) => {
            let params = PacParams::for_parities(delta, cfg.cap())?;
            match pac_learn(&mut learner, &mut src, &params) {
                Ok(out) => (out.samples, out.hypothesis == hidden),
                Err(Error::BudgetExhausted { samples, .. }) => (samples, false),
                Err(e) => return Err(e),
            }
        }
    };
    Ok(TrialRow {
        seed: trial_seed,
        n: cfg.n,
        k: cfg.k,
        t: Some(cfg.t),
        alpha: Some(cfg.alpha),
        eta: None,
        delta: cfg.delta,
        mistakes: Some(learner.mistakes()),
        samples,
        identified,
        exact_bound: Some(exact_bound),
        paper_bound: Some(asymptotic_mistake_bound(cfg.n, cfg.k, cfg.t)),
        wall_ns: elapsed_ns(start),
        inner_invocations: None,
    })
}

pub fn run_noiseless(cfg: &NoiselessConfig) -> Result<RunReport> {
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|i| noiseless_trial(cfg, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { rows })
}

/// Runs the online learner over a fixed example list. `identified` reports
/// whether the learner collapsed to a single vector; that vector is returned
/// alongside the row.
pub fn run_noiseless_replay(
    examples: Vec<LabeledExample>,
    n: usize,
    k: usize,
    t: usize,
    alpha: usize,
    seed: u64,
) -> Result<(TrialRow, Option<crate::gf2::BitVector>)> {
    let start = Instant::now();
    let mut learner = OnlineLearner::new(n, k, t, alpha, derive_seed(seed, 1))?;
    let count = examples.len() as u64;
    let mut src = ExampleSource::replay(n, examples)?;
    let samples = run_online(&mut learner, &mut src, count)?;
    let found = learner.identified();
    let row = TrialRow {
        seed,
        n,
        k,
        t: Some(t),
        alpha: Some(alpha),
        eta: None,
        delta: None,
        mistakes: Some(learner.mistakes()),
        samples,
        identified: found.is_some(),
        exact_bound: Some(learner.exact_mistake_bound()),
        paper_bound: Some(asymptotic_mistake_bound(n, k, t)),
        wall_ns: elapsed_ns(start),
        inner_invocations: None,
    };
    Ok((row, found))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerKind {
    Mitm,
    /// PAC-converted online learner with the given `t` and `alpha`.
    Online { t: usize, alpha: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyConfig {
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub delta: f64,
    pub inner: InnerKind,
    pub trials: u64,
    pub seed: u64,
    /// Overrides the inner learner's declared `s(delta/2)`.
    pub inner_samples: Option<u64>,
    pub flip_budget: u64,
}

impl NoisyConfig {
    fn params<I: InnerLearner + ?Sized>(&self, inner: &I) -> Result<NoisyParams> {
        match self.inner_samples {
            Some(s) => NoisyParams::new(self.eta, self.delta, s),
            None => NoisyParams::for_inner(self.eta, self.delta, inner),
        }
    }
}

pub fn noisy_trial(cfg: &NoisyConfig, trial_seed: u64) -> Result<TrialRow> {
    let start = Instant::now();
    let hidden = gen_hidden(cfg.n, cfg.k, derive_seed(trial_seed, 0))?;
    let mut src = ExampleSource::uniform(hidden.clone(), Noise::Bernoulli(cfg.eta), derive_seed(trial_seed, 2))?;
    let (t, alpha, outcome, params) = match cfg.inner {
        InnerKind::Mitm => {
            let inner = MitmInner { n: cfg.n, k: cfg.k };
            let params = cfg.params(&inner)?;
            (None, None, noisy_learn(&inner, &mut src, &params, cfg.flip_budget), params)
        }
        InnerKind::Online { t, alpha } => {
            let inner = PacOnlineInner::new(cfg.n, cfg.k, t, alpha, derive_seed(trial_seed, 1))?;
            let params = cfg.params(&inner)?;
            (Some(t), Some(alpha), noisy_learn(&inner, &mut src, &params, cfg.flip_budget), params)
        }
    };
    let (identified, invocations) = match outcome {
        Ok(out) => {
            info!(
                "trial {trial_seed}: {} candidates, winner disagreements {} (threshold {:.1}), runner-up {:?}",
                out.candidates.len(),
                out.winner_disagreements,
                out.separation_threshold,
                out.runner_up_disagreements
            );
            (out.hypothesis == hidden, out.inner_invocations)
        }
        Err(Error::NoCandidates) => (false, params.flip_set_count().try_into().unwrap_or(u64::MAX)),
        Err(e) => return Err(e),
    };
    Ok(TrialRow {
        seed: trial_seed,
        n: cfg.n,
        k: cfg.k,
        t,
        alpha,
        eta: Some(cfg.eta),
        delta: Some(cfg.delta),
        mistakes: None,
        samples: src.drawn(),
        identified,
        exact_bound: None,
        paper_bound: None,
        wall_ns: elapsed_ns(start),
        inner_invocations: Some(invocations),
    })
}

/// Trials run one after another; each reduction parallelizes internally.
pub fn run_noisy(cfg: &NoisyConfig) -> Result<RunReport> {
    let rows = (0..cfg.trials)
        .map(|i| noisy_trial(cfg, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { rows })
}

/// Draws one family with `seed` and certifies it if `C(T,k)` is within
/// `budget`; above the budget the family is returned unverified.
pub fn cover_check(n: usize, k: usize, t: usize, alpha: usize, seed: u64, budget: u64) -> Result<CoverFamily> {
    let params = CoverParams::new(n, k, t, alpha)?;
    let mut family = sample_family(&params, seed);
    match family.certify(budget) {
        Ok(_) | Err(Error::BudgetExceeded { .. }) => Ok(family),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub k: usize,
    pub alpha: usize,
    pub t_grid: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub max_samples: Option<u64>,
}

/// Per-trial measurements at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub seed: u64,
    pub charts: usize,
    pub samples: u64,
    pub mistakes: u64,
    pub identified: bool,
    pub round_ns: f64,
}

/// One row of the tradeoff table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub alpha: usize,
    pub trials: u64,
    pub identified: u64,
    pub mean_samples: f64,
    pub mean_mistakes: f64,
    pub mean_charts: f64,
    pub min_charts: usize,
    pub max_charts: usize,
    pub asymptotic_bound: f64,
    /// `log2(m(t_prev) / m(t)) / k` against the previous grid point.
    pub rate_log2: Option<f64>,
    /// `log2(t_prev / t)`, the `log2 C` to compare `rate_log2` with.
    pub shrink_log2: Option<f64>,
    pub mean_round_ns: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffPoint {
    pub row: BenchRow,
    pub per_trial: Vec<TrialStats>,
}

fn bench_trial(cfg: &BenchConfig, t: usize, trial_seed: u64) -> Result<TrialStats> {
    let hidden = gen_hidden(cfg.n, cfg.k, derive_seed(trial_seed, 0))?;
    let mut learner = OnlineLearner::new(cfg.n, cfg.k, t, cfg.alpha, derive_seed(trial_seed, 1))?;
    let charts = learner.charts().len();
    let mut src = ExampleSource::uniform(hidden.clone(), Noise::None, derive_seed(trial_seed, 2))?;
    let cap = cfg.max_samples.unwrap_or(10 * cfg.n as u64 + 100);
    let start = Instant::now();
    let samples = run_online(&mut learner, &mut src, cap)?;
    let round_ns = if samples == 0 {
        0.0
    } else {
        elapsed_ns(start) as f64 / samples as f64
    };
    Ok(TrialStats {
        seed: trial_seed,
        charts,
        samples,
        mistakes: learner.mistakes(),
        identified: learner.identified().as_ref() == Some(&hidden),
        round_ns,
    })
}

/// Measures samples-to-identify and chart counts across a grid of `t`.
/// Every grid point reuses the same trial seeds, so rows are paired.
pub fn bench_tradeoff(cfg: &BenchConfig) -> Result<Vec<TradeoffPoint>> {
    if cfg.t_grid.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParams("bench needs a nonempty t grid and trials >= 1".into()));
    }
    let mut points: Vec<TradeoffPoint> = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        let per_trial = (0..cfg.trials)
            .map(|i| bench_trial(cfg, t, cfg.seed.wrapping_add(i)))
            .collect::<Result<Vec<_>>>()?;
        let count = per_trial.len() as f64;
        let mean = |f: &dyn Fn(&TrialStats) -> f64| per_trial.iter().map(f).sum::<f64>() / count;
        let mean_charts = mean(&|s| s.charts as f64);
        let (rate_log2, shrink_log2) = match points.last() {
            Some(prev) if cfg.k > 0 => (
                Some((prev.row.mean_charts / mean_charts).log2() / cfg.k as f64),
                Some((prev.row.t as f64 / t as f64).log2()),
            ),
            _ => (None, None),
        };
        if let Some(rate) = rate_log2 {
            info!(
                "t = {t}: log2 chart ratio per unit k = {rate:.3}, log2(1.28 C) = {:.3}",
                shrink_log2.unwrap_or(0.0) + 1.28f64.log2()
            );
        }
        let row = BenchRow {
            n: cfg.n,
            k: cfg.k,
            t,
            alpha: cfg.alpha,
            trials: cfg.trials,
            identified: per_trial.iter().filter(|s| s.identified).count() as u64,
            mean_samples: mean(&|s| s.samples as f64),
            mean_mistakes: mean(&|s| s.mistakes as f64),
            mean_charts,
            min_charts: per_trial.iter().map(|s| s.charts).min().unwrap_or(0),
            max_charts: per_trial.iter().map(|s| s.charts).max().unwrap_or(0),
            asymptotic_bound: asymptotic_mistake_bound(cfg.n, cfg.k, t),
            rate_log2,
            shrink_log2,
            mean_round_ns: mean(&|s| s.round_ns),
        };
        points.push(TradeoffPoint { row, per_trial });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_is_frozen() {
        let report = RunReport {
            rows: vec![TrialRow {
                seed: 1,
                n: 8,
                k: 1,
                t: Some(2),
                alpha: Some(2),
                eta: None,
                delta: None,
                mistakes: Some(0),
                samples: 3,
                identified: true,
                exact_bound: Some(4),
                paper_bound: Some(5.0),
                wall_ns: 10,
                inner_invocations: None,
            }],
        };
        let mut out = Vec::new();
        report.write(OutputFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,n,k,t,alpha,eta,delta,mistakes,samples,identified,exact_bound,paper_bound,wall_ns,inner_invocations"
        );
        assert_eq!(lines.next().unwrap(), "1,8,1,2,2,,,0,3,true,4,5.0,10,");
    }

    #[test]
    fn noiseless_trials_are_reproducible() {
        let cfg = NoiselessConfig {
            n: 24,
            k: 2,
            t: 4,
            alpha: 2,
            trials: 4,
            seed: 9,
            max_samples: None,
            delta: None,
        };
        let strip = |r: RunReport| {
            r.rows
                .into_iter()
                .map(|mut row| {
                    row.wall_ns = 0;
                    row
                })
                .collect::<Vec<_>>()
        };
        let a = strip(run_noiseless(&cfg).unwrap());
        assert_eq!(a, strip(run_noiseless(&cfg).unwrap()));
        assert!(a.iter().all(|r| r.identified && r.mistakes <= r.exact_bound));
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![9, 10, 11, 12]);
    }

    #[test]
    fn pac_mode_runs() {
        let cfg = NoiselessConfig {
            n: 16,
            k: 2,
            t: 4,
            alpha: 2,
            trials: 3,
            seed: 0,
            max_samples: None,
            delta: Some(0.1),
        };
        let r = run_noiseless(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.delta == Some(0.1)));
    }

    #[test]
    fn bench_single_point_and_zero_sparsity() {
        let cfg = BenchConfig {
            n: 24,
            k: 0,
            alpha: 2,
            t_grid: vec![6],
            trials: 3,
            seed: 1,
            max_samples: None,
        };
        let pts = bench_tradeoff(&cfg).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].row.identified, 3);
        assert_eq!(pts[0].row.mean_mistakes, 0.0);
        assert!(bench_tradeoff(&BenchConfig { t_grid: vec![], ..cfg }).is_err());
    }

    #[test]
    fn noisy_trial_with_small_declared_sample() {
        let cfg = NoisyConfig {
            n: 12,
            k: 2,
            eta: 0.05,
            delta: 0.2,
            inner: InnerKind::Mitm,
            trials: 2,
            seed: 3,
            inner_samples: Some(1),
            flip_budget: crate::noisy::DEFAULT_FLIP_BUDGET,
        };
        let r = run_noisy(&cfg).unwrap();
        let params = NoisyParams::new(0.05, 0.2, 1).unwrap();
        for row in &r.rows {
            assert_eq!(row.inner_invocations, params.flip_set_count().try_into().ok());
        }
    }
}
