//! Turning a mistake-bound learner into a PAC learner.
//!
//! The conversion is prediction-driven: every incoming example is predicted
//! by the online learner, then revealed and used for an update. The learner
//! has at most `m + 1` distinct "eras" separated by mistakes; a run of `r`
//! consecutive correct predictions certifies the current hypothesis, where
//! `r = ceil(log_{1/(1-eps)}((m+1)/delta))`. Over the uniform distribution two
//! distinct parities disagree on exactly half the inputs, so `eps = 1/2` and
//! `r = ceil(log2((m+1)/delta))`.

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::oracle::Examples;

/// Progress of an online learner.
#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    /// The hypothesis space collapsed to a single vector.
    Identified(BitVector),
    Active { log2_mass_upper: f64, mistakes: u64 },
}

/// The online protocol shared by every learner in this crate.
pub trait MistakeBoundLearner {
    fn dim(&self) -> usize;
    fn predict(&self, a: &BitVector) -> Result<bool>;
    fn update(&mut self, a: &BitVector, y: bool) -> Result<()>;
    fn status(&self) -> Status;
    /// Worst-case number of mistakes on an honest stream, for this instance.
    fn mistake_bound(&self) -> u64;
    /// A point hypothesis, when the learner can name one.
    fn hypothesis(&self) -> Option<BitVector>;
    fn record_mistake(&mut self);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
    pub sample_budget: u64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64, sample_budget: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParams(format!("epsilon {epsilon} outside (0,1]")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta {delta} outside (0,1)")));
        }
        Ok(Self {
            epsilon,
            delta,
            sample_budget,
        })
    }

    /// Uniform-distribution parities: `eps = 1/2`.
    pub fn for_parities(delta: f64, sample_budget: u64) -> Result<Self> {
        Self::new(0.5, delta, sample_budget)
    }

    /// Length of the mistake-free run that certifies a hypothesis.
    pub fn survival_run(&self, mistake_bound: u64) -> u64 {
        let eras = (mistake_bound + 1) as f64;
        let per_example = if self.epsilon >= 1.0 {
            f64::INFINITY
        } else {
            -(1.0 - self.epsilon).log2()
        };
        ((eras / self.delta).log2() / per_example).ceil().max(1.0) as u64
    }

    /// Worst-case examples consumed: at most `m` broken runs of length `< r`,
    /// each ended by a mistake, then one run of length `r`.
    pub fn sample_bound(&self, mistake_bound: u64) -> u64 {
        (mistake_bound + 1) * self.survival_run(mistake_bound)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    Identified,
    SurvivalRun,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PacOutcome {
    pub hypothesis: BitVector,
    pub certificate: Certificate,
    pub samples: u64,
    pub mistakes: u64,
    /// The certification threshold `r` used.
    pub run_threshold: u64,
}

/// Runs the online protocol on `source` until the learner identifies the
/// target or survives `r` consecutive predictions.
pub fn pac_learn<L, S>(learner: &mut L, source: &mut S, params: &PacParams) -> Result<PacOutcome>
where
    L: MistakeBoundLearner + ?Sized,
    S: Examples + ?Sized,
{
    let threshold = params.survival_run(learner.mistake_bound());
    let mut samples = 0u64;
    let mut mistakes = 0u64;
    let mut run = 0u64;
    let mut best: Option<(u64, BitVector)> = None;
    let inconsistent = |e: Error| match e {
        Error::AllChartsEmpty => Error::InconsistentStream,
        other => other,
    };
    loop {
        if let Status::Identified(f) = learner.status() {
            return Ok(PacOutcome {
                hypothesis: f,
                certificate: Certificate::Identified,
                samples,
                mistakes,
                run_threshold: threshold,
            });
        }
        if run >= threshold {
            if let Some(h) = learner.hypothesis() {
                return Ok(PacOutcome {
                    hypothesis: h,
                    certificate: Certificate::SurvivalRun,
                    samples,
                    mistakes,
                    run_threshold: threshold,
                });
            }
        }
        let exhausted = |best: Option<(u64, BitVector)>| Error::BudgetExhausted {
            samples,
            best: best.map(|(_, h)| h),
        };
        if samples >= params.sample_budget {
            return Err(exhausted(best));
        }
        let ex = match source.next_example() {
            Ok(ex) => ex,
            Err(Error::SourceExhausted) => return Err(exhausted(best)),
            Err(e) => return Err(e),
        };
        samples += 1;
        let predicted = learner.predict(&ex.a).map_err(inconsistent)?;
        if predicted != ex.label {
            mistakes += 1;
            learner.record_mistake();
            run = 0;
        } else {
            run += 1;
        }
        learner.update(&ex.a, ex.label).map_err(inconsistent)?;
        if best.as_ref().is_none_or(|(len, _)| run > *len) {
            if let Some(h) = learner.hypothesis() {
                best = Some((run, h));
            }
        }
    }
}
