//! Learning sparse parities under random classification noise by reduction
//! to the noiseless problem.
//!
//! Draw `s'` examples, and for every set `S` of at most `floor(3/2 eta s')`
//! positions, flip those labels and run a noiseless learner on the result.
//! Each success is a candidate. A fresh batch of `s''` examples then picks the
//! candidate that agrees with the most labels. When the true noise positions
//! form one of the enumerated sets, the noiseless learner sees a clean sample
//! and the true parity is among the candidates; impostors agree with only
//! about half of the verification labels.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::baselines::mitm_learn;
use crate::cover::{binom, log2_big};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::learner::OnlineLearner;
use crate::oracle::{Examples, LabeledExample, SliceSource};
use crate::pac::{pac_learn, PacParams};

/// Default ceiling on the number of flip sets (inner invocations).
pub const DEFAULT_FLIP_BUDGET: u64 = 10_000_000;

const CHUNK: usize = 4096;

/// Binary entropy `H(p)` in bits, with `H(0) = H(1) = 0`.
pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("entropy argument {p} outside [0,1]")));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// A noiseless learner for weight-`k` parities over the uniform distribution.
pub trait InnerLearner: Sync {
    /// Examples the learner needs for confidence `1 - delta`.
    fn declared_samples(&self, delta: f64) -> u64;
    /// `Some(f)` on success, `None` when the sample admits no answer or the
    /// learner gives up.
    fn learn(&self, examples: &[LabeledExample], delta: f64) -> Option<BitVector>;
}

/// Meet-in-the-middle batch learner; succeeds when exactly one weight-`k`
/// vector is consistent with the sample.
#[derive(Clone, Debug)]
pub struct MitmInner {
    pub n: usize,
    pub k: usize,
}

impl InnerLearner for MitmInner {
    /// `ceil(log2(C(n,k) / delta))`: a union bound over the impostors, each
    /// consistent with `s` uniform examples with probability `2^-s`.
    fn declared_samples(&self, delta: f64) -> u64 {
        let count = log2_big(&binom(self.n as u64, self.k as u64));
        (count - delta.log2()).ceil().max(1.0) as u64
    }

    fn learn(&self, examples: &[LabeledExample], _delta: f64) -> Option<BitVector> {
        let mut out = mitm_learn(examples, self.n, self.k).ok()?;
        (out.len() == 1).then(|| out.pop().expect("one element"))
    }
}

/// The subspace-cover online learner wrapped in the PAC conversion. The
/// learner is built once; every invocation starts from a copy of it.
#[derive(Clone, Debug)]
pub struct PacOnlineInner {
    prototype: OnlineLearner,
}

impl PacOnlineInner {
    pub fn new(n: usize, k: usize, t: usize, alpha: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            prototype: OnlineLearner::new(n, k, t, alpha, seed)?,
        })
    }

    pub fn learner(&self) -> &OnlineLearner {
        &self.prototype
    }
}

impl InnerLearner for PacOnlineInner {
    /// Worst-case sample use of the conversion, `(m+1) * r`.
    fn declared_samples(&self, delta: f64) -> u64 {
        PacParams::for_parities(delta, u64::MAX)
            .map(|p| p.sample_bound(self.prototype.exact_mistake_bound()))
            .unwrap_or(u64::MAX)
    }

    fn learn(&self, examples: &[LabeledExample], delta: f64) -> Option<BitVector> {
        let params = PacParams::for_parities(delta, examples.len() as u64).ok()?;
        let mut learner = self.prototype.clone();
        let mut source = SliceSource::new(learner.n(), examples);
        let out = pac_learn(&mut learner, &mut source, &params).ok()?;
        (out.hypothesis.popcount() == learner.k()).then_some(out.hypothesis)
    }
}

/// Sample sizes and flip budget of the reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisyParams {
    pub eta: f64,
    pub delta: f64,
    /// `s(delta/2)` of the inner learner.
    pub inner_samples: u64,
    pub s_prime: u64,
    pub s_doubleprime: u64,
    pub flip_budget: u64,
}

impl NoisyParams {
    /// `s' = ceil(20 s log2(1/delta))`, `budget = floor(3/2 eta s')`,
    /// `s'' = ceil(600 (s' H(3 eta / 2) + log2(8/delta)))`.
    pub fn new(eta: f64, delta: f64, inner_samples: u64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0 / 3.0) {
            return Err(Error::InvalidParams(format!("noise rate {eta} outside (0, 1/3)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta {delta} outside (0,1)")));
        }
        let s_prime = (20.0 * inner_samples as f64 * (1.0 / delta).log2()).ceil() as u64;
        // The 1e-9 keeps products like 1.5 * 0.05 * 40 = 3.0000000000000004
        // and 2.9999999999999996 on the same side of the floor.
        let flip_budget = ((1.5 * eta * s_prime as f64) + 1e-9).floor() as u64;
        let h = entropy(1.5 * eta)?;
        let s_doubleprime = (600.0 * (s_prime as f64 * h + (8.0 / delta).log2())).ceil() as u64;
        Ok(Self {
            eta,
            delta,
            inner_samples,
            s_prime,
            s_doubleprime,
            flip_budget: flip_budget.min(s_prime),
        })
    }

    /// Parameters for `inner`, using its declared `s(delta/2)`.
    pub fn for_inner<I: InnerLearner + ?Sized>(eta: f64, delta: f64, inner: &I) -> Result<Self> {
        Self::new(eta, delta, inner.declared_samples(delta / 2.0))
    }

    pub fn total_samples(&self) -> u64 {
        self.s_prime + self.s_doubleprime
    }

    /// Number of flip sets, `sum_{i <= budget} C(s', i)`.
    pub fn flip_set_count(&self) -> BigUint {
        flip_set_count(self.s_prime, self.flip_budget)
    }
}

pub fn flip_set_count(s_prime: u64, budget: u64) -> BigUint {
    (0..=budget.min(s_prime)).map(|i| binom(s_prime, i)).sum()
}

/// Subsets of `0..s_prime` of size at most `budget`: by size, then
/// lexicographically, starting with the empty set.
#[derive(Clone, Debug)]
pub struct FlipSets {
    s_prime: usize,
    budget: usize,
    current: Option<Vec<usize>>,
}

impl FlipSets {
    pub fn new(s_prime: usize, budget: usize) -> Self {
        Self {
            s_prime,
            budget: budget.min(s_prime),
            current: Some(Vec::new()),
        }
    }

    fn advance(&self, c: &[usize]) -> Option<Vec<usize>> {
        let size = c.len();
        let mut next = c.to_vec();
        // Rightmost position that can still move right.
        for i in (0..size).rev() {
            if next[i] < self.s_prime - size + i {
                next[i] += 1;
                for j in i + 1..size {
                    next[j] = next[j - 1] + 1;
                }
                return Some(next);
            }
        }
        (size < self.budget).then(|| (0..size + 1).collect())
    }
}

impl Iterator for FlipSets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        self.current = self.advance(&out);
        Some(out)
    }
}

/// Flips the labels at the given positions. Applying it twice is the identity.
pub fn apply_flips(examples: &mut [LabeledExample], flips: &[usize]) {
    for &i in flips {
        examples[i].label = !examples[i].label;
    }
}

/// Number of verification examples each candidate labels correctly.
pub fn agreement_counts(candidates: &[BitVector], verif: &[LabeledExample]) -> Vec<u64> {
    candidates
        .iter()
        .map(|x| verif.iter().filter(|e| e.a.dot_unchecked(x) == e.label).count() as u64)
        .collect()
}

/// Index of the candidate with the most agreements; ties go to the lowest
/// index.
pub fn agreement_select(candidates: &[BitVector], verif: &[LabeledExample]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let counts = agreement_counts(candidates, verif);
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyOutcome {
    pub hypothesis: BitVector,
    pub inner_invocations: u64,
    /// Distinct candidate vectors, in order of first appearance.
    pub candidates: Vec<BitVector>,
    pub samples_drawn: u64,
    /// Verification disagreements of the winner.
    pub winner_disagreements: u64,
    /// Fewest disagreements among the other candidates, if any.
    pub runner_up_disagreements: Option<u64>,
    /// `5 s'' / 12`, the separation point between the true parity and
    /// impostors in the confidence argument.
    pub separation_threshold: f64,
}

/// Runs the reduction. Fails with `BudgetExceeded` before drawing anything
/// when the number of flip sets exceeds `max_flip_sets`.
pub fn noisy_learn<I, S>(inner: &I, source: &mut S, params: &NoisyParams, max_flip_sets: u64) -> Result<NoisyOutcome>
where
    I: InnerLearner + ?Sized,
    S: Examples + ?Sized,
{
    let count = params.flip_set_count();
    let count = match count.to_u64() {
        Some(c) if c <= max_flip_sets => c,
        _ => {
            return Err(Error::BudgetExceeded {
                what: "flip sets",
                required: count.to_string(),
                budget: max_flip_sets,
            })
        }
    };

    let primary: Vec<LabeledExample> = (0..params.s_prime)
        .map(|_| source.next_example())
        .collect::<Result<_>>()?;
    let inner_delta = params.delta / 2.0;

    let mut first_seen: HashMap<BitVector, usize> = HashMap::new();
    let mut candidates: Vec<BitVector> = Vec::new();
    let mut invocations = 0u64;
    let mut sets = FlipSets::new(params.s_prime as usize, params.flip_budget as usize);
    loop {
        let chunk: Vec<Vec<usize>> = sets.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        invocations += chunk.len() as u64;
        let results: Vec<Option<BitVector>> = chunk
            .par_iter()
            .map_init(
                || primary.clone(),
                |work, flips| {
                    apply_flips(work, flips);
                    let out = inner.learn(work, inner_delta);
                    apply_flips(work, flips);
                    out
                },
            )
            .collect();
        // Serial merge keeps the first flip set (in iterator order) per vector.
        for x in results.into_iter().flatten() {
            if !first_seen.contains_key(&x) {
                first_seen.insert(x.clone(), candidates.len());
                candidates.push(x);
            }
        }
    }
    debug_assert_eq!(invocations, count);
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }

    let verif: Vec<LabeledExample> = (0..params.s_doubleprime)
        .map(|_| source.next_example())
        .collect::<Result<_>>()?;
    let counts = agreement_counts(&candidates, &verif);
    let winner = agreement_select(&candidates, &verif)?;
    let disagreements = |i: usize| params.s_doubleprime - counts[i];
    let runner_up = (0..candidates.len())
        .filter(|&i| i != winner)
        .map(disagreements)
        .min();
    Ok(NoisyOutcome {
        hypothesis: candidates[winner].clone(),
        inner_invocations: invocations,
        candidates,
        samples_drawn: params.total_samples(),
        winner_disagreements: disagreements(winner),
        runner_up_disagreements: runner_up,
        separation_threshold: 5.0 * params.s_doubleprime as f64 / 12.0,
    })
}
