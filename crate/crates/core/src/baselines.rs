//! Reference learners: dense Gaussian elimination, explicit halving over all
//! weight-`k` candidates, and a meet-in-the-middle batch learner.

use std::collections::HashMap;

use itertools::Itertools;
use num_traits::ToPrimitive;

use crate::cover::binom;
use crate::error::{Error, Result};
use crate::gf2::{AffineSpace, BitVector};
use crate::oracle::LabeledExample;
use crate::pac::{MistakeBoundLearner, Status};

/// Default ceiling on `C(n,k)` for the explicit candidate set.
pub const DEFAULT_CANDIDATE_BUDGET: u64 = 1_000_000;

fn check_lengths(examples: &[LabeledExample], n: usize) -> Result<()> {
    match examples.iter().find(|e| e.a.len() != n) {
        Some(e) => Err(Error::LengthMismatch {
            expected: n,
            found: e.a.len(),
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GaussOutcome {
    UniqueSolution(BitVector),
    Underdetermined { rank: usize },
    Inconsistent,
}

/// Solves the full `n`-column system, ignoring sparsity.
pub fn gauss_learn(examples: &[LabeledExample], n: usize) -> Result<GaussOutcome> {
    check_lengths(examples, n)?;
    let space = AffineSpace::from_equations(n, examples.iter().map(|e| (&e.a, e.label)))?;
    Ok(if space.is_empty() {
        GaussOutcome::Inconsistent
    } else if space.rank() == n {
        GaussOutcome::UniqueSolution(space.sole_point()?)
    } else {
        GaussOutcome::Underdetermined { rank: space.rank() }
    })
}

/// Every weight-`k` vector still consistent with the examples seen.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    n: usize,
    k: usize,
    survivors: Vec<BitVector>,
    initial: u64,
    mistakes: u64,
}

impl CandidateSet {
    pub fn new(n: usize, k: usize, budget: u64) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParams(format!("k = {k} exceeds n = {n}")));
        }
        let total = binom(n as u64, k as u64);
        let initial = total.to_u64().filter(|&c| c <= budget).ok_or_else(|| Error::BudgetExceeded {
            what: "candidate enumeration C(n,k)",
            required: total.to_string(),
            budget,
        })?;
        let survivors = (0..n)
            .combinations(k)
            .map(|idx| BitVector::from_indices(n, &idx))
            .collect();
        Ok(Self {
            n,
            k,
            survivors,
            initial,
            mistakes: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn survivors(&self) -> &[BitVector] {
        &self.survivors
    }

    pub fn mistakes(&self) -> u64 {
        self.mistakes
    }

    /// Majority label over the survivors; ties go to 0.
    pub fn halving_predict(&self, a: &BitVector) -> Result<bool> {
        if a.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: a.len(),
            });
        }
        if self.survivors.is_empty() {
            return Err(Error::InconsistentStream);
        }
        let ones = self.survivors.iter().filter(|f| f.dot_unchecked(a)).count();
        Ok(2 * ones > self.survivors.len())
    }

    pub fn halving_update(&mut self, a: &BitVector, y: bool) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: a.len(),
            });
        }
        self.survivors.retain(|f| f.dot_unchecked(a) == y);
        if self.survivors.is_empty() {
            return Err(Error::InconsistentStream);
        }
        Ok(())
    }
}

impl MistakeBoundLearner for CandidateSet {
    fn dim(&self) -> usize {
        self.n
    }

    fn predict(&self, a: &BitVector) -> Result<bool> {
        self.halving_predict(a)
    }

    fn update(&mut self, a: &BitVector, y: bool) -> Result<()> {
        self.halving_update(a, y)
    }

    fn status(&self) -> Status {
        if self.survivors.len() == 1 {
            Status::Identified(self.survivors[0].clone())
        } else {
            Status::Active {
                log2_mass_upper: (self.survivors.len() as f64).log2(),
                mistakes: self.mistakes,
            }
        }
    }

    /// `floor(log2 C(n,k))`.
    fn mistake_bound(&self) -> u64 {
        u64::from(63 - self.initial.max(1).leading_zeros())
    }

    fn hypothesis(&self) -> Option<BitVector> {
        self.survivors.first().cloned()
    }

    fn record_mistake(&mut self) {
        self.mistakes += 1;
    }
}

/// All weight-`k` vectors consistent with `examples`, sorted.
///
/// Each `k`-set is split into its `ceil(k/2)` smallest coordinates `U` and the
/// remaining `floor(k/2)` coordinates `V`. Syndromes (the XOR of the example
/// columns over a coordinate set) of every `ceil(k/2)`-subset are hashed; each
/// `floor(k/2)`-subset `V` probes with `labels ^ syndrome(V)` and keeps the
/// matches with `max(U) < min(V)`. Work is `O(C(n, ceil(k/2)))` table entries
/// plus `O(C(n, floor(k/2)))` probes.
pub fn mitm_learn(examples: &[LabeledExample], n: usize, k: usize) -> Result<Vec<BitVector>> {
    check_lengths(examples, n)?;
    if k > n {
        return Ok(Vec::new());
    }
    let s = examples.len();
    let labels = BitVector::from_bools(&examples.iter().map(|e| e.label).collect::<Vec<_>>());
    if k == 0 {
        return Ok(if labels.is_zero() {
            vec![BitVector::zeros(n)]
        } else {
            Vec::new()
        });
    }
    let mut columns = vec![BitVector::zeros(s); n];
    for (i, e) in examples.iter().enumerate() {
        for j in e.a.ones_iter() {
            columns[j].set(i, true);
        }
    }
    let syndrome = |set: &[usize]| {
        let mut acc = BitVector::zeros(s);
        for &j in set {
            acc.xor_assign_unchecked(&columns[j]);
        }
        acc
    };

    let left = k.div_ceil(2);
    let right = k - left;
    let mut table: HashMap<BitVector, Vec<Vec<usize>>> = HashMap::new();
    for u in (0..n).combinations(left) {
        table.entry(syndrome(&u)).or_default().push(u);
    }

    let mut out = Vec::new();
    for v in (0..n).combinations(right) {
        let mut key = syndrome(&v);
        key.xor_assign_unchecked(&labels);
        let Some(matches) = table.get(&key) else {
            continue;
        };
        let lo = v.first().copied().unwrap_or(n);
        for u in matches {
            if *u.last().expect("left half is nonempty") < lo {
                let support: Vec<usize> = u.iter().chain(&v).copied().collect();
                out.push(BitVector::from_indices(n, &support));
            }
        }
    }
    out.sort();
    Ok(out)
}
