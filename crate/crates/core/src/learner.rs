//! Mistake-bound learner for weight-`k` parities over a random subspace cover.
//!
//! Each chart is the span of a union of partition parts, tracked as an affine
//! space in local coordinates. Prediction is a weighted vote: the label whose
//! consistent sub-spaces have more total points wins, so a wrong prediction
//! removes at least half of the total mass. Updating intersects every chart
//! with the labeled hyperplane and drops charts that became empty.

use log::warn;
use num_bigint::BigUint;
use num_traits::Zero;

use crate::cover::{self, binom, log2_big, CoverFamily, CoverParams, Coverage, DEFAULT_COVER_BUDGET};
use crate::error::{Error, Result};
use crate::gf2::{AffineSpace, BitVector};
use crate::oracle::derive_seed;
use crate::pac::{MistakeBoundLearner, Status};

/// Maximum number of family draws before giving up on certification.
const MAX_COVER_ATTEMPTS: usize = 64;

/// An affine space over the coordinates in `support`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceChart {
    support: Vec<usize>,
    space: AffineSpace,
}

impl SubspaceChart {
    /// Unconstrained chart spanning the standard basis vectors in `support`.
    pub fn full(mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        let space = AffineSpace::full(support.len());
        Self { support, space }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn space(&self) -> &AffineSpace {
        &self.space
    }

    /// Restricts an example to the chart. For `f` supported on the chart,
    /// `<a, f> = <a|support, f|support>`.
    fn local(&self, a: &BitVector) -> BitVector {
        a.restrict(&self.support)
    }

    pub fn contains(&self, f: &BitVector) -> bool {
        let outside = f.ones_iter().any(|i| self.support.binary_search(&i).is_err());
        !outside && self.space.contains(&f.restrict(&self.support))
    }

    pub fn constrain(&mut self, a: &BitVector, y: bool) -> Result<usize> {
        let local = self.local(a);
        self.space.constrain_in_place(&local, y)
    }

    /// The chart's unique point in global coordinates, if it has one.
    pub fn sole_point(&self, n: usize) -> Option<BitVector> {
        self.space.sole_point().ok().map(|p| p.embed(&self.support, n))
    }
}

/// Sums `2^e` over a histogram of exponents.
fn mass_from_counts(counts: &[u64]) -> BigUint {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .fold(BigUint::zero(), |acc, (e, &c)| acc + (BigUint::from(c) << e))
}

/// `kn/t + log2 C(t,k)`: the leading terms of the asymptotic mistake bound.
pub fn asymptotic_mistake_bound(n: usize, k: usize, t: usize) -> f64 {
    (k * n) as f64 / t as f64 + log2_big(&binom(t as u64, k as u64))
}

#[derive(Clone, Debug)]
pub struct OnlineLearner {
    n: usize,
    k: usize,
    params: Option<CoverParams>,
    cover_verified: bool,
    family_seed: u64,
    charts: Vec<SubspaceChart>,
    mistakes: u64,
    rounds: u64,
    initial_mass: BigUint,
    mass_history: Vec<BigUint>,
    row_ops: u64,
}

impl OnlineLearner {
    /// Builds the learner from a certified random cover with the default
    /// verification budget.
    pub fn new(n: usize, k: usize, t: usize, alpha: usize, seed: u64) -> Result<Self> {
        Self::with_cover_budget(n, k, t, alpha, seed, DEFAULT_COVER_BUDGET)
    }

    /// Draws families (first with `seed`, then with derived seeds) until one
    /// passes exhaustive verification. If `C(T,k)` is above `cover_budget`
    /// the first family is used unverified and a warning is logged.
    pub fn with_cover_budget(
        n: usize,
        k: usize,
        t: usize,
        alpha: usize,
        seed: u64,
        cover_budget: u64,
    ) -> Result<Self> {
        let params = CoverParams::new(n, k, t, alpha)?;
        let mut attempt_seed = seed;
        for attempt in 0..MAX_COVER_ATTEMPTS {
            let mut family = cover::sample_family(&params, attempt_seed);
            match family.certify(cover_budget) {
                Ok(Coverage::Covered) => return Ok(Self::from_family(&family)),
                Ok(Coverage::Uncovered(_)) => {
                    attempt_seed = derive_seed(seed, attempt as u64 + 1);
                }
                Err(Error::BudgetExceeded { required, .. }) => {
                    warn!(
                        "cover not verified: C(T,k) = {required} exceeds budget {cover_budget}; \
                         using family drawn with seed {attempt_seed}"
                    );
                    return Ok(Self::from_family(&family));
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::CoverNotFound {
            attempts: MAX_COVER_ATTEMPTS,
        })
    }

    /// One full chart per distinct family member.
    pub fn from_family(family: &CoverFamily) -> Self {
        let mut supports: Vec<Vec<usize>> = (0..family.m()).map(|i| family.support(i)).collect();
        supports.sort();
        supports.dedup();
        let charts = supports.into_iter().map(SubspaceChart::full).collect();
        let mut learner = Self::from_charts(family.params.n, family.params.k, charts);
        learner.params = Some(family.params);
        learner.cover_verified = family.verified;
        learner.family_seed = family.seed;
        learner
    }

    /// Learner over an explicit chart list (e.g. an exhaustive family).
    pub fn from_charts(n: usize, k: usize, charts: Vec<SubspaceChart>) -> Self {
        assert!(
            charts.iter().all(|c| c.support.iter().all(|&i| i < n)),
            "chart support outside 0..{n}"
        );
        let mut learner = Self {
            n,
            k,
            params: None,
            cover_verified: false,
            family_seed: 0,
            charts,
            mistakes: 0,
            rounds: 0,
            initial_mass: BigUint::zero(),
            mass_history: Vec::new(),
            row_ops: 0,
        };
        learner.charts.retain(|c| !c.space.is_empty());
        learner.initial_mass = learner.mass();
        learner
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> Option<&CoverParams> {
        self.params.as_ref()
    }

    pub fn cover_verified(&self) -> bool {
        self.cover_verified
    }

    /// Seed of the family actually used (after any reseeding).
    pub fn family_seed(&self) -> u64 {
        self.family_seed
    }

    pub fn charts(&self) -> &[SubspaceChart] {
        &self.charts
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Total row additions performed by updates so far.
    pub fn row_ops(&self) -> u64 {
        self.row_ops
    }

    pub fn initial_mass(&self) -> &BigUint {
        &self.initial_mass
    }

    /// Total mass after each update, in order.
    pub fn mass_history(&self) -> &[BigUint] {
        &self.mass_history
    }

    /// `sum_i |N_i|`, counting multiplicity across charts.
    pub fn mass(&self) -> BigUint {
        let top = self.charts.iter().map(|c| c.space.ambient_dim()).max().unwrap_or(0);
        let mut counts = vec![0u64; top + 1];
        for c in &self.charts {
            if let Some(e) = c.space.log2_size() {
                counts[e] += 1;
            }
        }
        mass_from_counts(&counts)
    }

    fn check_len(&self, a: &BitVector) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: a.len(),
            });
        }
        Ok(())
    }

    /// Total mass consistent with each label: `(sum |N_i(a,0)|, sum |N_i(a,1)|)`.
    pub fn label_masses(&self, a: &BitVector) -> Result<(BigUint, BigUint)> {
        self.check_len(a)?;
        if self.charts.is_empty() {
            return Err(Error::AllChartsEmpty);
        }
        let top = self.charts.iter().map(|c| c.space.ambient_dim()).max().unwrap_or(0);
        let mut zero = vec![0u64; top + 1];
        let mut one = vec![0u64; top + 1];
        for chart in &self.charts {
            let (s0, s1) = chart.space.split_sizes(&chart.local(a))?;
            if let Some(e) = s0 {
                zero[e] += 1;
            }
            if let Some(e) = s1 {
                one[e] += 1;
            }
        }
        Ok((mass_from_counts(&zero), mass_from_counts(&one)))
    }

    /// The label with the larger consistent mass; ties go to 0.
    pub fn predict(&self, a: &BitVector) -> Result<bool> {
        let (zero, one) = self.label_masses(a)?;
        Ok(one > zero)
    }

    /// Intersects every chart with `<a, f> = y` and drops empty charts.
    pub fn update(&mut self, a: &BitVector, y: bool) -> Result<()> {
        self.check_len(a)?;
        let mut ops = 0;
        for chart in &mut self.charts {
            ops += chart.constrain(a, y)?;
        }
        self.row_ops += ops as u64;
        self.charts.retain(|c| !c.space.is_empty());
        self.rounds += 1;
        self.mass_history.push(self.mass());
        if self.charts.is_empty() {
            return Err(Error::AllChartsEmpty);
        }
        Ok(())
    }

    /// Predict, compare with the revealed label, update. Returns whether the
    /// prediction was a mistake.
    pub fn observe(&mut self, a: &BitVector, y: bool) -> Result<bool> {
        let mistake = self.predict(a)? != y;
        if mistake {
            self.mistakes += 1;
        }
        self.update(a, y)?;
        Ok(mistake)
    }

    pub fn mistakes(&self) -> u64 {
        self.mistakes
    }

    /// `floor(log2(initial mass))`: every mistake halves the mass and the
    /// mass never drops below 1 on an honest stream.
    pub fn exact_mistake_bound(&self) -> u64 {
        self.initial_mass.bits().saturating_sub(1)
    }

    /// The single hidden vector, once every live chart is a point and all of
    /// those points coincide.
    pub fn identified(&self) -> Option<BitVector> {
        let mut points = self.charts.iter().map(|c| c.sole_point(self.n));
        let first = points.next()??;
        for p in points {
            if p.as_ref() != Some(&first) {
                return None;
            }
        }
        Some(first)
    }

    /// Whether `f` lies in the union of the embedded charts.
    pub fn union_contains(&self, f: &BitVector) -> bool {
        self.charts.iter().any(|c| c.contains(f))
    }
}

impl MistakeBoundLearner for OnlineLearner {
    fn dim(&self) -> usize {
        self.n
    }

    fn predict(&self, a: &BitVector) -> Result<bool> {
        OnlineLearner::predict(self, a)
    }

    fn update(&mut self, a: &BitVector, y: bool) -> Result<()> {
        OnlineLearner::update(self, a, y)
    }

    fn status(&self) -> Status {
        match self.identified() {
            Some(f) => Status::Identified(f),
            None => Status::Active {
                log2_mass_upper: log2_big(&self.mass()),
                mistakes: self.mistakes,
            },
        }
    }

    fn mistake_bound(&self) -> u64 {
        self.exact_mistake_bound()
    }

    /// The identified vector, otherwise the particular point of the most
    /// constrained live chart.
    fn hypothesis(&self) -> Option<BitVector> {
        if let Some(f) = self.identified() {
            return Some(f);
        }
        self.charts
            .iter()
            .filter_map(|c| c.space.log2_size().map(|s| (s, c)))
            .min_by_key(|(s, _)| *s)
            .and_then(|(_, c)| c.space.particular_point().map(|p| p.embed(&c.support, self.n)))
    }

    fn record_mistake(&mut self) {
        self.mistakes += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gen_hidden, ExampleSource, Examples, Noise};
    use itertools::Itertools;
    use num_traits::One;

    fn bv(s: &str) -> BitVector {
        BitVector::parse_bits(s).unwrap()
    }

    #[test]
    fn construction_arithmetic() {
        let l = OnlineLearner::new(8, 1, 2, 2, 4).unwrap();
        let p = l.params().unwrap();
        assert_eq!(p.parts, 4);
        assert!(l.cover_verified());
        for c in l.charts() {
            assert!(c.support().len() <= 2 * 2);
            assert_eq!(c.space().rank(), 0);
        }
        let m = l.charts().len() as u64;
        assert!(*l.initial_mass() <= BigUint::from(m) << (2 * 2));
        assert_eq!(l.mistakes(), 0);

        let again = OnlineLearner::new(8, 1, 2, 2, 4).unwrap();
        assert_eq!(l.charts(), again.charts());
    }

    #[test]
    fn support_bound_holds() {
        for (n, k, t, alpha) in [(64, 3, 12, 2), (13, 2, 3, 2), (50, 2, 8, 3)] {
            let l = OnlineLearner::new(n, k, t, alpha, 1).unwrap();
            let p = l.params().unwrap();
            let cap = p.subset_size() * p.max_part_size();
            assert!(l.charts().iter().all(|c| c.support().len() <= cap));
        }
    }

    #[test]
    fn every_weight_k_vector_is_in_some_chart() {
        let (n, k) = (12, 2);
        let l = OnlineLearner::new(n, k, 3, 2, 8).unwrap();
        assert!(l.cover_verified());
        for idx in (0..n).combinations(k) {
            let f = BitVector::from_indices(n, &idx);
            assert!(l.union_contains(&f), "{f} not covered");
        }
    }

    #[test]
    fn single_full_chart_ties_to_zero() {
        let l = OnlineLearner::from_charts(3, 1, vec![SubspaceChart::full(vec![0, 1, 2])]);
        let (m0, m1) = l.label_masses(&bv("101")).unwrap();
        assert_eq!((m0.clone(), m1), (BigUint::from(4u32), BigUint::from(4u32)));
        assert!(!l.predict(&bv("101")).unwrap());
    }

    #[test]
    fn forced_label_is_predicted() {
        let mut l = OnlineLearner::from_charts(3, 1, vec![SubspaceChart::full(vec![0, 1, 2])]);
        l.update(&bv("110"), true).unwrap();
        assert!(l.predict(&bv("110")).unwrap());
    }

    #[test]
    fn heavier_chart_wins_vote() {
        // Chart A: full 3-dim (8 points), a splits it 4/4.
        // Chart B: 2-dim constrained to label 1 on a: (0, 2) points per label.
        // Enumerated: label 0 mass = 4 + 0, label 1 mass = 4 + 2.
        let a = bv("1100");
        let mut b = SubspaceChart::full(vec![1, 3]);
        b.constrain(&a, true).unwrap();
        let l = OnlineLearner::from_charts(4, 1, vec![SubspaceChart::full(vec![0, 1, 2]), b]);
        let (m0, m1) = l.label_masses(&a).unwrap();
        assert_eq!(m0, BigUint::from(4u32));
        assert_eq!(m1, BigUint::from(6u32));
        assert!(l.predict(&a).unwrap());

        // Chart A is forced to label 0 on a (8 points vs 0); chart B splits
        // 2/2. Label 0 mass = 8 + 2, label 1 mass = 0 + 2.
        let a = bv("00010");
        let l = OnlineLearner::from_charts(
            5,
            1,
            vec![SubspaceChart::full(vec![0, 1, 2]), SubspaceChart::full(vec![3, 4])],
        );
        let (m0, m1) = l.label_masses(&a).unwrap();
        assert_eq!((m0, m1), (BigUint::from(10u32), BigUint::from(2u32)));
        assert!(!l.predict(&a).unwrap());
    }

    #[test]
    fn repeated_and_contradictory_updates() {
        let mut l = OnlineLearner::from_charts(3, 1, vec![SubspaceChart::full(vec![0, 1, 2])]);
        let a = bv("011");
        l.update(&a, false).unwrap();
        let after_first = l.mass();
        l.update(&a, false).unwrap();
        assert_eq!(l.mass(), after_first);
        assert!(matches!(l.update(&a, true), Err(Error::AllChartsEmpty)));
        assert!(matches!(l.predict(&a), Err(Error::AllChartsEmpty)));
    }

    #[test]
    fn identifies_with_independent_examples() {
        let n = 4;
        let f = bv("0010");
        let l0 = OnlineLearner::new(n, 1, 2, 2, 3).unwrap();
        let mut l = l0.clone();
        assert!(matches!(l.status(), Status::Active { mistakes: 0, .. }));
        for i in 0..n {
            let a = BitVector::from_indices(n, &[i]);
            let y = a.dot(&f).unwrap();
            l.observe(&a, y).unwrap();
            assert!(l.union_contains(&f));
        }
        assert_eq!(l.status(), Status::Identified(f.clone()));
        assert_eq!(l.identified().unwrap().popcount(), 1);
    }

    #[test]
    fn halving_and_invariant_on_random_streams() {
        for seed in 0..20 {
            let (n, k, t) = (24, 2, 4);
            let f = gen_hidden(n, k, seed).unwrap();
            let mut src = ExampleSource::uniform(f.clone(), Noise::None, seed + 100).unwrap();
            let mut l = OnlineLearner::new(n, k, t, 2, seed).unwrap();
            let mut prev = l.mass();
            for _ in 0..60 {
                let e = src.next_example().unwrap();
                let mistake = l.observe(&e.a, e.label).unwrap();
                let now = l.mass();
                assert!(now <= prev);
                if mistake {
                    assert!(now <= &prev >> 1);
                }
                assert!(l.union_contains(&f));
                prev = now;
                if l.identified().is_some() {
                    break;
                }
            }
            assert_eq!(l.identified(), Some(f));
            assert!(l.mistakes() <= l.exact_mistake_bound());
        }
    }

    #[test]
    fn update_cost_is_quadratic_in_chart_dimension() {
        let (n, k, t) = (64, 3, 12);
        let f = gen_hidden(n, k, 5).unwrap();
        let mut src = ExampleSource::uniform(f, Noise::None, 6).unwrap();
        let mut l = OnlineLearner::new(n, k, t, 2, 5).unwrap();
        for _ in 0..40 {
            let before = l.row_ops();
            let bound: u64 = l
                .charts()
                .iter()
                .map(|c| 2 * c.space().ambient_dim() as u64)
                .sum();
            let e = src.next_example().unwrap();
            l.observe(&e.a, e.label).unwrap();
            // At most 2*rank row additions per chart, each one pass over the row words.
            assert!(l.row_ops() - before <= bound);
        }
    }

    #[test]
    fn k_zero_is_identified_immediately() {
        let l = OnlineLearner::new(10, 0, 3, 2, 1).unwrap();
        assert_eq!(l.identified(), Some(BitVector::zeros(10)));
        assert_eq!(l.exact_mistake_bound(), 0);
        assert_eq!(*l.initial_mass(), BigUint::one());
    }
}
