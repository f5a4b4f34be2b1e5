//! Random covering families over a partition of the coordinates.
//!
//! The coordinates `0..n` are split round-robin into `T = alpha * t` parts.
//! A family of `m` random `alpha*k`-subsets of the parts is drawn so that, with
//! good probability, every `k`-subset of parts sits inside at least one member.
//! Since any weight-`k` vector touches at most `k` parts, a covering family
//! gives a set of charts (unions of parts) that jointly contain every
//! weight-`k` vector.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default ceiling on `C(T, k)` for exhaustive cover verification.
pub const DEFAULT_COVER_BUDGET: u64 = 1_000_000;

/// Exact binomial coefficient, zero when `y > x`.
pub fn binom(x: u64, y: u64) -> BigUint {
    if y > x {
        return BigUint::zero();
    }
    let y = y.min(x - y);
    let mut acc = BigUint::one();
    for i in 0..y {
        acc *= x - i;
        acc /= i + 1;
    }
    acc
}

/// `log2(x)` for a positive big integer; `-inf` for zero.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64 bits");
    top.log2() + shift as f64
}

pub fn ln_big(x: &BigUint) -> f64 {
    log2_big(x) * std::f64::consts::LN_2
}

/// Parameters of the covering construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoverParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub alpha: usize,
    #[serde(rename = "T")]
    pub parts: usize,
}

impl CoverParams {
    pub fn new(n: usize, k: usize, t: usize, alpha: usize) -> Result<Self> {
        if alpha < 2 {
            return Err(Error::InvalidParams(format!("alpha must be >= 2, got {alpha}")));
        }
        if t == 0 || k > t || t > n {
            return Err(Error::InvalidParams(format!(
                "need k <= t <= n and t >= 1, got k={k} t={t} n={n}"
            )));
        }
        let parts = alpha
            .checked_mul(t)
            .filter(|&p| p <= n)
            .ok_or_else(|| Error::InvalidParams(format!("alpha*t = {alpha}*{t} exceeds n = {n}")))?;
        Ok(Self {
            n,
            k,
            t,
            alpha,
            parts,
        })
    }

    /// Size `alpha * k` of each family member.
    pub fn subset_size(&self) -> usize {
        self.alpha * self.k
    }

    /// Largest part size, `ceil(n / T)`.
    pub fn max_part_size(&self) -> usize {
        self.n.div_ceil(self.parts)
    }

    /// `C(T, alpha k) / C(T-k, alpha k - k)`: the inverse probability that a
    /// random member contains a fixed `k`-set of parts.
    pub fn cover_ratio(&self) -> (BigUint, BigUint) {
        let (big_t, ak, k) = (self.parts as u64, self.subset_size() as u64, self.k as u64);
        (binom(big_t, ak), binom(big_t - k, ak - k))
    }
}

/// Family size `m = ceil(2 * ratio * ln C(T,k))`, at least 1.
pub fn family_size_m(params: &CoverParams) -> u64 {
    let (num, den) = params.cover_ratio();
    let ratio = match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => (ln_big(&num) - ln_big(&den)).exp(),
    };
    let ln_sets = ln_big(&binom(params.parts as u64, params.k as u64));
    let m = (2.0 * ratio * ln_sets).ceil();
    if m.is_finite() && m >= 1.0 {
        m as u64
    } else {
        1
    }
}

/// Outcome of exhaustive cover verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    Covered,
    /// The lexicographically first `k`-subset of parts not contained in any
    /// family member.
    Uncovered(Vec<usize>),
}

/// A partition of the coordinates together with a family of part subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverFamily {
    pub params: CoverParams,
    pub seed: u64,
    pub parts: Vec<Vec<usize>>,
    pub subsets: Vec<Vec<usize>>,
    pub verified: bool,
}

/// Round-robin partition: coordinate `i` goes to part `i mod T`.
pub fn round_robin_parts(n: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(n.div_ceil(parts)); parts];
    for i in 0..n {
        out[i % parts].push(i);
    }
    out
}

/// Draws the partition and `family_size_m` uniform `alpha*k`-subsets of the
/// parts from a ChaCha8 stream seeded with `seed`. The result is unverified.
pub fn sample_family(params: &CoverParams, seed: u64) -> CoverFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = family_size_m(params);
    let size = params.subset_size();
    let subsets = (0..m)
        .map(|_| {
            let mut s = rand::seq::index::sample(&mut rng, params.parts, size).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    CoverFamily {
        params: *params,
        seed,
        parts: round_robin_parts(params.n, params.parts),
        subsets,
        verified: false,
    }
}

/// Colexicographic rank of a sorted combination.
fn colex_rank(combo: &[usize], table: &[Vec<u64>]) -> usize {
    combo
        .iter()
        .enumerate()
        .map(|(i, &c)| table[c][i + 1] as usize)
        .sum()
}

impl CoverFamily {
    pub fn m(&self) -> usize {
        self.subsets.len()
    }

    /// Checks every `k`-subset of `[T]` against the family. Fails with
    /// `BudgetExceeded` when `C(T,k) > budget`.
    pub fn verify_cover(&self, budget: u64) -> Result<Coverage> {
        let (big_t, k) = (self.params.parts, self.params.k);
        let total = binom(big_t as u64, k as u64);
        let total = match total.to_u64() {
            Some(c) if c <= budget => c as usize,
            _ => {
                return Err(Error::BudgetExceeded {
                    what: "cover verification C(T,k)",
                    required: total.to_string(),
                    budget,
                })
            }
        };
        // table[a][b] = C(a, b) for a <= T, b <= k; every entry used is <= C(T,k).
        let table: Vec<Vec<u64>> = (0..=big_t)
            .map(|a| {
                (0..=k)
                    .map(|b| binom(a as u64, b as u64).to_u64().unwrap_or(u64::MAX))
                    .collect()
            })
            .collect();
        let mut covered = vec![false; total];
        for s in &self.subsets {
            for combo in s.iter().copied().combinations(k) {
                covered[colex_rank(&combo, &table)] = true;
            }
        }
        for combo in (0..big_t).combinations(k) {
            if !covered[colex_rank(&combo, &table)] {
                return Ok(Coverage::Uncovered(combo));
            }
        }
        Ok(Coverage::Covered)
    }

    /// Runs [`verify_cover`](Self::verify_cover) and records the verdict.
    pub fn certify(&mut self, budget: u64) -> Result<Coverage> {
        let c = self.verify_cover(budget)?;
        self.verified = c == Coverage::Covered;
        Ok(c)
    }

    /// Sorted union of the parts named by family member `i`.
    pub fn support(&self, i: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self.subsets[i]
            .iter()
            .flat_map(|&j| self.parts[j].iter().copied())
            .collect();
        s.sort_unstable();
        s
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            n: usize,
            k: usize,
            t: usize,
            alpha: usize,
            #[serde(rename = "T")]
            big_t: usize,
            m: usize,
            seed: u64,
            verified: bool,
            parts: &'a [Vec<usize>],
            subsets: &'a [Vec<usize>],
        }
        let p = &self.params;
        serde_json::to_string(&Out {
            n: p.n,
            k: p.k,
            t: p.t,
            alpha: p.alpha,
            big_t: p.parts,
            m: self.m(),
            seed: self.seed,
            verified: self.verified,
            parts: &self.parts,
            subsets: &self.subsets,
        })
        .expect("serializable")
    }
}

/// Exact comparison of `C(T, alpha k) / C(T-k, alpha k - k)` against
/// `e^{-k/4.01} C(t, k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub t: usize,
    pub k: usize,
    pub alpha: usize,
    pub ratio_log2: f64,
    pub rhs_log2: f64,
    /// `log2 C(t,k)`.
    pub trivial_log2: f64,
    /// `ratio < C(t,k)`, decided on exact integers.
    pub below_trivial: bool,
    pub holds: bool,
}

impl RatioReport {
    pub fn margin_log2(&self) -> f64 {
        self.rhs_log2 - self.ratio_log2
    }
}

pub fn ratio_bound_report(t: usize, k: usize, alpha: usize) -> Result<RatioReport> {
    if k > t || alpha == 0 {
        return Err(Error::InvalidParams(format!(
            "need alpha*k <= alpha*t, got k={k} t={t} alpha={alpha}"
        )));
    }
    let big_t = (alpha * t) as u64;
    let (k64, ak) = (k as u64, (alpha * k) as u64);
    let num = binom(big_t, ak);
    let den = binom(big_t - k64, ak - k64);
    let ctk = binom(t as u64, k64);
    let ratio_log2 = log2_big(&num) - log2_big(&den);
    let trivial_log2 = log2_big(&ctk);
    let rhs_log2 = trivial_log2 - k as f64 / (4.01 * std::f64::consts::LN_2);
    Ok(RatioReport {
        t,
        k,
        alpha,
        ratio_log2,
        rhs_log2,
        trivial_log2,
        below_trivial: num < &ctk * &den,
        holds: ratio_log2 <= rhs_log2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pascal(max: usize) -> Vec<Vec<BigUint>> {
        let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for x in 1..=max {
            let prev = &rows[x - 1];
            let mut row = vec![BigUint::one(); x + 1];
            for y in 1..x {
                row[y] = &prev[y - 1] + &prev[y];
            }
            rows.push(row);
        }
        rows
    }

    #[test]
    fn binom_matches_pascal() {
        let p = pascal(64);
        for x in 0..=64u64 {
            for y in 0..=x + 2 {
                let want = p[x as usize].get(y as usize).cloned().unwrap_or_default();
                assert_eq!(binom(x, y), want, "C({x},{y})");
            }
        }
        assert_eq!(binom(10, 4), BigUint::from(210u32));
        assert_eq!(binom(7, 0), BigUint::one());
        assert_eq!(binom(5, 7), BigUint::zero());
    }

    fn params_with(big_t: usize, k: usize, alpha: usize) -> CoverParams {
        CoverParams::new(big_t, k, big_t / alpha, alpha).unwrap()
    }

    #[test]
    fn family_size_examples() {
        assert_eq!(family_size_m(&params_with(10, 2, 2)), 58);
        assert_eq!(family_size_m(&params_with(6, 1, 2)), 11);
        assert_eq!(family_size_m(&params_with(6, 0, 2)), 1);
    }

    #[test]
    fn params_validation() {
        assert!(CoverParams::new(8, 3, 2, 2).is_err());
        assert!(CoverParams::new(8, 1, 5, 2).is_err());
        assert!(CoverParams::new(8, 1, 2, 1).is_err());
        assert!(CoverParams::new(8, 1, 0, 2).is_err());
        assert_eq!(CoverParams::new(8, 1, 2, 2).unwrap().parts, 4);
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        let p = CoverParams::new(12, 1, 3, 2).unwrap();
        let a = sample_family(&p, 99);
        assert_eq!(a, sample_family(&p, 99));
        assert!(a.parts.iter().all(|part| part.len() == 2));

        let p = CoverParams::new(13, 1, 3, 2).unwrap();
        let f = sample_family(&p, 5);
        let mut sizes: Vec<usize> = f.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2, 2]);
        sizes.sort_unstable();
        let mut all: Vec<usize> = f.parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..13).collect::<Vec<_>>());
        assert!(f.subsets.iter().all(|s| s.len() == 2 && s.windows(2).all(|w| w[0] < w[1])));
    }

    fn family(big_t: usize, k: usize, subsets: Vec<Vec<usize>>) -> CoverFamily {
        let params = CoverParams {
            n: big_t,
            k,
            t: big_t / 2,
            alpha: 2,
            parts: big_t,
        };
        CoverFamily {
            params,
            seed: 0,
            parts: round_robin_parts(big_t, big_t),
            subsets,
            verified: false,
        }
    }

    #[test]
    fn verify_cover_examples() {
        let mut f = family(6, 2, vec![(0..6).collect()]);
        assert_eq!(f.certify(DEFAULT_COVER_BUDGET).unwrap(), Coverage::Covered);
        assert!(f.verified);

        let f = family(4, 2, vec![vec![0, 1, 2]]);
        assert_eq!(f.verify_cover(100).unwrap(), Coverage::Uncovered(vec![0, 3]));

        let f = family(4, 1, vec![]);
        assert_eq!(f.verify_cover(100).unwrap(), Coverage::Uncovered(vec![0]));

        let f = family(30, 5, vec![]);
        assert!(matches!(f.verify_cover(1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn verify_matches_naive_scan() {
        for seed in 0..30 {
            let p = CoverParams::new(10, 2, 5, 2).unwrap();
            let mut f = sample_family(&p, seed);
            f.subsets.truncate((seed as usize % 12) + 1);
            let naive = (0..10)
                .combinations(2)
                .find(|a| !f.subsets.iter().any(|s| a.iter().all(|x| s.contains(x))));
            let got = f.verify_cover(DEFAULT_COVER_BUDGET).unwrap();
            match naive {
                Some(w) => assert_eq!(got, Coverage::Uncovered(w)),
                None => assert_eq!(got, Coverage::Covered),
            }
        }
    }

    #[test]
    fn ratio_report_edges() {
        let r = ratio_bound_report(7, 0, 2).unwrap();
        assert_eq!(r.ratio_log2, 0.0);
        assert_eq!(r.rhs_log2, 0.0);
        assert!(r.holds);
        // t = k is outside the asymptotic regime; just make sure it is produced.
        let r = ratio_bound_report(4, 4, 2).unwrap();
        assert!(r.ratio_log2.is_finite());
        assert!(ratio_bound_report(3, 4, 2).is_err());
    }

    #[test]
    fn json_schema_keys() {
        let p = CoverParams::new(8, 1, 2, 2).unwrap();
        let f = sample_family(&p, 1);
        let v: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["n", "k", "t", "alpha", "T", "m", "seed", "verified", "parts", "subsets"] {
            assert!(keys.contains(&k), "missing {k}");
        }
    }
}
