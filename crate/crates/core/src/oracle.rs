//! Example sources: hidden parities, uniform and replayed examples, and
//! Bernoulli label noise.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), whose output stream is
//! fixed by its reference specification, so a given seed produces the same
//! examples on every platform. A uniform example consumes one `next_u64` per
//! storage word of the vector; when noise is enabled, one further `f64` draw
//! decides the flip.

use std::io::{BufRead, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::BitVector;

/// A vector `a` together with its (possibly noisy) label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledExample {
    pub a: BitVector,
    pub label: bool,
}

impl LabeledExample {
    pub fn new(a: BitVector, label: bool) -> Self {
        Self { a, label }
    }
}

/// Anything that hands out labeled examples one at a time.
pub trait Examples {
    fn dim(&self) -> usize;
    fn next_example(&mut self) -> Result<LabeledExample>;
}

/// Mixes a stream index into a seed (SplitMix64 finalizer), so independent
/// consumers can be derived from one user-provided seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniformly random weight-`k` vector of length `n`.
pub fn gen_hidden(n: usize, k: usize, seed: u64) -> Result<BitVector> {
    if k > n {
        return Err(Error::InvalidParams(format!("k = {k} exceeds n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    Ok(BitVector::from_indices(n, &idx))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    None,
    Bernoulli(f64),
}

#[derive(Clone, Debug)]
enum Kind {
    Uniform,
    Replay { examples: Vec<LabeledExample>, pos: usize },
}

/// The example oracle.
#[derive(Clone, Debug)]
pub struct ExampleSource {
    n: usize,
    hidden: Option<BitVector>,
    kind: Kind,
    noise: Noise,
    rng: ChaCha8Rng,
    flip_log: Vec<bool>,
    drawn: u64,
}

impl ExampleSource {
    /// Uniform examples labeled by `hidden`, with optional label noise.
    pub fn uniform(hidden: BitVector, noise: Noise, seed: u64) -> Result<Self> {
        if let Noise::Bernoulli(eta) = noise {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParams(format!("noise rate {eta} outside [0,1]")));
            }
        }
        Ok(Self {
            n: hidden.len(),
            hidden: Some(hidden),
            kind: Kind::Uniform,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            flip_log: Vec::new(),
            drawn: 0,
        })
    }

    /// Replays a fixed list of examples verbatim, then reports exhaustion.
    pub fn replay(n: usize, examples: Vec<LabeledExample>) -> Result<Self> {
        if let Some(bad) = examples.iter().find(|e| e.a.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bad.a.len(),
            });
        }
        Ok(Self {
            n,
            hidden: None,
            kind: Kind::Replay { examples, pos: 0 },
            noise: Noise::None,
            rng: ChaCha8Rng::seed_from_u64(0),
            flip_log: Vec::new(),
            drawn: 0,
        })
    }

    pub fn hidden(&self) -> Option<&BitVector> {
        self.hidden.as_ref()
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    /// Per-example record of whether the label was flipped. Test
    /// introspection only; learners never see it.
    pub fn flip_log(&self) -> &[bool] {
        &self.flip_log
    }

    /// Splits off an independent source. The child keeps the same hidden
    /// vector and noise model and is seeded with the parent's next `u64`.
    pub fn fork(&mut self) -> Self {
        let seed = self.rng.next_u64();
        let mut child = self.clone();
        child.rng = ChaCha8Rng::seed_from_u64(seed);
        child.flip_log.clear();
        child.drawn = 0;
        child
    }

    pub fn take(&mut self, count: usize) -> Result<Vec<LabeledExample>> {
        (0..count).map(|_| self.next_example()).collect()
    }
}

impl Examples for ExampleSource {
    fn dim(&self) -> usize {
        self.n
    }

    fn next_example(&mut self) -> Result<LabeledExample> {
        let ex = match &mut self.kind {
            Kind::Replay { examples, pos } => {
                let ex = examples.get(*pos).cloned().ok_or(Error::SourceExhausted)?;
                *pos += 1;
                ex
            }
            Kind::Uniform => {
                let hidden = self.hidden.as_ref().expect("uniform sources carry a hidden vector");
                let a = BitVector::random(self.n, &mut self.rng);
                let clean = a.dot_unchecked(hidden);
                let flip = match self.noise {
                    Noise::None => false,
                    Noise::Bernoulli(eta) => self.rng.gen::<f64>() < eta,
                };
                self.flip_log.push(flip);
                LabeledExample::new(a, clean ^ flip)
            }
        };
        self.drawn += 1;
        Ok(ex)
    }
}

/// Borrowing replay over a slice; used to hand a fixed sample to a learner
/// without copying it.
pub struct SliceSource<'a> {
    n: usize,
    examples: &'a [LabeledExample],
    pos: usize,
}

impl<'a> SliceSource<'a> {
    pub fn new(n: usize, examples: &'a [LabeledExample]) -> Self {
        Self { n, examples, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl Examples for SliceSource<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn next_example(&mut self) -> Result<LabeledExample> {
        let ex = self.examples.get(self.pos).cloned().ok_or(Error::SourceExhausted)?;
        self.pos += 1;
        Ok(ex)
    }
}

/// Reads the example-stream format: one example per line,
/// `<n bits as a 0/1 string> <label 0/1>`. Blank lines are skipped.
pub fn read_stream<R: BufRead>(reader: R) -> Result<(usize, Vec<LabeledExample>)> {
    let mut n = None;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parse_err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let mut fields = trimmed.split(' ');
        let (Some(bits), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected `<bits> <label>`"));
        };
        let a = BitVector::parse_bits(bits).ok_or_else(|| parse_err("vector must be 0/1 characters"))?;
        let label = match label {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err("label must be 0 or 1")),
        };
        match n {
            None => n = Some(a.len()),
            Some(len) if len != a.len() => {
                return Err(parse_err(&format!("expected {len} bits, found {}", a.len())))
            }
            _ => {}
        }
        out.push(LabeledExample::new(a, label));
    }
    Ok((n.unwrap_or(0), out))
}

pub fn write_stream<W: Write>(mut w: W, examples: &[LabeledExample]) -> Result<()> {
    for e in examples {
        writeln!(w, "{} {}", e.a, u8::from(e.label))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_extremes() {
        assert!(gen_hidden(9, 0, 1).unwrap().is_zero());
        assert_eq!(gen_hidden(9, 9, 1).unwrap(), BitVector::ones(9));
        assert!(gen_hidden(3, 4, 1).is_err());
        assert_eq!(gen_hidden(40, 5, 77).unwrap(), gen_hidden(40, 5, 77).unwrap());
        assert_eq!(gen_hidden(40, 5, 77).unwrap().popcount(), 5);
    }

    #[test]
    fn hidden_is_uniform_over_supports() {
        let mut counts = std::collections::HashMap::new();
        let trials = 10_000u64;
        for seed in 0..trials {
            *counts.entry(gen_hidden(6, 2, seed).unwrap()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 15);
        let expected = trials as f64 / 15.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 14 degrees of freedom; 0.999 quantile is 36.12.
        assert!(chi2 < 36.12, "chi2 = {chi2}");
    }

    #[test]
    fn noiseless_labels_are_parities() {
        let h = gen_hidden(70, 4, 2).unwrap();
        let mut src = ExampleSource::uniform(h.clone(), Noise::None, 3).unwrap();
        for _ in 0..500 {
            let e = src.next_example().unwrap();
            assert_eq!(e.label, e.a.dot(&h).unwrap());
        }
        assert!(src.flip_log().iter().all(|f| !f));
    }

    #[test]
    fn flip_rate_matches_eta() {
        let h = gen_hidden(20, 3, 2).unwrap();
        let mut src = ExampleSource::uniform(h.clone(), Noise::Bernoulli(0.25), 9).unwrap();
        let draws = 10_000;
        let mut flips = 0;
        for i in 0..draws {
            let e = src.next_example().unwrap();
            let flipped = e.label != e.a.dot(&h).unwrap();
            assert_eq!(flipped, src.flip_log()[i]);
            flips += usize::from(flipped);
        }
        let rate = flips as f64 / draws as f64;
        assert!((rate - 0.25).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn distinct_parities_disagree_half_the_time() {
        let f = gen_hidden(30, 3, 1).unwrap();
        let g = gen_hidden(30, 3, 2).unwrap();
        assert_ne!(f, g);
        let mut src = ExampleSource::uniform(f.clone(), Noise::None, 5).unwrap();
        let draws = 4000;
        let disagree = (0..draws)
            .filter(|_| {
                let e = src.next_example().unwrap();
                e.label != e.a.dot(&g).unwrap()
            })
            .count();
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((disagree as f64 - draws as f64 / 2.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn seeded_streams_repeat_and_forks_diverge() {
        let h = gen_hidden(16, 2, 0).unwrap();
        let mut a = ExampleSource::uniform(h.clone(), Noise::Bernoulli(0.1), 4).unwrap();
        let mut b = ExampleSource::uniform(h, Noise::Bernoulli(0.1), 4).unwrap();
        assert_eq!(a.take(50).unwrap(), b.take(50).unwrap());
        let mut c1 = a.fork();
        let mut c2 = b.fork();
        assert_eq!(c1.take(20).unwrap(), c2.take(20).unwrap());
        assert_ne!(a.take(20).unwrap(), c1.take(20).unwrap());
    }

    #[test]
    fn replay_and_file_format() {
        let text = "0110 1\n1000 0\n\n1111 0\n";
        let (n, exs) = read_stream(text.as_bytes()).unwrap();
        assert_eq!(n, 4);
        let mut src = ExampleSource::replay(n, exs.clone()).unwrap();
        assert_eq!(src.take(3).unwrap(), exs);
        assert!(matches!(src.next_example(), Err(Error::SourceExhausted)));

        let mut out = Vec::new();
        write_stream(&mut out, &exs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0110 1\n1000 0\n1111 0\n");

        assert!(matches!(read_stream("01 2\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_stream("01 1\n011 0\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
