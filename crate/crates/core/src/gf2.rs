//! Word-packed GF(2) vectors and affine subspaces kept in reduced row echelon
//! form.
//!
//! Bit `i` of a [`BitVector`] lives in word `i / 64` at bit position `i % 64`
//! (little-endian within each word). Bits at positions `>= len` are always
//! zero, so word-level popcount and comparisons need no masking.

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.mask_tail();
        v
    }

    /// Vector with ones exactly at `indices`. Panics if an index is `>= len`.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters; character `i` is coordinate `i`.
    pub fn parse_bits(s: &str) -> Option<Self> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    /// Uniformly random vector. Consumes exactly `ceil(len / 64)` calls to
    /// `next_u64`, one per storage word in order.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self {
            len,
            words: (0..words_for(len)).map(|_| rng.next_u64()).collect(),
        };
        v.mask_tail();
        v
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD_BITS + w.trailing_zeros() as usize)
    }

    /// Indices of the set bits, ascending.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(())
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok(self.dot_unchecked(other))
    }

    #[inline]
    pub(crate) fn dot_unchecked(&self, other: &Self) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &Self) -> Result<()> {
        self.check_len(other)?;
        self.xor_assign_unchecked(other);
        Ok(())
    }

    #[inline]
    pub(crate) fn xor_assign_unchecked(&mut self, other: &Self) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Projects onto the coordinates listed in `support`: bit `j` of the
    /// result is bit `support[j]` of `self`.
    pub fn restrict(&self, support: &[usize]) -> Self {
        let mut out = Self::zeros(support.len());
        for (j, &i) in support.iter().enumerate() {
            if self.get(i) {
                out.words[j / WORD_BITS] |= 1u64 << (j % WORD_BITS);
            }
        }
        out
    }

    /// Inverse of [`restrict`](Self::restrict): places local bit `j` at
    /// global coordinate `support[j]` of a length-`n` vector.
    pub fn embed(&self, support: &[usize], n: usize) -> Self {
        debug_assert_eq!(self.len, support.len());
        let mut out = Self::zeros(n);
        for j in self.ones_iter() {
            out.set(support[j], true);
        }
        out
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self.to_bit_string())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bit_string())
    }
}

/// One equation `<bits, f> = rhs` of an [`AffineSpace`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    bits: BitVector,
    rhs: bool,
    pivot: usize,
}

impl Row {
    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn rhs(&self) -> bool {
        self.rhs
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }
}

/// Result of reducing a constraint against the rows of a space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub residual: BitVector,
    pub rhs: bool,
    /// Number of row additions performed.
    pub row_ops: usize,
}

/// The solution set of a linear system over GF(2) in `dim` unknowns.
///
/// Rows are kept in fully reduced row echelon form: pivots strictly increase
/// and every pivot column is zero in all other rows. Two spaces with the same
/// solution set therefore compare equal structurally, whatever order the
/// constraints were added in. An inconsistent system is represented by the
/// `empty` flag with no rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineSpace {
    dim: usize,
    rows: Vec<Row>,
    empty: bool,
}

impl AffineSpace {
    /// The whole space GF(2)^dim.
    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            empty: false,
        }
    }

    /// Builds a space from raw equations by successive intersection.
    pub fn from_equations<'a, I>(dim: usize, eqs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a BitVector, bool)>,
    {
        let mut space = Self::full(dim);
        for (v, y) in eqs {
            space.constrain_in_place(v, y)?;
        }
        Ok(space)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// `log2 |space|`, or `None` when the space is empty.
    pub fn log2_size(&self) -> Option<usize> {
        (!self.empty).then(|| self.dim - self.rows.len())
    }

    fn check_len(&self, v: &BitVector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Eliminates every pivot column from `v`, applying the same row
    /// additions to the right-hand side `y`.
    pub fn reduce(&self, v: &BitVector, y: bool) -> Result<Reduction> {
        self.check_len(v)?;
        Ok(self.reduce_unchecked(v.clone(), y))
    }

    fn reduce_unchecked(&self, mut v: BitVector, mut y: bool) -> Reduction {
        let mut row_ops = 0;
        for row in &self.rows {
            if v.get(row.pivot) {
                v.xor_assign_unchecked(&row.bits);
                y ^= row.rhs;
                row_ops += 1;
            }
        }
        Reduction {
            residual: v,
            rhs: y,
            row_ops,
        }
    }

    /// Log-sizes of `{f : <v,f> = 0}` and `{f : <v,f> = 1}` within the space.
    pub fn split_sizes(&self, v: &BitVector) -> Result<(Option<usize>, Option<usize>)> {
        self.check_len(v)?;
        let Some(current) = self.log2_size() else {
            return Ok((None, None));
        };
        let red = self.reduce_unchecked(v.clone(), false);
        if red.residual.is_zero() {
            // <v,f> is constant on the space and equals red.rhs.
            Ok(if red.rhs {
                (None, Some(current))
            } else {
                (Some(current), None)
            })
        } else {
            Ok((Some(current - 1), Some(current - 1)))
        }
    }

    /// Returns the intersection with the hyperplane `<v,f> = y`.
    pub fn constrain(&self, v: &BitVector, y: bool) -> Result<Self> {
        let mut out = self.clone();
        out.constrain_in_place(v, y)?;
        Ok(out)
    }

    /// In-place [`constrain`](Self::constrain). Returns the number of row
    /// additions performed, at most `2 * rank`.
    pub fn constrain_in_place(&mut self, v: &BitVector, y: bool) -> Result<usize> {
        self.check_len(v)?;
        if self.empty {
            return Ok(0);
        }
        let red = self.reduce_unchecked(v.clone(), y);
        let mut ops = red.row_ops;
        let Some(pivot) = red.residual.first_one() else {
            if red.rhs {
                self.rows.clear();
                self.empty = true;
            }
            return Ok(ops);
        };
        for row in &mut self.rows {
            if row.bits.get(pivot) {
                row.bits.xor_assign_unchecked(&red.residual);
                row.rhs ^= red.rhs;
                ops += 1;
            }
        }
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(
            at,
            Row {
                bits: red.residual,
                rhs: red.rhs,
                pivot,
            },
        );
        Ok(ops)
    }

    /// The point obtained by setting every free variable to zero.
    pub fn particular_point(&self) -> Option<BitVector> {
        if self.empty {
            return None;
        }
        let mut f = BitVector::zeros(self.dim);
        for row in &self.rows {
            f.set(row.pivot, row.rhs);
        }
        Some(f)
    }

    /// The unique point of a full-rank space.
    pub fn sole_point(&self) -> Result<BitVector> {
        if self.empty {
            return Err(Error::EmptySpace);
        }
        if self.rows.len() < self.dim {
            return Err(Error::NotSingleton {
                rank: self.rows.len(),
                dim: self.dim,
            });
        }
        // Full rank in RREF is the identity system.
        Ok(self.particular_point().expect("nonempty"))
    }

    pub fn contains(&self, f: &BitVector) -> bool {
        !self.empty
            && f.len() == self.dim
            && self.rows.iter().all(|r| r.bits.dot_unchecked(f) == r.rhs)
    }

    /// All points of the space, by enumerating the free variables. Intended
    /// for small spaces; panics when the space holds more than 2^24 points.
    pub fn points(&self) -> Vec<BitVector> {
        let Some(base) = self.particular_point() else {
            return Vec::new();
        };
        let mut is_pivot = vec![false; self.dim];
        for r in &self.rows {
            is_pivot[r.pivot] = true;
        }
        let free: Vec<usize> = (0..self.dim).filter(|&c| !is_pivot[c]).collect();
        assert!(free.len() <= 24, "refusing to enumerate 2^{} points", free.len());
        // Homogeneous solution for free variable c: e_c plus the pivot bits of
        // the rows that contain c.
        let basis: Vec<BitVector> = free
            .iter()
            .map(|&c| {
                let mut h = BitVector::zeros(self.dim);
                h.set(c, true);
                for r in &self.rows {
                    if r.bits.get(c) {
                        h.set(r.pivot, true);
                    }
                }
                h
            })
            .collect();
        (0u64..1 << free.len())
            .map(|mask| {
                let mut p = base.clone();
                for (j, h) in basis.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        p.xor_assign_unchecked(h);
                    }
                }
                p
            })
            .collect()
    }
}
