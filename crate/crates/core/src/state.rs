//! Spin vectors and weight matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A network configuration over {-1, +1}^N.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BinaryState(Vec<i8>);

impl BinaryState {
    /// Builds a state, rejecting any entry that is not -1 or +1 and empty input.
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("state"));
        }
        if let Some(&bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self(values))
    }

    /// All spins +1.
    pub fn ones(n: usize) -> Self {
        assert!(n > 0, "state dimension must be positive");
        Self(vec![1; n])
    }

    /// `true` maps to +1.
    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let values: Vec<i8> = bits.into_iter().map(|b| if b { 1 } else { -1 }).collect();
        assert!(!values.is_empty(), "state dimension must be positive");
        Self(values)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    /// Global spin flip.
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&v| -v).collect())
    }

    /// Flips the spin at `i` in place.
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub(crate) fn set(&mut self, i: usize, v: i8) {
        debug_assert!(v == 1 || v == -1);
        self.0[i] = v;
    }

    /// Number of indices where the two states differ.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        check_dim(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        check_dim(n, self.len())
    }
}

impl fmt::Debug for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryState(")?;
        for &v in &self.0 {
            f.write_str(if v > 0 { "+" } else { "-" })?;
        }
        write!(f, ")")
    }
}

/// Space separated `+1`/`-1` tokens.
impl fmt::Display for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if v > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<i8>> for BinaryState {
    type Error = Error;

    fn try_from(values: Vec<i8>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<BinaryState> for Vec<i8> {
    fn from(s: BinaryState) -> Self {
        s.0
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dense symmetric N x N weight matrix with zero diagonal, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
    max_abs: f64,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            n,
            entries: vec![0.0; n * n],
            max_abs: 0.0,
        }
    }

    /// Validates symmetry (bitwise), zero diagonal, and finiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in &rows {
            check_dim(n, row.len())?;
            entries.extend_from_slice(row);
        }
        Self::from_flat(n, entries)
    }

    pub(crate) fn from_flat(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        for (k, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
            let (r, c) = (k / n, k % n);
            if r == c && v != 0.0 {
                return Err(Error::NonZeroDiagonal(r));
            }
            if c > r && v.to_bits() != entries[c * n + r].to_bits() {
                return Err(Error::Asymmetric { row: r, col: c });
            }
        }
        let max_abs = entries.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        Ok(Self {
            n,
            entries,
            max_abs,
        })
    }

    /// Builds from the upper triangle; the lower triangle is mirrored and the diagonal zeroed.
    pub(crate) fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in (r + 1)..n {
                let v = f(r, c);
                m.entries[r * n + c] = v;
                m.entries[c * n + r] = v;
                m.max_abs = m.max_abs.max(v.abs());
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Row `i`; by symmetry this is also column `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n)
    }

    /// Largest absolute entry.
    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim(self.n, other.n)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| {
            (0..self.n).all(|c| self.get(r, c).to_bits() == self.get(c, r).to_bits())
        })
    }
}
