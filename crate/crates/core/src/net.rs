//! Asynchronous binary Hopfield dynamics.
//!
//! Sign conventions: the *alignment* of unit `i` is `s_i * h_i` where
//! `h_i = sum_j W[j][i] s_j`. A state is stable when every alignment is
//! strictly positive. The per-neuron energy is the negated alignment, so a
//! negative energy means the unit is stable.
//!
//! The activation maps a zero field to +1, so a unit at zero field holding -1
//! flips while one holding +1 stays put. Such states can be fixed points of the
//! dynamics without passing [`is_stable`]; [`fixed_point_kind`] tells the two
//! apart.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::state::{check_dim, BinaryState, WeightMatrix};

/// Sweep budget used when none is given.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Outcome of [`relax`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaxationResult {
    pub final_state: BinaryState,
    pub sweeps_used: usize,
    pub converged: bool,
    pub flips_total: usize,
}

/// How a state sits with respect to the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    /// Every alignment strictly positive.
    Stable,
    /// Fixed point of the dynamics only because zero-field units hold +1.
    ZeroFieldEdge,
    /// Some unit would flip.
    NotFixed,
}

fn check_pair(w: &WeightMatrix, s: &BinaryState) -> Result<()> {
    check_dim(w.dim(), s.len())
}

fn check_index(w: &WeightMatrix, i: usize) -> Result<()> {
    if i >= w.dim() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: w.dim(),
        });
    }
    Ok(())
}

#[inline]
fn field_unchecked(w: &WeightMatrix, s: &BinaryState, i: usize) -> f64 {
    w.row(i)
        .iter()
        .zip(s.values())
        .map(|(&wij, &sj)| wij * f64::from(sj))
        .sum()
}

/// `sum_j W[j][i] * s_j`.
pub fn local_field(w: &WeightMatrix, s: &BinaryState, i: usize) -> Result<f64> {
    check_pair(w, s)?;
    check_index(w, i)?;
    Ok(field_unchecked(w, s, i))
}

/// All N local fields.
pub fn local_fields(w: &WeightMatrix, s: &BinaryState) -> Result<Vec<f64>> {
    check_pair(w, s)?;
    Ok((0..w.dim()).map(|i| field_unchecked(w, s, i)).collect())
}

#[inline]
fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Hard limiter: +1 for `x >= 0`, -1 otherwise.
pub fn activation(x: f64) -> Result<i8> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(sign(x))
}

/// Applies the update rule at a single index. Returns the new state and whether it changed.
pub fn update_neuron(w: &WeightMatrix, s: &BinaryState, i: usize) -> Result<(BinaryState, bool)> {
    let h = local_field(w, s, i)?;
    let v = activation(h)?;
    let mut next = s.clone();
    let flipped = v != s.get(i);
    next.set(i, v);
    Ok((next, flipped))
}

/// `s_i * h_i` for every index.
pub fn alignments(w: &WeightMatrix, s: &BinaryState) -> Result<Vec<f64>> {
    check_pair(w, s)?;
    Ok((0..w.dim())
        .map(|i| f64::from(s.get(i)) * field_unchecked(w, s, i))
        .collect())
}

/// Energy of unit `i`: `-s_i * h_i`. Negative means stable.
pub fn neuron_energy(w: &WeightMatrix, s: &BinaryState, i: usize) -> Result<f64> {
    let h = local_field(w, s, i)?;
    Ok(-f64::from(s.get(i)) * h)
}

/// Energies of all units, in index order.
pub fn neuron_energies(w: &WeightMatrix, s: &BinaryState) -> Result<Vec<f64>> {
    Ok(alignments(w, s)?.into_iter().map(|a| -a).collect())
}

/// True iff every alignment is strictly positive.
pub fn is_stable(w: &WeightMatrix, s: &BinaryState) -> Result<bool> {
    check_pair(w, s)?;
    Ok((0..w.dim()).all(|i| f64::from(s.get(i)) * field_unchecked(w, s, i) > 0.0))
}

/// Classifies `s` as strictly stable, a zero-field fixed point, or not fixed.
pub fn fixed_point_kind(w: &WeightMatrix, s: &BinaryState) -> Result<FixedPointKind> {
    check_pair(w, s)?;
    let mut edge = false;
    for i in 0..w.dim() {
        let h = field_unchecked(w, s, i);
        if sign(h) != s.get(i) {
            return Ok(FixedPointKind::NotFixed);
        }
        if h == 0.0 {
            edge = true;
        }
    }
    Ok(if edge {
        FixedPointKind::ZeroFieldEdge
    } else {
        FixedPointKind::Stable
    })
}

/// `-1/2 sum_{i,j} W[i][j] s_i s_j`.
pub fn total_energy(w: &WeightMatrix, s: &BinaryState) -> Result<f64> {
    check_pair(w, s)?;
    let sum: f64 = (0..w.dim())
        .map(|i| f64::from(s.get(i)) * field_unchecked(w, s, i))
        .sum();
    Ok(-0.5 * sum)
}

/// Relaxes `s0` with sweep orders drawn from the seeded sweep-order stream.
pub fn relax(
    w: &WeightMatrix,
    s0: &BinaryState,
    seed: u64,
    max_sweeps: usize,
) -> Result<RelaxationResult> {
    let mut rng = rng::stream(seed, Purpose::SweepOrder, 0);
    relax_with(w, s0, &mut rng, max_sweeps)
}

/// Asynchronous relaxation driven by a caller-supplied generator.
///
/// Each sweep visits every index once in a fresh uniformly random order.
/// Relaxation stops after the first sweep without a flip, or after
/// `max_sweeps` sweeps.
///
/// Local fields are tracked incrementally: flipping unit `j` adds
/// `2 * s_j * W[j][.]` to every field. Whenever a tracked field is close
/// enough to zero for rounding drift to matter, it is recomputed by the same
/// direct sum that [`local_field`] uses, so every decision agrees with
/// [`update_neuron`].
pub fn relax_with<R: Rng + ?Sized>(
    w: &WeightMatrix,
    s0: &BinaryState,
    rng: &mut R,
    max_sweeps: usize,
) -> Result<RelaxationResult> {
    check_pair(w, s0)?;
    if max_sweeps == 0 {
        return Err(Error::Config("max_sweeps must be at least 1".into()));
    }
    let n = w.dim();
    let mut s = s0.clone();
    let mut fields: Vec<f64> = (0..n).map(|i| field_unchecked(w, &s, i)).collect();
    let guard = 1e-9 * (1.0 + w.max_abs() * n as f64);
    let mut order: Vec<usize> = (0..n).collect();
    let mut flips_total = 0;

    for sweep in 1..=max_sweeps {
        order.shuffle(rng);
        let mut flips = 0;
        for &i in &order {
            let mut h = fields[i];
            if h.abs() < guard {
                h = field_unchecked(w, &s, i);
                fields[i] = h;
            }
            let v = sign(h);
            if v != s.get(i) {
                let delta = 2.0 * f64::from(v);
                for (f, &wij) in fields.iter_mut().zip(w.row(i)) {
                    *f += delta * wij;
                }
                s.set(i, v);
                flips += 1;
            }
        }
        flips_total += flips;
        if flips == 0 {
            return Ok(RelaxationResult {
                final_state: s,
                sweeps_used: sweep,
                converged: true,
                flips_total,
            });
        }
    }
    Ok(RelaxationResult {
        final_state: s,
        sweeps_used: max_sweeps,
        converged: false,
        flips_total,
    })
}
