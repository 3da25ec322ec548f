//! Brute-force ground truth used to check the fast paths.
//!
//! Nothing in here shares code with the routines it checks: stability is
//! decided by exhaustive enumeration, Gaussian tails by adaptive quadrature of
//! the normal density, and Bernoulli expectations by direct averaging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::TrainingSet;
use crate::net::{fixed_point_kind, FixedPointKind};
use crate::prototype::RepresentativeVector;
use crate::state::{check_dim, BinaryState, WeightMatrix};

/// Largest dimension [`enumerate_stable`] accepts.
pub const MAX_ENUM_DIM: usize = 20;

/// Default absolute tolerance of [`gaussian_tail`].
pub const QUADRATURE_TOL: f64 = 1e-14;

/// Every fixed point of a small network, split by kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableSet {
    pub n: usize,
    /// States with every alignment strictly positive, in lexicographic order.
    pub states: Vec<BinaryState>,
    /// Fixed points of the dynamics that fail strict stability because some
    /// unit sits at zero field holding +1.
    pub zero_field_fixed_points: Vec<BinaryState>,
}

/// Where a state falls relative to a [`StableSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Stable,
    ZeroFieldFixedPoint,
    Absent,
}

impl StableSet {
    pub fn membership(&self, s: &BinaryState) -> Membership {
        if self.states.binary_search(s).is_ok() {
            Membership::Stable
        } else if self.zero_field_fixed_points.binary_search(s).is_ok() {
            Membership::ZeroFieldFixedPoint
        } else {
            Membership::Absent
        }
    }

    pub fn contains(&self, s: &BinaryState) -> bool {
        self.membership(s) == Membership::Stable
    }
}

fn state_from_mask(mask: u32, n: usize) -> BinaryState {
    // Bit n-1-i drives index i so that mask order is lexicographic state order.
    BinaryState::from_bools((0..n).map(|i| mask >> (n - 1 - i) & 1 == 1))
}

/// Checks all 2^N states.
pub fn enumerate_stable(w: &WeightMatrix) -> Result<StableSet> {
    let n = w.dim();
    if n > MAX_ENUM_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUM_DIM,
        });
    }
    let found: Vec<(BinaryState, FixedPointKind)> = (0..1u32 << n)
        .into_par_iter()
        .filter_map(|mask| {
            let s = state_from_mask(mask, n);
            match fixed_point_kind(w, &s).expect("dimensions match") {
                FixedPointKind::NotFixed => None,
                kind => Some((s, kind)),
            }
        })
        .collect();
    let (stable, edge): (Vec<_>, Vec<_>) = found
        .into_iter()
        .partition(|(_, k)| *k == FixedPointKind::Stable);
    Ok(StableSet {
        n,
        states: stable.into_iter().map(|(s, _)| s).collect(),
        zero_field_fixed_points: edge.into_iter().map(|(s, _)| s).collect(),
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for k in 0..7 {
        let x = h * GK_NODES[k];
        let pair = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[k] * pair;
        if k % 2 == 1 {
            gauss += GAUSS_WEIGHTS[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// Integral of the standard normal density over `[0, z]`, `z >= 0`.
fn normal_mass(z: f64, tol: f64) -> f64 {
    const CUTOFF: f64 = 40.0;
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = z.min(CUTOFF);
    if upper == 0.0 {
        return 0.0;
    }
    // Unit-width panels keep each adaptive piece well resolved.
    let panels = upper.ceil() as usize;
    let step = upper / panels as f64;
    (0..panels)
        .map(|k| {
            let a = k as f64 * step;
            adaptive(&density, a, a + step, tol / panels as f64, 30)
        })
        .sum()
}

/// `P(X > threshold)` for `X ~ N(0, sigma2)`, by quadrature.
///
/// Equal by symmetry to the lower tail below `-threshold`, which is the form
/// the stability argument uses.
pub fn gaussian_tail(threshold: f64, sigma2: f64) -> Result<f64> {
    gaussian_tail_with_tolerance(threshold, sigma2, QUADRATURE_TOL)
}

pub fn gaussian_tail_with_tolerance(threshold: f64, sigma2: f64, tol: f64) -> Result<f64> {
    if !threshold.is_finite() {
        return Err(Error::NonFinite(threshold));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::OutOfRange {
            name: "sigma2",
            value: sigma2,
            range: "(0, inf)",
        });
    }
    let z = threshold / sigma2.sqrt();
    let mass = normal_mass(z.abs(), tol);
    Ok(if z >= 0.0 { 0.5 - mass } else { 0.5 + mass })
}

/// `erf(x) = 1 - 2 P(Z > x sqrt 2)` with the tail from [`gaussian_tail`].
pub fn erf_by_quadrature(x: f64) -> Result<f64> {
    Ok(1.0 - 2.0 * gaussian_tail(x * std::f64::consts::SQRT_2, 1.0)?)
}

/// Empirical mean over the subset of `(1 - 2 delta_j)(1 - 2 delta_i)`.
pub fn mc_pairwise_factor(
    subset: &TrainingSet,
    rv: &RepresentativeVector,
    j: usize,
    i: usize,
) -> Result<f64> {
    let n = rv.psi.len();
    check_dim(n, subset.dim())?;
    for idx in [j, i] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if j == i {
        return Err(Error::Config("pairwise factor needs j != i".into()));
    }
    let total: i64 = subset
        .states()
        .iter()
        .map(|s| {
            let dj = i64::from(s.get(j) != rv.psi.get(j));
            let di = i64::from(s.get(i) != rv.psi.get(i));
            (1 - 2 * dj) * (1 - 2 * di)
        })
        .sum();
    Ok(total as f64 / subset.len() as f64)
}

/// Three standard errors of the mean of `k` draws of a +-1 variable with
/// expectation `factor`.
pub fn three_sigma(factor: f64, k: usize) -> f64 {
    3.0 * ((1.0 - factor * factor).max(0.0) / k as f64).sqrt()
}
