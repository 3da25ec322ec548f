//! Closed-form stability predictions for representative states.
//!
//! The residual crosstalk at each index of a representative state is treated
//! as Gaussian with variance K/N, so the chance that one index is unstable is
//!
//! ```text
//! P_error = 1/2 (1 - erf(|subset| (1 - 4p + 4p^2) sqrt(N / 2K)))
//! ```
//!
//! With `|subset| = 1, p = 0` this is the classical single-pattern error rate,
//! which reaches 0.0036 at K/N = 0.138. The Gaussian approximation assumes
//! large N and K and a random residual; nothing here enforces that, so small
//! networks can disagree with these numbers.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::prototype::agreement_factor;

/// Classical acceptable per-index error rate.
pub const HERTZ_P_ERROR: f64 = 0.0036;
/// Classical single-pattern capacity K/N at [`HERTZ_P_ERROR`].
pub const HERTZ_CAPACITY: f64 = 0.138;

const RATIO_LO: f64 = 1e-6;
const RATIO_HI: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityQuery {
    pub subset_size: usize,
    pub p: f64,
    pub n: usize,
    pub k: usize,
}

impl StabilityQuery {
    pub fn new(subset_size: usize, p: f64, n: usize, k: usize) -> Result<Self> {
        let q = Self {
            subset_size,
            p,
            n,
            k,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.subset_size == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::Config(
                "subset_size, N and K must be positive".into(),
            ));
        }
        if self.subset_size > self.k {
            return Err(Error::Config(format!(
                "subset_size {} exceeds K = {}",
                self.subset_size, self.k
            )));
        }
        check_unit_interval("p", self.p, 0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityQuery {
    pub target_p_error: f64,
    pub subset_size: usize,
    pub p: f64,
}

impl CapacityQuery {
    pub fn new(target_p_error: f64, subset_size: usize, p: f64) -> Result<Self> {
        let q = Self {
            target_p_error,
            subset_size,
            p,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !self.target_p_error.is_finite() {
            return Err(Error::NonFinite(self.target_p_error));
        }
        if !(self.target_p_error > 0.0 && self.target_p_error < 0.5) {
            return Err(Error::OutOfRange {
                name: "target_p_error",
                value: self.target_p_error,
                range: "(0, 0.5)",
            });
        }
        if self.subset_size == 0 {
            return Err(Error::Config("subset_size must be positive".into()));
        }
        check_unit_interval("p", self.p, 0.5)
    }
}

/// The error function.
pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(libm::erf(x))
}

/// Error rate at a given K/N ratio, for any real ratio.
fn p_error_at(subset_size: usize, factor: f64, n: f64, k: f64) -> f64 {
    let arg = subset_size as f64 * factor * (n / (2.0 * k)).sqrt();
    0.5 * libm::erfc(arg)
}

/// Per-index error probability of a representative state.
pub fn p_error(q: &StabilityQuery) -> Result<f64> {
    q.validate()?;
    let factor = agreement_factor(q.p)?;
    Ok(p_error_at(q.subset_size, factor, q.n as f64, q.k as f64))
}

/// Single learned state error probability `1/2 (1 - erf(sqrt(N / 2K)))`.
pub fn p_error_single(n: usize, k: usize) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::Config("N and K must be positive".into()));
    }
    Ok(0.5 * libm::erfc((n as f64 / (2.0 * k as f64)).sqrt()))
}

/// [`p_error`] as a function of the load ratio K/N alone.
pub fn p_error_ratio(subset_size: usize, p: f64, ratio: f64) -> Result<f64> {
    if subset_size == 0 {
        return Err(Error::Config("subset_size must be positive".into()));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::OutOfRange {
            name: "ratio",
            value: ratio,
            range: "(0, inf)",
        });
    }
    Ok(p_error_at(subset_size, agreement_factor(p)?, 1.0, ratio))
}

/// Largest K/N whose error rate stays at or below the target.
pub fn capacity_ratio(q: &CapacityQuery) -> Result<f64> {
    capacity_ratio_at_scale(q, 1.0)
}

/// [`capacity_ratio`] evaluated with N = `scale` and K = ratio * `scale`.
/// The result does not depend on the scale.
pub fn capacity_ratio_at_scale(q: &CapacityQuery, scale: f64) -> Result<f64> {
    q.validate()?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::OutOfRange {
            name: "scale",
            value: scale,
            range: "(0, inf)",
        });
    }
    let factor = agreement_factor(q.p)?;
    let f = |r: f64| p_error_at(q.subset_size, factor, scale, r * scale);
    let (mut lo, mut hi) = (RATIO_LO, RATIO_HI);
    if f(lo) > q.target_p_error {
        return Err(Error::Unreachable(format!(
            "error rate exceeds {} even at K/N = {lo}",
            q.target_p_error
        )));
    }
    if f(hi) <= q.target_p_error {
        return Err(Error::Unreachable(format!(
            "error rate stays below {} up to K/N = {hi}",
            q.target_p_error
        )));
    }
    // f is increasing in r: keep f(lo) <= target < f(hi).
    for _ in 0..200 {
        if hi - lo <= 1e-12 * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= q.target_p_error {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub ratio: f64,
    pub subset_size: usize,
    pub p: f64,
    pub p_error: f64,
}

/// Evaluates the error rate over every (subset_size, p, ratio) combination.
/// Rows are ordered by subset size, then p, then ratio as given.
pub fn theory_curve(subset_sizes: &[usize], ps: &[f64], ratio_grid: &[f64]) -> Result<Vec<TheoryRow>> {
    if subset_sizes.is_empty() {
        return Err(Error::Empty("subset size grid"));
    }
    if ps.is_empty() {
        return Err(Error::Empty("p grid"));
    }
    if ratio_grid.is_empty() {
        return Err(Error::Empty("ratio grid"));
    }
    let mut rows = Vec::with_capacity(subset_sizes.len() * ps.len() * ratio_grid.len());
    for &s in subset_sizes {
        for &p in ps {
            for &ratio in ratio_grid {
                rows.push(TheoryRow {
                    ratio,
                    subset_size: s,
                    p,
                    p_error: p_error_ratio(s, p, ratio)?,
                });
            }
        }
    }
    Ok(rows)
}

/// `steps` ratios evenly spaced on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// For each (subset_size, p) series in a curve, the first ratio whose error
/// rate exceeds `threshold` (None when the series never does).
pub fn crossing_ratios(rows: &[TheoryRow], threshold: f64) -> Vec<(usize, f64, Option<f64>)> {
    let mut out: Vec<(usize, f64, Option<f64>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.0 == r.subset_size && last.1 == r.p => {
                if last.2.is_none() && r.p_error > threshold {
                    last.2 = Some(r.ratio);
                }
            }
            _ => out.push((
                r.subset_size,
                r.p,
                (r.p_error > threshold).then_some(r.ratio),
            )),
        }
    }
    out
}
