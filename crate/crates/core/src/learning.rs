//! Hebbian learning.

use crate::error::{Error, Result};
use crate::state::{check_dim, BinaryState, WeightMatrix};

/// A non-empty set of learned states sharing one dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingSet {
    states: Vec<BinaryState>,
}

impl TrainingSet {
    pub fn new(states: Vec<BinaryState>) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("training set"))?;
        let n = first.len();
        for s in &states {
            check_dim(n, s.len())?;
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[BinaryState] {
        &self.states
    }

    /// Number of states, K.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Common dimension, N.
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn into_states(self) -> Vec<BinaryState> {
        self.states
    }
}

/// `W[j][i] = (1/K) sum_k xi^k_j xi^k_i`, zero diagonal.
///
/// The sums of +-1 products are integers and are accumulated exactly before
/// the single division by K.
pub fn hebbian(ts: &TrainingSet) -> Result<WeightMatrix> {
    let n = ts.dim();
    let k = ts.len() as f64;
    let mut sums = vec![0i64; n * n];
    for s in ts.states() {
        let v = s.values();
        for r in 0..n {
            let vr = i64::from(v[r]);
            let row = &mut sums[r * n..(r + 1) * n];
            for c in (r + 1)..n {
                row[c] += vr * i64::from(v[c]);
            }
        }
    }
    Ok(WeightMatrix::from_upper(n, |r, c| sums[r * n + c] as f64 / k))
}

/// Adds one state to a Hebbian mean over `k_so_far` states.
///
/// Returns the updated matrix and the new count. `w` must be the Hebbian
/// matrix of `k_so_far` states (any matrix when `k_so_far == 0`).
pub fn hebbian_accumulate(
    w: &WeightMatrix,
    k_so_far: usize,
    new_state: &BinaryState,
) -> Result<(WeightMatrix, usize)> {
    check_dim(w.dim(), new_state.len())?;
    let n = w.dim();
    let k_new = k_so_far + 1;
    let v = new_state.values();
    let next = WeightMatrix::from_upper(n, |r, c| {
        let x = f64::from(v[r] * v[c]);
        if k_so_far == 0 {
            x
        } else {
            let old = w.get(r, c);
            old + (x - old) / k_new as f64
        }
    });
    Ok((next, k_new))
}
