//! Representative vectors of a subset of learned states and the weight
//! contribution they receive under Hebbian learning.
//!
//! Every member of a subset can be written as `xi^k = psi * (1 - 2 delta^k)`
//! where `psi` is the per-index majority and `delta^k` marks disagreements.
//! Averaging the disagreements per index gives Bernoulli parameters `p_i`,
//! which are at most 0.5 because `psi` is the majority. Replacing each
//! `delta` with its expectation turns the subset's share of the Hebbian sum
//! into `(|subset|/K) psi_j psi_i (1 - 2p_j)(1 - 2p_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::learning::TrainingSet;
use crate::state::{check_dim, BinaryState, WeightMatrix};

/// Per-index majority of a subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentativeVector {
    pub psi: BinaryState,
    /// Indices where the column sum was exactly zero.
    pub tie_indices: Vec<usize>,
}

/// Disagreement indicators of each subset member against a representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaMatrix {
    n: usize,
    deltas: Vec<u8>,
    source_size: usize,
}

impl DeltaMatrix {
    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Disagreement row of member `k`.
    pub fn row(&self, k: usize) -> &[u8] {
        &self.deltas[k * self.n..(k + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.deltas.chunks_exact(self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliProfile {
    pub p_per_index: Vec<f64>,
    /// Grand mean over all K*N disagreement indicators.
    pub pooled_p: f64,
}

/// Majority vote per index; exact ties resolve to +1.
pub fn representative(subset: &TrainingSet) -> RepresentativeVector {
    representative_with_tie(subset, 1)
}

/// Majority vote per index with ties resolved to `tie_value`.
pub fn representative_with_tie(subset: &TrainingSet, tie_value: i8) -> RepresentativeVector {
    assert!(tie_value == 1 || tie_value == -1);
    let n = subset.dim();
    let mut sums = vec![0i64; n];
    for s in subset.states() {
        for (acc, &v) in sums.iter_mut().zip(s.values()) {
            *acc += i64::from(v);
        }
    }
    let mut tie_indices = Vec::new();
    let values = sums
        .iter()
        .enumerate()
        .map(|(i, &sum)| match sum.signum() {
            1 => 1,
            -1 => -1,
            _ => {
                tie_indices.push(i);
                tie_value
            }
        })
        .collect();
    RepresentativeVector {
        psi: BinaryState::new(values).expect("majority values are spins"),
        tie_indices,
    }
}

/// `delta[k][i] = 1` where member `k` disagrees with `psi` at `i`.
pub fn decompose(subset: &TrainingSet, rv: &RepresentativeVector) -> Result<DeltaMatrix> {
    let n = rv.psi.len();
    check_dim(n, subset.dim())?;
    let psi = rv.psi.values();
    let deltas = subset
        .states()
        .iter()
        .flat_map(|s| {
            s.values()
                .iter()
                .zip(psi)
                .map(|(a, b)| u8::from(a != b))
        })
        .collect();
    Ok(DeltaMatrix {
        n,
        deltas,
        source_size: subset.len(),
    })
}

/// Inverse of [`decompose`]: `psi_i (1 - 2 delta_i)` for one row.
pub fn reconstruct(rv: &RepresentativeVector, delta_row: &[u8]) -> Result<BinaryState> {
    check_dim(rv.psi.len(), delta_row.len())?;
    let values = rv
        .psi
        .values()
        .iter()
        .zip(delta_row)
        .map(|(&p, &d)| p * (1 - 2 * d as i8))
        .collect();
    BinaryState::new(values)
}

/// Per-index and pooled disagreement rates. Rates above 0.5 mean the deltas
/// were not taken against a majority vector and are rejected.
pub fn bernoulli_profile(dm: &DeltaMatrix) -> Result<BernoulliProfile> {
    let k = dm.source_size as f64;
    let mut counts = vec![0usize; dm.n];
    for row in dm.rows() {
        for (c, &d) in counts.iter_mut().zip(row) {
            *c += usize::from(d);
        }
    }
    let total: usize = counts.iter().sum();
    let p_per_index: Vec<f64> = counts.iter().map(|&c| c as f64 / k).collect();
    if let Some(&bad) = p_per_index.iter().find(|&&p| p > 0.5) {
        return Err(Error::OutOfRange {
            name: "bernoulli parameter",
            value: bad,
            range: "[0, 0.5]",
        });
    }
    Ok(BernoulliProfile {
        p_per_index,
        pooled_p: total as f64 / (k * dm.n as f64),
    })
}

/// `1 - 4p + 4p^2`, the uniform-noise agreement factor.
pub fn agreement_factor(p: f64) -> Result<f64> {
    check_unit_interval("p", p, 0.5)?;
    Ok(1.0 - 4.0 * p + 4.0 * p * p)
}

/// `1 - 2p_j - 2p_i + 4 p_j p_i`.
pub fn pairwise_factor(p_j: f64, p_i: f64) -> Result<f64> {
    check_unit_interval("p_j", p_j, 0.5)?;
    check_unit_interval("p_i", p_i, 0.5)?;
    Ok(1.0 - 2.0 * p_j - 2.0 * p_i + 4.0 * p_j * p_i)
}

/// Predicted representative term of the Hebbian matrix:
/// `(subset_size/total_k) psi_j psi_i factor(j, i)` with zero diagonal.
///
/// With `pooled` the factor is [`agreement_factor`] of the pooled rate,
/// otherwise [`pairwise_factor`] of the per-index rates.
pub fn predicted_representative_term(
    rv: &RepresentativeVector,
    profile: &BernoulliProfile,
    subset_size: usize,
    total_k: usize,
    pooled: bool,
) -> Result<WeightMatrix> {
    let n = rv.psi.len();
    check_dim(n, profile.p_per_index.len())?;
    if subset_size == 0 || total_k == 0 {
        return Err(Error::Config("subset size and K must be positive".into()));
    }
    if subset_size > total_k {
        return Err(Error::Config(format!(
            "subset size {subset_size} exceeds K = {total_k}"
        )));
    }
    let scale = subset_size as f64 / total_k as f64;
    let pooled_factor = agreement_factor(profile.pooled_p)?;
    for &p in &profile.p_per_index {
        check_unit_interval("p", p, 0.5)?;
    }
    let psi = rv.psi.values();
    let p = &profile.p_per_index;
    Ok(WeightMatrix::from_upper(n, |r, c| {
        let factor = if pooled {
            pooled_factor
        } else {
            1.0 - 2.0 * p[r] - 2.0 * p[c] + 4.0 * p[r] * p[c]
        };
        scale * f64::from(psi[r] * psi[c]) * factor
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::hebbian;
    use crate::theory::{p_error, StabilityQuery};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st(v: &[i8]) -> BinaryState {
        BinaryState::new(v.to_vec()).unwrap()
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> BinaryState {
        BinaryState::from_bools((0..n).map(|_| rng.random::<bool>()))
    }

    fn noisy(base: &BinaryState, p: f64, rng: &mut impl Rng) -> BinaryState {
        let mut s = base.clone();
        for i in 0..s.len() {
            if rng.random_bool(p) {
                s.flip(i);
            }
        }
        s
    }

    #[test]
    fn unanimous_subset() {
        let xi = st(&[1, -1, -1, 1]);
        let ts = TrainingSet::new(vec![xi.clone(); 4]).unwrap();
        let rv = representative(&ts);
        assert_eq!(rv.psi, xi);
        assert!(rv.tie_indices.is_empty());
        let dm = decompose(&ts, &rv).unwrap();
        assert!(dm.rows().all(|r| r.iter().all(|&d| d == 0)));
    }

    #[test]
    fn antipodal_pair_ties_everywhere() {
        let xi = st(&[1, -1, -1, 1, -1]);
        let ts = TrainingSet::new(vec![xi.clone(), xi.negated()]).unwrap();
        let rv = representative(&ts);
        assert_eq!(rv.psi, BinaryState::ones(5));
        assert_eq!(rv.tie_indices, vec![0, 1, 2, 3, 4]);
        let prof = bernoulli_profile(&decompose(&ts, &rv).unwrap()).unwrap();
        assert!(prof.p_per_index.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn majority_of_noisy_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let base = random_state(50, &mut rng);
        let copies: Vec<_> = (0..5).map(|_| noisy(&base, 0.1, &mut rng)).collect();
        let rv = representative(&TrainingSet::new(copies.clone()).unwrap());
        for i in 0..50 {
            let flipped = copies.iter().filter(|c| c.get(i) != base.get(i)).count();
            if flipped <= 2 {
                assert_eq!(rv.psi.get(i), base.get(i), "index {i}");
            } else {
                assert_eq!(rv.psi.get(i), -base.get(i), "index {i}");
            }
        }
        assert!(rv.tie_indices.is_empty());
    }

    #[test]
    fn negated_member_is_all_ones_row() {
        let psi = st(&[1, 1, -1, 1, -1]);
        let rv = RepresentativeVector {
            psi: psi.clone(),
            tie_indices: vec![],
        };
        let ts = TrainingSet::new(vec![psi.negated()]).unwrap();
        let dm = decompose(&ts, &rv).unwrap();
        assert!(dm.row(0).iter().all(|&d| d == 1));
        // against a non-majority vector the rates exceed 0.5
        assert!(bernoulli_profile(&dm).is_err());
    }

    #[test]
    fn decompose_dimension_mismatch() {
        let rv = representative(&TrainingSet::new(vec![st(&[1, 1, 1])]).unwrap());
        let ts = TrainingSet::new(vec![st(&[1, 1])]).unwrap();
        assert!(matches!(
            decompose(&ts, &rv),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn profile_counts() {
        let a = st(&[1, 1, 1, 1, 1]);
        let mut b = a.clone();
        b.flip(3);
        let ts = TrainingSet::new(vec![a.clone(), b]).unwrap();
        let rv = RepresentativeVector {
            psi: a,
            tie_indices: vec![],
        };
        let prof = bernoulli_profile(&decompose(&ts, &rv).unwrap()).unwrap();
        assert_eq!(prof.p_per_index, vec![0.0, 0.0, 0.0, 0.5, 0.0]);
        assert_eq!(prof.pooled_p, 0.1);

        let zero = bernoulli_profile(
            &decompose(
                &TrainingSet::new(vec![st(&[1, -1]); 3]).unwrap(),
                &RepresentativeVector {
                    psi: st(&[1, -1]),
                    tie_indices: vec![],
                },
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(zero.pooled_p, 0.0);
    }

    #[test]
    fn pooled_rate_near_generating_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 64;
        let k = 100;
        let base = random_state(n, &mut rng);
        let ts = TrainingSet::new((0..k).map(|_| noisy(&base, 0.2, &mut rng)).collect()).unwrap();
        let rv = RepresentativeVector {
            psi: base,
            tie_indices: vec![],
        };
        let prof = bernoulli_profile(&decompose(&ts, &rv).unwrap()).unwrap();
        let se = (0.2f64 * 0.8 / (n * k) as f64).sqrt();
        assert!((prof.pooled_p - 0.2).abs() <= 3.0 * se, "{}", prof.pooled_p);
    }

    #[test]
    fn factor_values() {
        assert_eq!(agreement_factor(0.0).unwrap(), 1.0);
        assert_eq!(agreement_factor(0.5).unwrap(), 0.0);
        assert_eq!(agreement_factor(0.25).unwrap(), 0.25);
        assert!(agreement_factor(0.51).is_err());
        assert!(agreement_factor(-0.01).is_err());
        assert!(agreement_factor(f64::NAN).is_err());

        assert_eq!(pairwise_factor(0.0, 0.0).unwrap(), 1.0);
        for q in [0.0, 0.1, 0.37, 0.5] {
            assert_eq!(pairwise_factor(0.5, q).unwrap(), 0.0);
        }
        assert!((pairwise_factor(0.1, 0.3).unwrap() - 0.32).abs() < 1e-15);
        assert!(pairwise_factor(0.6, 0.1).is_err());
    }

    #[test]
    fn agreement_factor_monotone() {
        let mut prev = f64::INFINITY;
        for k in 0..=500 {
            let f = agreement_factor(k as f64 / 1000.0).unwrap();
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn noiseless_subset_reduces_to_single_state_hebbian() {
        let xi = st(&[1, -1, 1, 1, -1, -1]);
        let ts = TrainingSet::new(vec![xi.clone(); 5]).unwrap();
        let rv = representative(&ts);
        let prof = bernoulli_profile(&decompose(&ts, &rv).unwrap()).unwrap();
        let term = predicted_representative_term(&rv, &prof, 5, 5, false).unwrap();
        assert_eq!(term, hebbian(&TrainingSet::new(vec![xi]).unwrap()).unwrap());
    }

    #[test]
    fn pooled_equals_per_index_on_uniform_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(12, &mut rng);
        let rv = RepresentativeVector {
            psi,
            tie_indices: vec![],
        };
        let prof = BernoulliProfile {
            p_per_index: vec![0.15; 12],
            pooled_p: 0.15,
        };
        let a = predicted_representative_term(&rv, &prof, 3, 10, true).unwrap();
        let b = predicted_representative_term(&rv, &prof, 3, 10, false).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn predicted_term_size_errors() {
        let rv = representative(&TrainingSet::new(vec![st(&[1, 1])]).unwrap());
        let prof = BernoulliProfile {
            p_per_index: vec![0.0; 2],
            pooled_p: 0.0,
        };
        assert!(predicted_representative_term(&rv, &prof, 3, 2, true).is_err());
        assert!(predicted_representative_term(&rv, &prof, 0, 2, true).is_err());
        let short = BernoulliProfile {
            p_per_index: vec![0.0; 3],
            pooled_p: 0.0,
        };
        assert!(predicted_representative_term(&rv, &short, 1, 2, true).is_err());
    }

    #[test]
    fn predicted_term_tracks_empirical_hebbian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let (n, k) = (100, 200);
        let base = random_state(n, &mut rng);
        let ts = TrainingSet::new((0..k).map(|_| noisy(&base, 0.15, &mut rng)).collect()).unwrap();
        let empirical = hebbian(&ts).unwrap();
        let rv = representative(&ts);
        let prof = bernoulli_profile(&decompose(&ts, &rv).unwrap()).unwrap();
        let predicted = predicted_representative_term(&rv, &prof, k, k, false).unwrap();
        let tol = 4.0 / (k as f64).sqrt();
        assert!(predicted.max_abs_diff(&empirical).unwrap() <= tol);
    }

    #[test]
    fn tie_choice_does_not_change_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let base = random_state(40, &mut rng);
        let ts = TrainingSet::new((0..10).map(|_| noisy(&base, 0.3, &mut rng)).collect()).unwrap();
        let plus = representative_with_tie(&ts, 1);
        let minus = representative_with_tie(&ts, -1);
        assert!(!plus.tie_indices.is_empty(), "fixture should contain ties");
        let pp = bernoulli_profile(&decompose(&ts, &plus).unwrap()).unwrap();
        let pm = bernoulli_profile(&decompose(&ts, &minus).unwrap()).unwrap();
        assert_eq!(pp, pm);
        let tp = predicted_representative_term(&plus, &pp, 10, 25, false).unwrap();
        let tm = predicted_representative_term(&minus, &pm, 10, 25, false).unwrap();
        for j in 0..40 {
            for i in 0..40 {
                if pp.p_per_index[j] < 0.5 && pp.p_per_index[i] < 0.5 {
                    assert_eq!(tp.get(j, i), tm.get(j, i));
                }
            }
        }
        let q = |p| StabilityQuery::new(10, p, 40, 25).unwrap();
        assert_eq!(
            p_error(&q(pp.pooled_p)).unwrap(),
            p_error(&q(pm.pooled_p)).unwrap()
        );
    }

    proptest! {
        #[test]
        fn decompose_round_trips(seed in any::<u64>(), n in 1usize..40, k in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let states: Vec<_> = (0..k).map(|_| random_state(n, &mut rng)).collect();
            let ts = TrainingSet::new(states.clone()).unwrap();
            let rv = representative(&ts);
            let dm = decompose(&ts, &rv).unwrap();
            for (row, s) in dm.rows().zip(&states) {
                for (i, &d) in row.iter().enumerate() {
                    prop_assert_eq!(rv.psi.get(i) * (1 - 2 * d as i8), s.get(i));
                }
                prop_assert_eq!(&reconstruct(&rv, row).unwrap(), s);
            }
            let prof = bernoulli_profile(&dm).unwrap();
            prop_assert!(prof.p_per_index.iter().all(|&p| (0.0..=0.5).contains(&p)));
            prop_assert!(rv.tie_indices.iter().all(|&i| rv.psi.get(i) == 1));
        }
    }
}
