//! Datasets with known representatives.
//!
//! A dataset starts from uniformly random base vectors kept a minimum Hamming
//! distance apart. Each base spawns a group of examples by flipping every bit
//! independently with the Bernoulli parameter. Uniformly random confounding
//! states can be mixed in. Bases are the ground truth and are never trained.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::rng::{self, Purpose};
use crate::state::BinaryState;

/// Base placement attempts allowed per requested base.
pub const SEPARATION_ATTEMPTS_PER_BASE: usize = 1000;

pub const DEFAULT_MIN_SEPARATION: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub n_prototypes: usize,
    pub examples_per_prototype: usize,
    pub bernoulli_p: f64,
    pub n_confounders: usize,
    /// Pairwise Hamming floor between bases as a fraction of N.
    pub min_separation: f64,
    pub seed: u64,
}

impl DatasetConfig {
    pub fn new(n: usize, n_prototypes: usize, examples_per_prototype: usize, bernoulli_p: f64) -> Self {
        Self {
            n,
            n_prototypes,
            examples_per_prototype,
            bernoulli_p,
            n_confounders: 0,
            min_separation: DEFAULT_MIN_SEPARATION,
            seed: 0,
        }
    }

    pub fn with_confounders(mut self, n_confounders: usize) -> Self {
        self.n_confounders = n_confounders;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_min_separation(mut self, min_separation: f64) -> Self {
        self.min_separation = min_separation;
        self
    }

    /// Smallest allowed Hamming distance between two bases.
    pub fn min_distance(&self) -> usize {
        (self.min_separation * self.n as f64).ceil() as usize
    }

    /// Prototype load, n_prototypes / N.
    pub fn alpha(&self) -> f64 {
        self.n_prototypes as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        if self.n_prototypes == 0 {
            return Err(Error::Config("n_prototypes must be positive".into()));
        }
        if self.examples_per_prototype == 0 {
            return Err(Error::Config("examples_per_prototype must be positive".into()));
        }
        check_unit_interval("bernoulli_p", self.bernoulli_p, 0.5)?;
        check_unit_interval("min_separation", self.min_separation, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrototypeDataset {
    pub bases: Vec<BinaryState>,
    /// One group of examples per base, in base order.
    pub examples: Vec<Vec<BinaryState>>,
    pub confounders: Vec<BinaryState>,
    pub config: DatasetConfig,
}

impl PrototypeDataset {
    /// Everything the network is trained on: examples group by group, then confounders.
    pub fn learned_states(&self) -> Vec<BinaryState> {
        self.examples
            .iter()
            .flatten()
            .chain(&self.confounders)
            .cloned()
            .collect()
    }

    /// Checks group sizes, dimensions, and base separation against the config.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        let count = |what: &str, want: usize, got: usize| {
            if want == got {
                Ok(())
            } else {
                Err(Error::Config(format!("expected {want} {what}, found {got}")))
            }
        };
        count("bases", c.n_prototypes, self.bases.len())?;
        count("example groups", c.n_prototypes, self.examples.len())?;
        count("confounders", c.n_confounders, self.confounders.len())?;
        for g in &self.examples {
            count("examples in a group", c.examples_per_prototype, g.len())?;
        }
        for s in self
            .bases
            .iter()
            .chain(self.examples.iter().flatten())
            .chain(&self.confounders)
        {
            s.check_dim(c.n)?;
        }
        let floor = c.min_distance();
        for (a, x) in self.bases.iter().enumerate() {
            for y in &self.bases[a + 1..] {
                if x.hamming(y)? < floor {
                    return Err(Error::Config(format!(
                        "bases closer than the separation floor {floor}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Each spin independently +-1 with probability 1/2.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BinaryState {
    BinaryState::from_bools((0..n).map(|_| rng.random::<bool>()))
}

/// Flips each index of `base` independently with probability `p`.
pub fn noisy_copy<R: Rng + ?Sized>(base: &BinaryState, p: f64, rng: &mut R) -> Result<BinaryState> {
    check_unit_interval("p", p, 0.5)?;
    let mut s = base.clone();
    for i in 0..s.len() {
        if rng.random_bool(p) {
            s.flip(i);
        }
    }
    Ok(s)
}

/// `count` independent noisy copies of `base`.
pub fn probes_for<R: Rng + ?Sized>(
    base: &BinaryState,
    probe_p: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<BinaryState>> {
    if count == 0 {
        return Err(Error::Config("probe count must be positive".into()));
    }
    (0..count).map(|_| noisy_copy(base, probe_p, rng)).collect()
}

/// Builds a dataset. A pure function of `config`, seed included.
pub fn generate(config: &DatasetConfig) -> Result<PrototypeDataset> {
    config.validate()?;
    let n = config.n;
    let floor = config.min_distance();

    let mut base_rng = rng::stream(config.seed, Purpose::Bases, 0);
    let budget = SEPARATION_ATTEMPTS_PER_BASE * config.n_prototypes;
    let mut bases: Vec<BinaryState> = Vec::with_capacity(config.n_prototypes);
    let mut attempts = 0;
    while bases.len() < config.n_prototypes {
        if attempts == budget {
            return Err(Error::SeparationUnsatisfiable {
                wanted: config.n_prototypes,
                min_distance: floor,
                attempts,
            });
        }
        attempts += 1;
        let candidate = random_state(n, &mut base_rng);
        if bases
            .iter()
            .all(|b| b.hamming(&candidate).expect("same dimension") >= floor)
        {
            bases.push(candidate);
        }
    }

    let examples = bases
        .iter()
        .enumerate()
        .map(|(g, base)| {
            let mut r = rng::stream(config.seed, Purpose::Examples, g as u64);
            (0..config.examples_per_prototype)
                .map(|_| noisy_copy(base, config.bernoulli_p, &mut r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut conf_rng = rng::stream(config.seed, Purpose::Confounders, 0);
    let confounders = (0..config.n_confounders)
        .map(|_| random_state(n, &mut conf_rng))
        .collect();

    Ok(PrototypeDataset {
        bases,
        examples,
        confounders,
        config: config.clone(),
    })
}
