//! Probe census experiments.
//!
//! An experiment trains a network on the examples (and confounders) of a
//! dataset, relaxes many noisy probes of the bases, and tallies the final
//! states. Prototype formation shows up as a most-recalled state that sits on
//! a base and captures most of the probes.

use std::collections::HashMap;
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{self, DatasetConfig, PrototypeDataset};
use crate::error::{check_unit_interval, Error, Result};
use crate::learning::{hebbian, TrainingSet};
use crate::net::{self, FixedPointKind, RelaxationResult, DEFAULT_MAX_SWEEPS};
use crate::rng::{self, Purpose};
use crate::state::{check_dim, BinaryState, WeightMatrix};

pub const DESK_PROBES: usize = 10_000;
pub const PAPER_PROBES: usize = 100_000;

/// How an experiment probes the trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Probes over all bases; split as evenly as possible.
    pub total_probes: usize,
    /// Probe noise; the dataset's Bernoulli parameter when absent.
    pub probe_p: Option<f64>,
    pub max_sweeps: usize,
    /// Seed for probe noise and sweep orders; the dataset seed when absent.
    pub seed: Option<u64>,
    /// Number of top states to report; the number of prototypes when absent.
    pub n_top: Option<usize>,
    /// Compute sorted energy profiles for every labeled state.
    pub profiles: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            total_probes: DESK_PROBES,
            probe_p: None,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            seed: None,
            n_top: None,
            profiles: false,
        }
    }
}

impl ProbeConfig {
    /// Fills every optional field from the dataset.
    pub fn resolve(&self, dataset: &DatasetConfig) -> Result<ResolvedProbeConfig> {
        let probe_p = self.probe_p.unwrap_or(dataset.bernoulli_p);
        check_unit_interval("probe_p", probe_p, 0.5)?;
        if self.total_probes == 0 {
            return Err(Error::Config("total_probes must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be positive".into()));
        }
        let n_top = self.n_top.unwrap_or(dataset.n_prototypes);
        if n_top == 0 {
            return Err(Error::Config("n_top must be positive".into()));
        }
        Ok(ResolvedProbeConfig {
            total_probes: self.total_probes,
            probe_p,
            max_sweeps: self.max_sweeps,
            seed: self.seed.unwrap_or(dataset.seed),
            n_top,
            profiles: self.profiles,
        })
    }
}

/// [`ProbeConfig`] with defaults expanded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedProbeConfig {
    pub total_probes: usize,
    pub probe_p: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub n_top: usize,
    pub profiles: bool,
}

/// Tally for one final state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub count: usize,
    /// Probes that ran out of sweeps and ended here.
    pub unconverged: usize,
}

/// Multiset of relaxation endpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecallCensus {
    pub counts: HashMap<BinaryState, CensusEntry>,
    pub total_probes: usize,
    pub converged_probes: usize,
    pub total_sweeps: usize,
    pub max_sweeps_used: usize,
    pub total_flips: usize,
}

impl RecallCensus {
    fn record(&mut self, r: RelaxationResult) {
        let entry = self.counts.entry(r.final_state).or_default();
        entry.count += 1;
        if !r.converged {
            entry.unconverged += 1;
        }
        self.total_probes += 1;
        self.converged_probes += usize::from(r.converged);
        self.total_sweeps += r.sweeps_used;
        self.max_sweeps_used = self.max_sweeps_used.max(r.sweeps_used);
        self.total_flips += r.flips_total;
    }

    /// Order-free merge.
    pub fn merge(mut self, other: Self) -> Self {
        for (s, e) in other.counts {
            let entry = self.counts.entry(s).or_default();
            entry.count += e.count;
            entry.unconverged += e.unconverged;
        }
        self.total_probes += other.total_probes;
        self.converged_probes += other.converged_probes;
        self.total_sweeps += other.total_sweeps;
        self.max_sweeps_used = self.max_sweeps_used.max(other.max_sweeps_used);
        self.total_flips += other.total_flips;
        self
    }

    /// States by descending count, ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(&BinaryState, CensusEntry)> {
        let mut v: Vec<_> = self.counts.iter().map(|(s, e)| (s, *e)).collect();
        v.sort_by(|a, b| b.1.count.cmp(&a.1.count).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn converged_fraction(&self) -> f64 {
        if self.total_probes == 0 {
            0.0
        } else {
            self.converged_probes as f64 / self.total_probes as f64
        }
    }

    pub fn mean_sweeps(&self) -> f64 {
        if self.total_probes == 0 {
            0.0
        } else {
            self.total_sweeps as f64 / self.total_probes as f64
        }
    }
}

fn relax_probe(
    w: &WeightMatrix,
    probe: &BinaryState,
    seed: u64,
    index: usize,
    max_sweeps: usize,
) -> Result<RelaxationResult> {
    let mut r = rng::stream(seed, Purpose::SweepOrder, index as u64);
    net::relax_with(w, probe, &mut r, max_sweeps)
}

/// Relaxes every probe and tallies the endpoints.
///
/// Probe `k` draws its sweep orders from its own stream `(seed, k)`, so the
/// census does not depend on scheduling.
pub fn run_probe_census(
    w: &WeightMatrix,
    probes: &[BinaryState],
    seed: u64,
    max_sweeps: usize,
) -> Result<RecallCensus> {
    for p in probes {
        check_dim(w.dim(), p.len())?;
    }
    probes
        .par_iter()
        .enumerate()
        .try_fold(RecallCensus::default, |mut c, (k, p)| {
            c.record(relax_probe(w, p, seed, k, max_sweeps)?);
            Ok(c)
        })
        .try_reduce(RecallCensus::default, |a, b| Ok(a.merge(b)))
}

/// Single-threaded [`run_probe_census`]; same result.
pub fn run_probe_census_serial(
    w: &WeightMatrix,
    probes: &[BinaryState],
    seed: u64,
    max_sweeps: usize,
) -> Result<RecallCensus> {
    let mut census = RecallCensus::default();
    for (k, p) in probes.iter().enumerate() {
        check_dim(w.dim(), p.len())?;
        census.record(relax_probe(w, p, seed, k, max_sweeps)?);
    }
    Ok(census)
}

/// `sum_i |a_i - b_i|`, twice the Hamming distance.
pub fn manhattan(a: &BinaryState, b: &BinaryState) -> Result<usize> {
    Ok(2 * a.hamming(b)?)
}

/// Closest base by Manhattan distance; ties go to the lower index.
pub fn distance_to_nearest_base(s: &BinaryState, bases: &[BinaryState]) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (idx, b) in bases.iter().enumerate() {
        let d = manhattan(s, b)?;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, idx));
        }
    }
    best.ok_or(Error::Empty("bases"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    Learned,
    MostRecalled,
    Spurious,
}

impl StateClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StateClass::Learned => "learned",
            StateClass::MostRecalled => "most_recalled",
            StateClass::Spurious => "spurious",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "learned" => Some(StateClass::Learned),
            "most_recalled" => Some(StateClass::MostRecalled),
            "spurious" => Some(StateClass::Spurious),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledState {
    pub state: BinaryState,
    pub class: StateClass,
    /// Probes ending here (0 for learned states never recalled).
    pub count: usize,
    /// A most-recalled state that is also a learned state.
    pub also_learned: bool,
    pub fixed_point: FixedPointKind,
}

/// Labels the top `n_top` census states most-recalled, every distinct
/// learned state learned, and every other census state spurious.
///
/// Most-recalled wins over learned; such overlaps set `also_learned`.
/// Output order: most-recalled by rank, learned in dataset order, spurious by rank.
pub fn classify_states(
    census: &RecallCensus,
    dataset: &PrototypeDataset,
    n_top: usize,
    w: &WeightMatrix,
) -> Result<Vec<LabeledState>> {
    let ranked = census.ranked();
    let mut learned: Vec<BinaryState> = Vec::new();
    let mut learned_set = std::collections::HashSet::new();
    for s in dataset.learned_states() {
        if learned_set.insert(s.clone()) {
            learned.push(s);
        }
    }
    let top: Vec<_> = ranked.iter().take(n_top).collect();
    let top_set: std::collections::HashSet<&BinaryState> = top.iter().map(|(s, _)| *s).collect();

    let mut out = Vec::new();
    for (s, e) in &top {
        out.push(LabeledState {
            state: (*s).clone(),
            class: StateClass::MostRecalled,
            count: e.count,
            also_learned: learned_set.contains(*s),
            fixed_point: net::fixed_point_kind(w, s)?,
        });
    }
    for s in learned.into_iter().filter(|s| !top_set.contains(s)) {
        let count = census.counts.get(&s).map_or(0, |e| e.count);
        let fixed_point = net::fixed_point_kind(w, &s)?;
        out.push(LabeledState {
            state: s,
            class: StateClass::Learned,
            count,
            also_learned: false,
            fixed_point,
        });
    }
    for (s, e) in ranked.iter().skip(n_top) {
        if learned_set.contains(*s) {
            continue;
        }
        out.push(LabeledState {
            state: (*s).clone(),
            class: StateClass::Spurious,
            count: e.count,
            also_learned: false,
            fixed_point: net::fixed_point_kind(w, s)?,
        });
    }
    Ok(out)
}

/// Sorted per-neuron energies of one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub state_class: StateClass,
    /// Ascending; negative entries are stable units.
    pub sorted_energies: Vec<f64>,
    pub fixed_point: FixedPointKind,
}

impl EnergyProfile {
    pub fn max_energy(&self) -> f64 {
        *self.sorted_energies.last().expect("profiles are non-empty")
    }

    pub fn positive_count(&self) -> usize {
        self.sorted_energies.iter().filter(|&&e| e > 0.0).count()
    }
}

pub fn energy_profile(w: &WeightMatrix, state: &BinaryState, class: StateClass) -> Result<EnergyProfile> {
    let mut sorted_energies = net::neuron_energies(w, state)?;
    sorted_energies.sort_by(f64::total_cmp);
    Ok(EnergyProfile {
        state_class: class,
        sorted_energies,
        fixed_point: net::fixed_point_kind(w, state)?,
    })
}

pub fn energy_profiles(w: &WeightMatrix, labeled: &[LabeledState]) -> Result<Vec<EnergyProfile>> {
    labeled
        .par_iter()
        .map(|l| energy_profile(w, &l.state, l.class))
        .collect()
}

/// One of the top-ranked final states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedState {
    pub rank: usize,
    pub state: BinaryState,
    pub count: usize,
    pub unconverged: usize,
    /// Manhattan distance to the nearest base.
    pub distance: usize,
    pub nearest_base: usize,
    pub proportion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub dataset: DatasetConfig,
    pub probe: ResolvedProbeConfig,
    pub top_states: Vec<RankedState>,
    pub proportion_most_recalled: f64,
    pub converged_fraction: f64,
    pub distinct_states: usize,
    pub spurious_states: usize,
    pub mean_sweeps: f64,
    pub alpha: f64,
    pub energy_profiles: Vec<EnergyProfile>,
}

impl ExperimentResult {
    /// Distance of the most-recalled state to its nearest base.
    pub fn distance_most_recalled(&self) -> usize {
        self.top_states[0].distance
    }

    /// Mean distance over the reported top states.
    pub fn mean_top_distance(&self) -> f64 {
        let total: usize = self.top_states.iter().map(|t| t.distance).sum();
        total as f64 / self.top_states.len() as f64
    }

    pub fn profiles_of(&self, class: StateClass) -> impl Iterator<Item = &EnergyProfile> {
        self.energy_profiles
            .iter()
            .filter(move |p| p.state_class == class)
    }
}

/// Probes for every base: `total` split evenly, earlier bases taking the remainder.
pub fn experiment_probes(
    dataset: &PrototypeDataset,
    total: usize,
    probe_p: f64,
    seed: u64,
) -> Result<Vec<BinaryState>> {
    let n_bases = dataset.bases.len();
    if total < n_bases {
        return Err(Error::Config(format!(
            "{total} probes cannot cover {n_bases} bases"
        )));
    }
    let mut probes = Vec::with_capacity(total);
    for (g, base) in dataset.bases.iter().enumerate() {
        let count = total / n_bases + usize::from(g < total % n_bases);
        let mut r = rng::stream(seed, Purpose::Probes, g as u64);
        probes.extend(datagen::probes_for(base, probe_p, count, &mut r)?);
    }
    Ok(probes)
}

/// Trains on examples and confounders (never the bases).
pub fn train(dataset: &PrototypeDataset) -> Result<WeightMatrix> {
    hebbian(&TrainingSet::new(dataset.learned_states())?)
}

/// Full protocol: train, probe, census, rank, measure, label, profile.
pub fn run_experiment(dataset: &PrototypeDataset, probe: &ProbeConfig) -> Result<ExperimentResult> {
    let w = train(dataset)?;
    run_experiment_with_weights(dataset, &w, probe)
}

pub fn run_experiment_with_weights(
    dataset: &PrototypeDataset,
    w: &WeightMatrix,
    probe: &ProbeConfig,
) -> Result<ExperimentResult> {
    let cfg = probe.resolve(&dataset.config)?;
    let probes = experiment_probes(dataset, cfg.total_probes, cfg.probe_p, cfg.seed)?;
    let census = run_probe_census(w, &probes, cfg.seed, cfg.max_sweeps)?;
    let total = census.total_probes as f64;

    let top_states = census
        .ranked()
        .into_iter()
        .take(cfg.n_top)
        .enumerate()
        .map(|(r, (s, e))| {
            let (distance, nearest_base) = distance_to_nearest_base(s, &dataset.bases)?;
            Ok(RankedState {
                rank: r + 1,
                state: s.clone(),
                count: e.count,
                unconverged: e.unconverged,
                distance,
                nearest_base,
                proportion: e.count as f64 / total,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let labeled = classify_states(&census, dataset, cfg.n_top, w)?;
    let spurious_states = labeled
        .iter()
        .filter(|l| l.class == StateClass::Spurious)
        .count();
    let energy_profiles = if cfg.profiles {
        energy_profiles(w, &labeled)?
    } else {
        Vec::new()
    };

    Ok(ExperimentResult {
        alpha: dataset.config.alpha(),
        dataset: dataset.config.clone(),
        proportion_most_recalled: top_states[0].proportion,
        converged_fraction: census.converged_fraction(),
        distinct_states: census.distinct(),
        mean_sweeps: census.mean_sweeps(),
        spurious_states,
        top_states,
        energy_profiles,
        probe: cfg,
    })
}

/// Axes of a grid search. Every combination is one cell, repeated `replicates` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ns: Vec<usize>,
    pub prototypes: PrototypeAxis,
    pub examples: Vec<usize>,
    pub ps: Vec<f64>,
    pub confounders: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub min_separation: f64,
}

/// Number of prototypes per cell, absolute or as a load ratio of N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrototypeAxis {
    Counts(Vec<usize>),
    /// `round(alpha * N)`, at least 1.
    Alphas(Vec<f64>),
}

impl PrototypeAxis {
    fn len(&self) -> usize {
        match self {
            PrototypeAxis::Counts(v) => v.len(),
            PrototypeAxis::Alphas(v) => v.len(),
        }
    }

    fn resolve(&self, idx: usize, n: usize) -> usize {
        match self {
            PrototypeAxis::Counts(v) => v[idx],
            PrototypeAxis::Alphas(v) => ((v[idx] * n as f64).round() as usize).max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub replicate: usize,
    pub dataset: DatasetConfig,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty()
            || self.prototypes.len() == 0
            || self.examples.is_empty()
            || self.ps.is_empty()
            || self.confounders.is_empty()
            || self.replicates == 0
        {
            return Err(Error::Empty("grid axis"));
        }
        Ok(())
    }

    /// Expands the grid in axis order N, prototypes, examples, p, confounders, replicate.
    ///
    /// A cell's seed is derived from the master seed and the cell's own
    /// parameter values, so it can be re-run alone.
    pub fn cells(&self) -> Result<Vec<GridCell>> {
        self.validate()?;
        let mut cells = Vec::new();
        for &n in &self.ns {
            for a in 0..self.prototypes.len() {
                let n_proto = self.prototypes.resolve(a, n);
                for &ex in &self.examples {
                    for &p in &self.ps {
                        for &conf in &self.confounders {
                            for rep in 0..self.replicates {
                                let seed = rng::derive_seed(
                                    self.master_seed,
                                    &[n as u64, n_proto as u64, ex as u64, p.to_bits(), conf as u64, rep as u64],
                                );
                                let dataset = DatasetConfig::new(n, n_proto, ex, p)
                                    .with_confounders(conf)
                                    .with_min_separation(self.min_separation)
                                    .with_seed(seed);
                                cells.push(GridCell {
                                    index: cells.len(),
                                    replicate: rep,
                                    dataset,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: GridCell,
    pub result: std::result::Result<ExperimentResult, String>,
}

pub fn run_cell(cell: &GridCell, probe: &ProbeConfig) -> Result<ExperimentResult> {
    let ds = datagen::generate(&cell.dataset)?;
    run_experiment(&ds, probe)
}

/// Runs every cell, handing outcomes to `sink` in cell order as soon as each
/// prefix of the grid is complete. Cell failures are reported, not fatal; an
/// error from `sink` stops delivery.
pub fn grid_search<F>(spec: &GridSpec, probe: &ProbeConfig, mut sink: F) -> Result<()>
where
    F: FnMut(CellOutcome) -> Result<()>,
{
    let cells = spec.cells()?;
    let (tx, rx) = mpsc::channel::<(usize, CellOutcome)>();
    std::thread::scope(|scope| {
        let cells = &cells;
        scope.spawn(move || {
            cells.par_iter().for_each_with(tx, |tx, cell| {
                let result = run_cell(cell, probe).map_err(|e| e.to_string());
                let _ = tx.send((
                    cell.index,
                    CellOutcome {
                        cell: cell.clone(),
                        result,
                    },
                ));
            });
        });
        let mut pending: std::collections::BTreeMap<usize, CellOutcome> = Default::default();
        let mut next = 0;
        let mut status = Ok(());
        for (idx, outcome) in rx {
            if status.is_err() {
                continue;
            }
            pending.insert(idx, outcome);
            while let Some(o) = pending.remove(&next) {
                next += 1;
                if let Err(e) = sink(o) {
                    status = Err(e);
                    break;
                }
            }
        }
        status
    })
}
