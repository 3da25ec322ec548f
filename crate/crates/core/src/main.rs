use std::error::Error as StdError;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hopfield_prototypes::datagen::{self, DatasetConfig, PrototypeDataset, DEFAULT_MIN_SEPARATION};
use hopfield_prototypes::experiments::{
    self, GridSpec, ProbeConfig, PrototypeAxis, DESK_PROBES, PAPER_PROBES,
};
use hopfield_prototypes::io::{self as fio, CsvSchema, ExperimentRow};
use hopfield_prototypes::net::{self, DEFAULT_MAX_SWEEPS};
use hopfield_prototypes::oracle;
use hopfield_prototypes::theory::{self, CapacityQuery, HERTZ_P_ERROR};
use hopfield_prototypes::{hebbian, TrainingSet, WeightMatrix};

type CliResult<T = ()> = Result<T, Box<dyn StdError>>;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "HOPFIELD_PROTO_OUT";

#[derive(Parser, Debug)]
#[command(name = "hopfield-proto", version, about = "Hopfield prototype formation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Predicted error probability over a grid of load ratios.
    TheoryCurve(TheoryCurveArgs),
    /// Largest load ratio keeping the error probability under a target.
    Capacity(CapacityArgs),
    /// Generate a dataset directory.
    Generate(GenerateArgs),
    /// Train Hebbian weights on a dataset.
    Train(TrainArgs),
    /// Probe a network and write the census of final states.
    Probe(ProbeCmdArgs),
    /// Train, probe and report the top states.
    Experiment(ExperimentArgs),
    /// Run the experiment over a parameter grid.
    Grid(GridArgs),
    /// List every stable state of a small network by brute force.
    Enumerate(EnumerateArgs),
    /// Sorted neuron energies of labeled states.
    Profile(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Scale {
    /// 10,000 probes per experiment, small default grids.
    Desk,
    /// 100,000 probes per experiment, grids up to N=1000.
    Paper,
}

impl Scale {
    fn probes(self) -> usize {
        match self {
            Scale::Desk => DESK_PROBES,
            Scale::Paper => PAPER_PROBES,
        }
    }
}

#[derive(Args, Debug)]
struct TheoryCurveArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 4, 5, 6, 7, 8])]
    subset_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0f64, 0.1, 0.2])]
    ps: Vec<f64>,
    /// Explicit ratios K/N; overrides the linear grid.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    ratio_min: f64,
    #[arg(long, default_value_t = 0.5)]
    ratio_max: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long, default_value_t = 1)]
    subset_size: usize,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = HERTZ_P_ERROR)]
    target: f64,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[arg(long = "n", default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    prototypes: usize,
    #[arg(long, default_value_t = 50)]
    examples: usize,
    /// Bernoulli flip probability of the examples.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    confounders: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum pairwise base distance as a fraction of N.
    #[arg(long, default_value_t = DEFAULT_MIN_SEPARATION)]
    min_separation: f64,
}

impl DatasetArgs {
    fn config(&self) -> DatasetConfig {
        DatasetConfig::new(self.n, self.prototypes, self.examples, self.p)
            .with_confounders(self.confounders)
            .with_seed(self.seed)
            .with_min_separation(self.min_separation)
    }
}

/// A saved dataset directory, or parameters to generate one.
#[derive(Args, Debug)]
struct DatasetSource {
    /// Load this dataset directory instead of generating.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    gen: DatasetArgs,
}

impl DatasetSource {
    fn load(&self) -> CliResult<PrototypeDataset> {
        match &self.dataset {
            Some(dir) => Ok(fio::load_dataset(dir).map_err(|e| format!("{}: {e}", dir.display()))?),
            None => Ok(datagen::generate(&self.gen.config())?),
        }
    }
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    /// Total probes; defaults to the scale's count.
    #[arg(long)]
    probes: Option<usize>,
    /// Probe noise; defaults to the dataset's p.
    #[arg(long)]
    probe_p: Option<f64>,
    /// Seed for probes and update orders; defaults to the dataset seed.
    #[arg(long)]
    probe_seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Top states to report; defaults to the number of prototypes.
    #[arg(long)]
    top: Option<usize>,
}

impl ProbeArgs {
    fn config(&self, profiles: bool) -> ProbeConfig {
        ProbeConfig {
            total_probes: self.probes.unwrap_or(self.scale.probes()),
            probe_p: self.probe_p,
            max_sweeps: self.max_sweeps,
            seed: self.probe_seed,
            n_top: self.top,
            profiles,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    gen: DatasetArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Weight file; defaults to weights.txt inside the dataset directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProbeCmdArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Use these weights instead of training on the dataset.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    probe: ProbeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    source: DatasetSource,
    #[command(flatten)]
    probe: ProbeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    /// Prototype counts per cell; overrides --alphas.
    #[arg(long, value_delimiter = ',')]
    prototypes: Vec<usize>,
    /// Prototype load ratios, resolved as round(alpha * N).
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    examples: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    ps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    confounders: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_SEPARATION)]
    min_separation: f64,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    probe_p: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        let or = |given: &[usize], desk: &[usize], paper: &[usize]| -> Vec<usize> {
            match (given.is_empty(), self.scale) {
                (false, _) => given.to_vec(),
                (true, Scale::Desk) => desk.to_vec(),
                (true, Scale::Paper) => paper.to_vec(),
            }
        };
        let prototypes = if !self.prototypes.is_empty() {
            PrototypeAxis::Counts(self.prototypes.clone())
        } else if !self.alphas.is_empty() {
            PrototypeAxis::Alphas(self.alphas.clone())
        } else {
            PrototypeAxis::Alphas(vec![0.05, 0.125, 0.5])
        };
        let ps = match (self.ps.is_empty(), self.scale) {
            (false, _) => self.ps.clone(),
            (true, Scale::Desk) => vec![0.1, 0.2],
            (true, Scale::Paper) => vec![0.05, 0.1, 0.15, 0.2, 0.25],
        };
        GridSpec {
            ns: or(&self.ns, &[50, 100], &[100, 250, 500, 1000]),
            prototypes,
            examples: or(&self.examples, &[10, 50], &[10, 50, 200]),
            ps,
            confounders: or(&self.confounders, &[0], &[0, 250, 1000]),
            replicates: self.replicates,
            master_seed: self.master_seed,
            min_separation: self.min_separation,
        }
    }

    fn probe(&self) -> ProbeConfig {
        ProbeConfig {
            total_probes: self.probes.unwrap_or(self.scale.probes()),
            probe_p: self.probe_p,
            max_sweeps: self.max_sweeps,
            seed: None,
            n_top: self.top,
            profiles: false,
        }
    }
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Weight file to analyse.
    #[arg(long, group = "input")]
    weights: Option<PathBuf>,
    /// State file to Hebbian-train.
    #[arg(long, group = "input")]
    states: Option<PathBuf>,
    /// Dataset directory to Hebbian-train.
    #[arg(long, group = "input")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EnumerateRow {
    kind: &'static str,
    energy: f64,
    state: String,
}

impl CsvSchema for EnumerateRow {
    const COLUMNS: &'static [&'static str] = &["kind", "energy", "state"];
}

#[derive(Serialize)]
struct CellErrorRow {
    cell: usize,
    #[serde(rename = "N")]
    n: usize,
    n_prototypes: usize,
    examples: usize,
    p: f64,
    confounders: usize,
    seed: u64,
    error: String,
}

impl CsvSchema for CellErrorRow {
    const COLUMNS: &'static [&'static str] =
        &["cell", "N", "n_prototypes", "examples", "p", "confounders", "seed", "error"];
}

fn default_dir() -> CliResult<PathBuf> {
    let dir = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(dir)
}

fn out_path(explicit: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    match explicit {
        Some(p) => Ok(p.clone()),
        None => Ok(default_dir()?.join(name)),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_csv_file<T: Serialize + CsvSchema, C: Serialize>(path: &Path, rows: &[T], config: &C) -> CliResult {
    let mut f = create(path)?;
    fio::write_csv(&mut f, rows)?;
    f.flush()?;
    fio::write_sidecar(path, config)?;
    println!("{}", path.display());
    Ok(())
}

fn theory_curve(a: &TheoryCurveArgs) -> CliResult {
    let ratios = if a.ratios.is_empty() {
        theory::linear_grid(a.ratio_min, a.ratio_max, a.steps)
    } else {
        a.ratios.clone()
    };
    let rows = theory::theory_curve(&a.subset_sizes, &a.ps, &ratios)?;
    let path = out_path(&a.out, "theory_curve.csv")?;
    let config = json!({
        "command": "theory-curve",
        "subset_sizes": a.subset_sizes,
        "ps": a.ps,
        "ratios": ratios,
    });
    write_csv_file(&path, &rows, &config)
}

fn capacity(a: &CapacityArgs) -> CliResult {
    let q = CapacityQuery::new(a.target, a.subset_size, a.p)?;
    println!("{}", theory::capacity_ratio(&q)?);
    Ok(())
}

fn generate(a: &GenerateArgs) -> CliResult {
    let ds = datagen::generate(&a.gen.config())?;
    let dir = out_path(&a.out, "dataset")?;
    fio::save_dataset(&dir, &ds).map_err(|e| format!("{}: {e}", dir.display()))?;
    println!("{}", dir.display());
    Ok(())
}

fn train(a: &TrainArgs) -> CliResult {
    let ds = fio::load_dataset(&a.dataset).map_err(|e| format!("{}: {e}", a.dataset.display()))?;
    let w = experiments::train(&ds)?;
    let path = a.out.clone().unwrap_or_else(|| a.dataset.join("weights.txt"));
    let mut f = create(&path)?;
    fio::write_weights(&mut f, &w)?;
    f.flush()?;
    fio::write_sidecar(&path, &json!({ "command": "train", "dataset": ds.config }))?;
    println!("{}", path.display());
    Ok(())
}

fn load_weights(path: &Path) -> CliResult<WeightMatrix> {
    Ok(fio::load_weights(path).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn probe(a: &ProbeCmdArgs) -> CliResult {
    let ds = fio::load_dataset(&a.dataset).map_err(|e| format!("{}: {e}", a.dataset.display()))?;
    let w = match &a.weights {
        Some(p) => load_weights(p)?,
        None => experiments::train(&ds)?,
    };
    if w.dim() != ds.config.n {
        return Err(format!("weights have N={}, dataset has N={}", w.dim(), ds.config.n).into());
    }
    let cfg = a.probe.config(false).resolve(&ds.config)?;
    let probes = experiments::experiment_probes(&ds, cfg.total_probes, cfg.probe_p, cfg.seed)?;
    let census = experiments::run_probe_census(&w, &probes, cfg.seed, cfg.max_sweeps)?;
    let rows = fio::census_rows(&census, &ds.bases)?;
    let path = out_path(&a.out, "census.csv")?;
    let config = json!({
        "command": "probe",
        "scale": a.probe.scale,
        "dataset": ds.config,
        "weights": a.weights,
        "probe": cfg,
    });
    write_csv_file(&path, &rows, &config)
}

fn experiment(a: &ExperimentArgs, profiles: bool) -> CliResult {
    let ds = a.source.load()?;
    let res = experiments::run_experiment(&ds, &a.probe.config(profiles))?;
    let config = json!({
        "command": if profiles { "profile" } else { "experiment" },
        "scale": a.probe.scale,
        "dataset": res.dataset,
        "probe": res.probe,
    });
    if profiles {
        let path = out_path(&a.out, "profile.csv")?;
        write_csv_file(&path, &fio::profile_rows(&res.energy_profiles), &config)
    } else {
        let path = out_path(&a.out, "experiment.csv")?;
        write_csv_file(&path, &fio::experiment_rows(&res), &config)
    }
}

fn grid(a: &GridArgs) -> CliResult {
    let spec = a.spec();
    let probe = a.probe();
    let path = out_path(&a.out, "grid.csv")?;
    let mut errors_name = path.file_name().unwrap_or_default().to_os_string();
    errors_name.push(".errors.csv");
    let errors_path = path.with_file_name(errors_name);

    fio::write_sidecar(
        &path,
        &json!({ "command": "grid", "scale": a.scale, "grid": spec, "probe": probe }),
    )?;
    let mut rows = csv::WriterBuilder::new().has_headers(false).from_writer(create(&path)?);
    rows.write_record(ExperimentRow::COLUMNS)?;
    rows.flush()?;
    let mut errs = csv::WriterBuilder::new().has_headers(false).from_writer(create(&errors_path)?);
    errs.write_record(CellErrorRow::COLUMNS)?;
    errs.flush()?;

    let mut failed = 0usize;
    experiments::grid_search(&spec, &probe, |outcome| {
        match outcome.result {
            Ok(res) => {
                for r in fio::experiment_rows(&res) {
                    rows.serialize(r)?;
                }
                rows.flush()?;
            }
            Err(msg) => {
                failed += 1;
                let d = &outcome.cell.dataset;
                eprintln!("cell {}: {msg}", outcome.cell.index);
                errs.serialize(CellErrorRow {
                    cell: outcome.cell.index,
                    n: d.n,
                    n_prototypes: d.n_prototypes,
                    examples: d.examples_per_prototype,
                    p: d.bernoulli_p,
                    confounders: d.n_confounders,
                    seed: d.seed,
                    error: msg,
                })?;
                errs.flush()?;
            }
        }
        Ok(())
    })?;
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see {}", errors_path.display());
    }
    println!("{}", path.display());
    Ok(())
}

fn enumerate(a: &EnumerateArgs) -> CliResult {
    let w = if let Some(p) = &a.weights {
        load_weights(p)?
    } else if let Some(p) = &a.states {
        let f = File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let states = fio::read_states(f, None).map_err(|e| format!("{}: {e}", p.display()))?;
        hebbian(&TrainingSet::new(states)?)?
    } else if let Some(dir) = &a.dataset {
        let ds = fio::load_dataset(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        experiments::train(&ds)?
    } else {
        return Err("one of --weights, --states or --dataset is required".into());
    };
    let set = oracle::enumerate_stable(&w)?;
    let mut rows = Vec::new();
    for (kind, states) in [("stable", &set.states), ("zero_field", &set.zero_field_fixed_points)] {
        for s in states {
            rows.push(EnumerateRow {
                kind,
                energy: net::total_energy(&w, s)?,
                state: s.to_string(),
            });
        }
    }
    let path = out_path(&a.out, "stable.csv")?;
    let config = json!({
        "command": "enumerate",
        "n": w.dim(),
        "weights": a.weights,
        "states": a.states,
        "dataset": a.dataset,
    });
    write_csv_file(&path, &rows, &config)
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::TheoryCurve(a) => theory_curve(a),
        Command::Capacity(a) => capacity(a),
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Probe(a) => probe(a),
        Command::Experiment(a) => experiment(a, false),
        Command::Grid(a) => grid(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Profile(a) => experiment(a, true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
