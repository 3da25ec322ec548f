//! File formats.
//!
//! * States: one per line, spins written `+1`/`-1` separated by single spaces.
//! * Weights: a header line `N=<n>` followed by N rows of space separated
//!   entries with 17 significant digits, which round-trips every `f64`.
//! * Datasets: a directory holding `config.json`, `bases.txt`, `examples.txt`
//!   (groups back to back, in base order) and `confounders.txt`.
//! * Results: CSV with a header row. Every CSV written through
//!   [`write_sidecar`] gets a `<file>.config.json` holding the resolved run
//!   configuration.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetConfig, PrototypeDataset};
use crate::error::{Error, Result};
use crate::experiments::{CensusEntry, EnergyProfile, ExperimentResult, RecallCensus};
use crate::state::{BinaryState, WeightMatrix};
use crate::theory::TheoryRow;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses one `+1 -1 ...` line. `line` is 1-based and only used in errors.
pub fn parse_state(text: &str, line: usize) -> Result<BinaryState> {
    let values = text
        .split(' ')
        .enumerate()
        .map(|(k, tok)| match tok {
            "+1" => Ok(1),
            "-1" => Ok(-1),
            other => Err(parse_err(line, format!("field {}: bad spin token {other:?}", k + 1))),
        })
        .collect::<Result<Vec<i8>>>()?;
    BinaryState::new(values).map_err(|e| parse_err(line, e.to_string()))
}

pub fn write_states<W: Write>(mut out: W, states: &[BinaryState]) -> Result<()> {
    for s in states {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

/// Reads a state file. Every state must have dimension `n` when given.
pub fn read_states<R: Read>(input: R, n: Option<usize>) -> Result<Vec<BinaryState>> {
    let mut states = Vec::new();
    for (k, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let s = parse_state(line.trim_end_matches('\r'), k + 1)?;
        let want = n.or_else(|| states.first().map(BinaryState::len));
        if let Some(want) = want {
            if s.len() != want {
                return Err(parse_err(
                    k + 1,
                    format!("expected {want} spins, found {}", s.len()),
                ));
            }
        }
        states.push(s);
    }
    Ok(states)
}

pub fn write_weights<W: Write>(mut out: W, w: &WeightMatrix) -> Result<()> {
    writeln!(out, "N={}", w.dim())?;
    for row in w.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b" ")?;
            }
            first = false;
            write!(out, "{v:.16e}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_weights<R: Read>(input: R) -> Result<WeightMatrix> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing N= header"))??;
    let n: usize = header
        .trim_end()
        .strip_prefix("N=")
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| parse_err(1, format!("bad header {header:?}")))?;
    let mut entries = Vec::with_capacity(n * n);
    for r in 0..n {
        let line_no = r + 2;
        let line = lines
            .next()
            .ok_or_else(|| parse_err(line_no, format!("expected {n} rows, found {r}")))??;
        let before = entries.len();
        for (c, tok) in line.trim_end().split(' ').enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("field {}: bad number {tok:?}", c + 1)))?;
            entries.push(v);
        }
        if entries.len() - before != n {
            return Err(parse_err(
                line_no,
                format!("expected {n} fields, found {}", entries.len() - before),
            ));
        }
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(parse_err(n + 2, "unexpected trailing row"));
        }
    }
    WeightMatrix::from_flat(n, entries)
}

pub fn save_weights(path: &Path, w: &WeightMatrix) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_weights(&mut f, w)?;
    f.flush()?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<WeightMatrix> {
    read_weights(File::open(path)?)
}

const DATASET_CONFIG: &str = "config.json";
const DATASET_BASES: &str = "bases.txt";
const DATASET_EXAMPLES: &str = "examples.txt";
const DATASET_CONFOUNDERS: &str = "confounders.txt";

fn save_state_file(path: PathBuf, states: &[BinaryState]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_states(&mut f, states)?;
    f.flush()?;
    Ok(())
}

/// Writes a dataset directory, creating it if needed.
pub fn save_dataset(dir: &Path, ds: &PrototypeDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut cfg = BufWriter::new(File::create(dir.join(DATASET_CONFIG))?);
    serde_json::to_writer_pretty(&mut cfg, &ds.config)?;
    cfg.write_all(b"\n")?;
    cfg.flush()?;
    save_state_file(dir.join(DATASET_BASES), &ds.bases)?;
    let examples: Vec<BinaryState> = ds.examples.iter().flatten().cloned().collect();
    save_state_file(dir.join(DATASET_EXAMPLES), &examples)?;
    save_state_file(dir.join(DATASET_CONFOUNDERS), &ds.confounders)?;
    Ok(())
}

fn load_state_file(path: PathBuf, n: usize) -> Result<Vec<BinaryState>> {
    let f = File::open(&path)?;
    read_states(f, Some(n)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Reads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<PrototypeDataset> {
    let config: DatasetConfig = serde_json::from_reader(File::open(dir.join(DATASET_CONFIG))?)?;
    config.validate()?;
    let n = config.n;
    let bases = load_state_file(dir.join(DATASET_BASES), n)?;
    let flat = load_state_file(dir.join(DATASET_EXAMPLES), n)?;
    let confounders = load_state_file(dir.join(DATASET_CONFOUNDERS), n)?;
    let per = config.examples_per_prototype;
    if flat.len() != per * config.n_prototypes {
        return Err(Error::Config(format!(
            "{}: expected {} examples, found {}",
            DATASET_EXAMPLES,
            per * config.n_prototypes,
            flat.len()
        )));
    }
    let examples = flat.chunks(per).map(<[BinaryState]>::to_vec).collect();
    let ds = PrototypeDataset {
        bases,
        examples,
        confounders,
        config,
    };
    ds.validate()?;
    Ok(ds)
}

/// Path of the config echo written next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    path.with_file_name(name)
}

pub fn write_sidecar<T: Serialize>(path: &Path, config: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut f, config)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// One census row: a final state and how many probes reached it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub rank: usize,
    pub count: usize,
    pub unconverged: usize,
    pub distance: Option<usize>,
    pub nearest_base: Option<usize>,
    pub state: String,
}

/// Census rows by rank, with distances when `bases` is non-empty.
pub fn census_rows(census: &RecallCensus, bases: &[BinaryState]) -> Result<Vec<CensusRow>> {
    census
        .ranked()
        .into_iter()
        .enumerate()
        .map(|(k, (s, e))| {
            let (distance, nearest_base) = if bases.is_empty() {
                (None, None)
            } else {
                let (d, b) = crate::experiments::distance_to_nearest_base(s, bases)?;
                (Some(d), Some(b))
            };
            Ok(CensusRow {
                rank: k + 1,
                count: e.count,
                unconverged: e.unconverged,
                distance,
                nearest_base,
                state: s.to_string(),
            })
        })
        .collect()
}

pub fn write_census<W: Write>(out: W, census: &RecallCensus, bases: &[BinaryState]) -> Result<()> {
    write_csv(out, &census_rows(census, bases)?)
}

/// Rebuilds counts from a census CSV. Sweep statistics are not stored and
/// come back as zero.
pub fn read_census<R: Read>(input: R) -> Result<RecallCensus> {
    let mut census = RecallCensus::default();
    let mut reader = csv::Reader::from_reader(input);
    for (k, row) in reader.deserialize::<CensusRow>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let state = parse_state(&row.state, line)?;
        if row.count == 0 || row.unconverged > row.count {
            return Err(parse_err(line, "inconsistent count/unconverged"));
        }
        census.total_probes += row.count;
        census.converged_probes += row.count - row.unconverged;
        let prev = census.counts.insert(
            state,
            CensusEntry {
                count: row.count,
                unconverged: row.unconverged,
            },
        );
        if prev.is_some() {
            return Err(parse_err(line, "duplicate state"));
        }
    }
    Ok(census)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub n_prototypes: usize,
    pub examples: usize,
    pub p: f64,
    pub confounders: usize,
    pub seed: u64,
    pub rank: usize,
    pub distance: usize,
    pub proportion: f64,
    pub converged_fraction: f64,
}

/// One row per reported top state.
pub fn experiment_rows(res: &ExperimentResult) -> Vec<ExperimentRow> {
    res.top_states
        .iter()
        .map(|t| ExperimentRow {
            n: res.dataset.n,
            n_prototypes: res.dataset.n_prototypes,
            examples: res.dataset.examples_per_prototype,
            p: res.dataset.bernoulli_p,
            confounders: res.dataset.n_confounders,
            seed: res.dataset.seed,
            rank: t.rank,
            distance: t.distance,
            proportion: t.proportion,
            converged_fraction: res.converged_fraction,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub class: String,
    /// Position of the state among the profiles written.
    pub state: usize,
    /// 0 is the lowest (most stable) neuron.
    pub neuron_rank: usize,
    pub energy: f64,
}

pub fn profile_rows(profiles: &[EnergyProfile]) -> Vec<ProfileRow> {
    profiles
        .iter()
        .enumerate()
        .flat_map(|(k, p)| {
            p.sorted_energies
                .iter()
                .enumerate()
                .map(move |(r, &e)| ProfileRow {
                    class: p.state_class.as_str().to_string(),
                    state: k,
                    neuron_rank: r,
                    energy: e,
                })
        })
        .collect()
}

/// Writes rows with a header. The header is written even with no rows.
pub fn write_csv<W: Write, T: Serialize + CsvSchema>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| parse_err(k + 2, e.to_string())))
        .collect()
}

/// Column names of each CSV schema.
pub trait CsvSchema {
    const COLUMNS: &'static [&'static str];
}

impl CsvSchema for TheoryRow {
    const COLUMNS: &'static [&'static str] = &["ratio", "subset_size", "p", "p_error"];
}

impl CsvSchema for ExperimentRow {
    const COLUMNS: &'static [&'static str] = &[
        "N",
        "n_prototypes",
        "examples",
        "p",
        "confounders",
        "seed",
        "rank",
        "distance",
        "proportion",
        "converged_fraction",
    ];
}

impl CsvSchema for ProfileRow {
    const COLUMNS: &'static [&'static str] = &["class", "state", "neuron_rank", "energy"];
}

impl CsvSchema for CensusRow {
    const COLUMNS: &'static [&'static str] =
        &["rank", "count", "unconverged", "distance", "nearest_base", "state"];
}
