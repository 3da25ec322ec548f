//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use hopfield_prototypes::datagen::{self, DatasetConfig};
use hopfield_prototypes::experiments::{self, ExperimentResult, ProbeConfig, StateClass, DESK_PROBES};
use hopfield_prototypes::net;
use hopfield_prototypes::oracle;
use hopfield_prototypes::prototype;
use hopfield_prototypes::rng::{self, Purpose};
use hopfield_prototypes::theory::{self, CapacityQuery, StabilityQuery, HERTZ_P_ERROR};
use hopfield_prototypes::{hebbian, BinaryState, TrainingSet};

const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One-sided sign test: probability of at least `wins` successes among the
/// non-tied pairs under a fair coin.
fn sign_test(pairs: &[(f64, f64)], better: impl Fn(f64, f64) -> bool) -> (usize, usize, f64) {
    let decided: Vec<_> = pairs.iter().filter(|(a, b)| a != b).collect();
    let n = decided.len();
    let wins = decided.iter().filter(|(a, b)| better(*a, *b)).count();
    let mut tail = 0.0;
    for k in wins..=n {
        tail += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    (wins, n, if n == 0 { 1.0 } else { tail })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn run(cfg: &DatasetConfig, probes: usize) -> ExperimentResult {
    let ds = datagen::generate(cfg).expect("dataset");
    let probe = ProbeConfig {
        total_probes: probes,
        profiles: true,
        ..ProbeConfig::default()
    };
    experiments::run_experiment(&ds, &probe).expect("experiment")
}

fn hertz_baseline() -> Outcome {
    let start = Instant::now();
    let q = CapacityQuery::new(HERTZ_P_ERROR, 1, 0.0).unwrap();
    let ratio = theory::capacity_ratio(&q).unwrap();
    let elapsed = start.elapsed();
    outcome(
        (ratio - 0.138).abs() <= 0.001 && elapsed < Duration::from_secs(1),
        format!("ratio {ratio:.6}, {elapsed:?}"),
    )
}

fn formula_reduction() -> Outcome {
    let mut worst_p = 0.0f64;
    for t in 0..100 {
        let n = 50 + 10 * t;
        let k = 1 + (t * 7) % 60;
        let general = theory::p_error(&StabilityQuery::new(1, 0.0, n, k).unwrap()).unwrap();
        let single = theory::p_error_single(n, k).unwrap();
        worst_p = worst_p.max((general - single).abs());
    }
    let mut worst_erf = 0.0f64;
    for t in 0..=1200 {
        let x = -6.0 + t as f64 * 0.01;
        let d = (theory::erf(x).unwrap() - oracle::erf_by_quadrature(x).unwrap()).abs();
        worst_erf = worst_erf.max(d);
    }
    outcome(
        worst_p <= 1e-15 && worst_erf <= 1e-9,
        format!("max |p_error - single| {worst_p:.1e}, max |erf - quadrature| {worst_erf:.1e}"),
    )
}

fn theory_curve_shape() -> Outcome {
    let sizes = [4usize, 5, 6, 7, 8];
    let ps = [0.0, 0.1, 0.2, 0.3];
    let ratios = theory::linear_grid(0.01, 20.0, 4000);
    let rows = theory::theory_curve(&sizes, &ps, &ratios).unwrap();
    let crossings = theory::crossing_ratios(&rows, HERTZ_P_ERROR);
    let mut ordered = true;
    for &p in &ps {
        let xs: Vec<Option<f64>> = crossings.iter().filter(|c| c.1 == p).map(|c| c.2).collect();
        ordered &= xs.iter().all(Option::is_some) && xs.windows(2).all(|w| w[0] < w[1]);
    }

    let mut violations = 0usize;
    let pe = |s: usize, p: f64, r: f64| theory::p_error_ratio(s, p, r).unwrap();
    let ratio_grid = theory::linear_grid(0.001, 5.0, 200);
    let p_grid = theory::linear_grid(0.0, 0.49, 50);
    for s in 1..=10 {
        for &p in &p_grid {
            for w in ratio_grid.windows(2) {
                violations += usize::from(pe(s, p, w[0]) > pe(s, p, w[1]));
            }
        }
        for &r in &ratio_grid {
            for w in p_grid.windows(2) {
                violations += usize::from(pe(s, w[0], r) > pe(s, w[1], r));
            }
        }
    }
    for &p in &p_grid {
        for &r in &ratio_grid {
            for s in 1..10 {
                violations += usize::from(pe(s + 1, p, r) > pe(s, p, r));
            }
        }
    }
    let p01: Vec<String> = crossings
        .iter()
        .filter(|c| c.1 == 0.1)
        .map(|c| format!("{}:{:.3}", c.0, c.2.unwrap_or(f64::NAN)))
        .collect();
    outcome(
        ordered && violations == 0,
        format!("crossings at p=0.1 [{}], monotonicity violations {violations}", p01.join(" ")),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut endpoints = 0usize;
    let mut outside = 0usize;
    let mut on_edge = 0usize;
    for seed in 0..50u64 {
        let mut r = rng::stream(seed, Purpose::Bases, 0);
        let n = r.random_range(4..=12);
        let k = r.random_range(1..=4);
        let states: Vec<BinaryState> = (0..k).map(|_| datagen::random_state(n, &mut r)).collect();
        let w = hebbian(&TrainingSet::new(states).unwrap()).unwrap();
        let set = oracle::enumerate_stable(&w).unwrap();
        for probe in 0..200u64 {
            let s0 = datagen::random_state(n, &mut r);
            let res = net::relax(&w, &s0, seed * 1000 + probe, 100).unwrap();
            if !res.converged {
                continue;
            }
            endpoints += 1;
            match set.membership(&res.final_state) {
                oracle::Membership::Stable => {}
                oracle::Membership::ZeroFieldFixedPoint => on_edge += 1,
                oracle::Membership::Absent => outside += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        outside == 0 && endpoints > 0 && elapsed < Duration::from_secs(120),
        format!("{endpoints} endpoints, {on_edge} zero-field, {outside} outside, {elapsed:?}"),
    )
}

fn expectation_step() -> Outcome {
    let n = 200;
    let k = 500;
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for (t, &p) in [0.1, 0.2, 0.3].iter().enumerate() {
        let mut r = rng::stream(77 + t as u64, Purpose::Examples, 0);
        let base = datagen::random_state(n, &mut r);
        let subset: Vec<BinaryState> =
            (0..k).map(|_| datagen::noisy_copy(&base, p, &mut r).unwrap()).collect();
        let ts = TrainingSet::new(subset).unwrap();
        let rv = prototype::representative(&ts);
        let factor = prototype::agreement_factor(p).unwrap();
        let tol = oracle::three_sigma(factor, k);
        let mut within = 0;
        for _ in 0..100 {
            let j = r.random_range(0..n);
            let mut i = r.random_range(0..n - 1);
            if i >= j {
                i += 1;
            }
            let mc = oracle::mc_pairwise_factor(&ts, &rv, j, i).unwrap();
            within += usize::from((mc - factor).abs() <= tol);
        }
        let frac = within as f64 / 100.0;
        worst = worst.min(frac);
        parts.push(format!("p={p}: {within}/100"));
    }
    outcome(worst >= 0.95, parts.join(", "))
}

fn below_capacity_runs() -> (Vec<ExperimentResult>, Duration) {
    let start = Instant::now();
    let runs = (0..SEEDS)
        .map(|seed| run(&DatasetConfig::new(100, 1, 50, 0.1).with_seed(seed), DESK_PROBES))
        .collect();
    (runs, start.elapsed())
}

fn prototype_formation(runs: &[ExperimentResult], elapsed: Duration) -> Outcome {
    let mut d: Vec<f64> = runs.iter().map(|r| r.distance_most_recalled() as f64).collect();
    let mut p: Vec<f64> = runs.iter().map(|r| r.proportion_most_recalled).collect();
    let (md, mp) = (median(&mut d), median(&mut p));
    outcome(
        md == 0.0 && mp >= 0.9 && elapsed < Duration::from_secs(300),
        format!("median distance {md}, median proportion {mp:.4}, {elapsed:?}"),
    )
}

/// Share of probes ending in the reported top states.
fn top_coverage(r: &ExperimentResult) -> f64 {
    r.top_states.iter().map(|t| t.proportion).sum()
}

fn phase_contrast() -> Outcome {
    let mut cov = Vec::new();
    let mut dist = Vec::new();
    for seed in 0..SEEDS {
        let below = run(&DatasetConfig::new(100, 5, 20, 0.1).with_seed(seed), DESK_PROBES);
        let above = run(&DatasetConfig::new(100, 50, 20, 0.1).with_seed(seed), DESK_PROBES);
        cov.push((top_coverage(&below), top_coverage(&above)));
        dist.push((below.mean_top_distance(), above.mean_top_distance()));
    }
    let mean_of = |v: &[(f64, f64)], f: fn(&(f64, f64)) -> f64| mean(&v.iter().map(f).collect::<Vec<_>>());
    let (cb, ca) = (mean_of(&cov, |x| x.0), mean_of(&cov, |x| x.1));
    let (db, da) = (mean_of(&dist, |x| x.0), mean_of(&dist, |x| x.1));
    let (wc, nc, pc) = sign_test(&cov, |b, a| b > a);
    let (wd, nd, pd) = sign_test(&dist, |b, a| b < a);
    outcome(
        cb > ca && db < da && pc < 0.05 && pd < 0.05,
        format!(
            "proportion {cb:.3} vs {ca:.3} (sign {wc}/{nc}, p={pc:.4}); distance {db:.2} vs {da:.2} (sign {wd}/{nd}, p={pd:.4})"
        ),
    )
}

fn energy_signature(runs: &[ExperimentResult]) -> Outcome {
    let mut worst_recalled = f64::NEG_INFINITY;
    let mut learned = 0usize;
    let mut learned_positive = 0usize;
    for r in runs {
        for p in r.profiles_of(StateClass::MostRecalled) {
            worst_recalled = worst_recalled.max(p.max_energy());
        }
        for p in r.profiles_of(StateClass::Learned) {
            learned += 1;
            learned_positive += usize::from(p.positive_count() >= 1);
        }
    }
    outcome(
        worst_recalled < 0.0 && learned > 0 && learned_positive == learned,
        format!(
            "max most-recalled energy {worst_recalled:.3}, learned with a positive neuron {learned_positive}/{learned}"
        ),
    )
}

fn confounding_trend() -> Outcome {
    const TREND_SEEDS: u64 = 5;
    let examples = [10usize, 50, 200];
    let mut pass = true;
    let mut parts = Vec::new();
    for conf in [0usize, 250, 1000] {
        let mut ds = Vec::new();
        let mut ps = Vec::new();
        for &ex in &examples {
            let mut d = Vec::new();
            let mut p = Vec::new();
            for seed in 0..TREND_SEEDS {
                let cfg = DatasetConfig::new(250, 1, ex, 0.15)
                    .with_confounders(conf)
                    .with_seed(1000 + seed);
                let r = run(&cfg, DESK_PROBES);
                d.push(r.distance_most_recalled() as f64);
                p.push(r.proportion_most_recalled);
            }
            ds.push(median(&mut d));
            ps.push(median(&mut p));
        }
        pass &= ds.windows(2).all(|w| w[1] <= w[0]) && ps.windows(2).all(|w| w[1] >= w[0]);
        parts.push(format!(
            "c={conf}: d {:?} p [{}]",
            ds,
            ps.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn cli(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_hopfield-proto"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn cli");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.join(args[args.iter().position(|a| *a == "--out").unwrap() + 1])).unwrap()
}

/// Integer fields must match exactly; other numbers to 1e-12.
fn same_csv(a: &[u8], b: &[u8]) -> bool {
    let (a, b) = (String::from_utf8_lossy(a), String::from_utf8_lossy(b));
    let (la, lb): (Vec<_>, Vec<_>) = (a.lines().collect(), b.lines().collect());
    la.len() == lb.len()
        && la.iter().zip(&lb).all(|(x, y)| {
            let (fx, fy): (Vec<_>, Vec<_>) = (x.split(',').collect(), y.split(',').collect());
            fx.len() == fy.len()
                && fx.iter().zip(&fy).all(|(u, v)| match (u.parse::<i64>(), v.parse::<i64>()) {
                    (Ok(i), Ok(j)) => i == j,
                    _ => match (u.parse::<f64>(), v.parse::<f64>()) {
                        (Ok(f), Ok(g)) => (f - g).abs() <= 1e-12 * f.abs().max(1.0),
                        _ => u == v,
                    },
                })
        })
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["experiment", "--n", "60", "--prototypes", "3", "--examples", "10", "--seed", "5", "--probes", "2000", "--out", "x.csv"],
        &["profile", "--n", "40", "--examples", "20", "--seed", "6", "--probes", "1000", "--out", "x.csv"],
        &["grid", "--ns", "40", "--alphas", "0.05,0.5", "--examples", "5", "--ps", "0.1", "--probes", "500", "--out", "x.csv"],
        &["theory-curve", "--steps", "50", "--out", "x.csv"],
    ];
    let mut same = 0;
    for args in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        same += usize::from(same_csv(&cli(args, a.path()), &cli(args, b.path())));
    }
    outcome(same == runs.len(), format!("{same}/{} commands reproduced", runs.len()))
}

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |name: &str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    };
    report("hertz baseline", hertz_baseline());
    report("formula reduction", formula_reduction());
    report("theory curve shape", theory_curve_shape());
    report("oracle equivalence", oracle_equivalence());
    report("expectation step", expectation_step());
    let (runs, elapsed) = below_capacity_runs();
    report("prototype formation below capacity", prototype_formation(&runs, elapsed));
    report("phase contrast", phase_contrast());
    report("energy profile signature", energy_signature(&runs));
    report("confounding trend", confounding_trend());
    report("determinism", determinism());
    println!("acceptance: {failed} failed, {:?}", start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
