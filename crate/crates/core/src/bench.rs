//! Channel generation and batch experiments.
//!
//! Channels come from ChaCha20 (a counter-based generator) seeded with
//! the experiment seed, so a seed always yields the same matrix on every
//! platform. An experiment solves every `(seed, P)` pair of its spec and
//! records one row per pair; the rows are written as CSV and as
//! line-delimited JSON together with a mean/median summary.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, ProblemInstance};
use crate::oracle::grid_certify;
use crate::sit::{sit_solve, SolverConfig};

/// `k` channel vectors of length `m` with i.i.d. CN(0, 1) entries.
pub fn generate_channels(k: usize, m: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid deviation");
    (0..k)
        .map(|_| (0..m).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect())
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn default_mu() -> f64 {
    0.0
}

fn default_pc() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub seeds: Vec<u64>,
    #[serde(rename = "P_dB")]
    pub p_db: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(rename = "Pc", default = "default_pc")]
    pub pc: f64,
    /// Defaults to unit weights.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Defaults to no rate floors.
    #[serde(rename = "Rth", default)]
    pub rate_floors: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Grid resolution of the oracle; no oracle when absent.
    #[serde(default)]
    pub oracle_resolution: Option<usize>,
    /// Solve instances concurrently.
    #[serde(default)]
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(Error::Config("K and M must be at least 1".into()));
        }
        if let Some(bad) = self.p_db.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("power grid entry {bad} is not finite")));
        }
        self.solver.validate()
    }

    /// The instance of one `(seed, P)` pair.
    pub fn instance(&self, seed: u64, p_db: f64) -> Result<ProblemInstance> {
        Ok(ProblemInstance::new(
            generate_channels(self.k, self.m, seed),
            db_to_linear(p_db),
            self.weights.clone().unwrap_or_else(|| vec![1.0; self.k]),
            self.mu,
            self.pc,
            self.rate_floors.clone().unwrap_or_else(|| vec![0.0; self.k]),
        )?)
    }
}

/// One solved instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    pub mode: Mode,
    /// Solver status, or `solver-failure` / `error` when the run aborted.
    pub status: String,
    pub objective_bits: Option<f64>,
    pub nodes: u64,
    pub reductions_empty: u64,
    pub time_ms: f64,
    pub oracle_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean and median of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMedian {
    pub mean: f64,
    pub median: f64,
}

impl MeanMedian {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Self { mean: v.iter().sum::<f64>() / n as f64, median })
    }
}

/// Aggregate over the instances solved to optimality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(rename = "K")]
    pub k: usize,
    pub mode: Mode,
    pub instances: usize,
    pub solved: usize,
    pub time_ms: Option<MeanMedian>,
    pub nodes: Option<MeanMedian>,
}

impl Summary {
    pub fn from_rows(k: usize, mode: Mode, rows: &[BenchRow]) -> Self {
        let solved: Vec<&BenchRow> = rows.iter().filter(|r| r.status == "optimal").collect();
        let times: Vec<f64> = solved.iter().map(|r| r.time_ms).collect();
        let nodes: Vec<f64> = solved.iter().map(|r| r.nodes as f64).collect();
        Self {
            k,
            mode,
            instances: rows.len(),
            solved: solved.len(),
            time_ms: MeanMedian::of(&times),
            nodes: MeanMedian::of(&nodes),
        }
    }
}

/// Mean / median layout, e.g. `K = 2 (unicast-only)  0.175 s / 0.099 s`.
impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K = {} ({}), {}/{} solved", self.k, self.mode, self.solved, self.instances)?;
        if let (Some(t), Some(n)) = (self.time_ms, self.nodes) {
            write!(
                f,
                ": {:.3} s / {:.3} s, nodes {:.1} / {:.1}",
                t.mean / 1e3,
                t.median / 1e3,
                n.mean,
                n.median
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<BenchRow>,
    pub summary: Summary,
}

fn run_one(spec: &ExperimentSpec, seed: u64, p_db: f64) -> BenchRow {
    let mut row = BenchRow {
        seed,
        k: spec.k,
        m: spec.m,
        p_db,
        mode: spec.mode,
        status: "error".into(),
        objective_bits: None,
        nodes: 0,
        reductions_empty: 0,
        time_ms: 0.0,
        oracle_bits: None,
        error: None,
    };
    let inst = match spec.instance(seed, p_db) {
        Ok(inst) => inst,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let config = spec.solver.clone().with_mode(spec.mode);
    let started = Instant::now();
    match sit_solve(&inst, &config) {
        Ok(result) => {
            row.time_ms = started.elapsed().as_secs_f64() * 1e3;
            row.status = result.status.as_str().into();
            row.objective_bits = result.objective;
            row.nodes = result.stats.nodes;
            row.reductions_empty = result.stats.reductions_empty;
        }
        Err(e) => {
            row.time_ms = started.elapsed().as_secs_f64() * 1e3;
            row.status = match e {
                Error::Conic(_) => "solver-failure".into(),
                _ => "error".into(),
            };
            row.error = Some(e.to_string());
        }
    }
    if let Some(resolution) = spec.oracle_resolution.filter(|_| spec.k <= 3) {
        match grid_certify(&inst, resolution, spec.mode) {
            Ok(cert) => row.oracle_bits = cert.value,
            Err(e) => {
                let note = format!("oracle: {e}");
                row.error = Some(row.error.map_or(note.clone(), |prev| format!("{prev}; {note}")));
            }
        }
    }
    row
}

/// Solves every `(seed, P)` pair of `spec`, seeds outermost. Failing
/// instances are recorded and the run continues.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let pairs: Vec<(u64, f64)> = spec.seeds.iter().flat_map(|&s| spec.p_db.iter().map(move |&p| (s, p))).collect();
    let rows: Vec<BenchRow> = if spec.parallel {
        pairs.par_iter().map(|&(s, p)| run_one(spec, s, p)).collect()
    } else {
        pairs.iter().map(|&(s, p)| run_one(spec, s, p)).collect()
    };
    let summary = Summary::from_rows(spec.k, spec.mode, &rows);
    Ok(ExperimentResult { rows, summary })
}

/// The fixed CSV layout.
#[derive(Serialize)]
struct CsvRow<'a> {
    seed: u64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "P_dB")]
    p_db: f64,
    mode: &'a str,
    status: &'a str,
    objective_bits: Option<f64>,
    nodes: u64,
    reductions_empty: u64,
    time_ms: f64,
    oracle_bits: Option<f64>,
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            seed: r.seed,
            k: r.k,
            m: r.m,
            p_db: r.p_db,
            mode: r.mode.as_str(),
            status: &r.status,
            objective_bits: r.objective_bits,
            nodes: r.nodes,
            reductions_empty: r.reductions_empty,
            time_ms: r.time_ms,
            oracle_bits: r.oracle_bits,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `results.csv`, `results.jsonl` and `summary.json` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&result.rows, fs::File::create(dir.join("results.csv"))?)?;
    write_jsonl(&result.rows, std::io::BufWriter::new(fs::File::create(dir.join("results.jsonl"))?))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_are_deterministic() {
        assert_eq!(generate_channels(2, 2, 42), generate_channels(2, 2, 42));
        assert_ne!(generate_channels(2, 2, 42), generate_channels(2, 2, 43));
        let h = generate_channels(1, 4, 7);
        assert_eq!((h.len(), h[0].len()), (1, 4));
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        let h = generate_channels(1, 100_000, 3);
        let mean = h[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
        let re_mean = h[0].iter().map(|z| z.re).sum::<f64>() / 1e5;
        assert!(re_mean.abs() < 0.01);
    }

    #[test]
    fn mean_median() {
        let mm = MeanMedian::of(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!((mm.mean, mm.median), (4.0, 2.5));
        assert_eq!(MeanMedian::of(&[]), None);
    }

    fn spec(seeds: Vec<u64>, p_db: Vec<f64>) -> ExperimentSpec {
        serde_json::from_value(serde_json::json!({
            "K": 2, "M": 2, "seeds": seeds, "P_dB": p_db, "mode": "unicast-only",
            "solver": { "epsilon": 1e-6, "eta": 0.01, "max_iter": 100000 }
        }))
        .unwrap()
    }

    #[test]
    fn one_row_per_seed_and_power() {
        let result = run_experiment(&spec(vec![1, 2], vec![-10.0, 0.0, 10.0])).unwrap();
        assert_eq!(result.rows.len(), 6);
        assert_eq!(result.summary.instances, 6);
        assert!(result.rows.iter().all(|r| r.status == "optimal"), "{:?}", result.rows);
        let keys: Vec<(u64, f64)> = result.rows.iter().map(|r| (r.seed, r.p_db)).collect();
        assert_eq!(keys[..3], [(1, -10.0), (1, 0.0), (1, 10.0)]);
    }

    #[test]
    fn reruns_reproduce_the_table() {
        let s = spec(vec![5], vec![0.0, 5.0]);
        let strip = |mut rows: Vec<BenchRow>| {
            rows.iter_mut().for_each(|r| r.time_ms = 0.0);
            rows
        };
        let a = strip(run_experiment(&s).unwrap().rows);
        let b = strip(run_experiment(&s).unwrap().rows);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_header_is_fixed() {
        let result = run_experiment(&spec(vec![1], vec![0.0])).unwrap();
        let mut buf = Vec::new();
        write_csv(&result.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "seed,K,M,P_dB,mode,status,objective_bits,nodes,reductions_empty,time_ms,oracle_bits"
        );
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn bad_power_grid_is_rejected() {
        let mut s = spec(vec![1], vec![0.0]);
        s.p_db[0] = f64::NAN;
        assert!(run_experiment(&s).is_err());
    }
}
