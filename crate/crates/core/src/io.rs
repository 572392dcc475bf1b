//! Run artefacts: trajectory tables, manifests, diagnostics and comparisons.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GateError, Result};
use crate::params::ParameterSet;
use crate::planner::{IterationRecord, Mode, Row, Solution, SolverSettings, Trajectory};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";

/// Trajectory table columns, in order.
pub const COLUMNS: [&str; 26] = [
    "year",
    "scenario_id",
    "scenario_prob",
    "Y",
    "growth",
    "c",
    "f",
    "C",
    "CT",
    "Q",
    "H",
    "S",
    "K",
    "s_consumption",
    "s_capital",
    "s_compute",
    "s_hardware_rd",
    "s_software_rd",
    "s_training",
    "s_inference",
    "L",
    "T",
    "training_rate",
    "inference_allocated",
    "info_state",
    "utility",
];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Cells of one row in [`COLUMNS`] order; `None` marks the undefined first growth rate.
fn row_cells(r: &Row) -> [Option<f64>; 26] {
    let mut cells = [None; 26];
    let values = [
        Some(r.year),
        Some(r.scenario_id as f64),
        Some(r.scenario_prob),
        Some(r.y),
        r.growth,
        Some(r.c),
        Some(r.f),
        Some(r.compute),
        Some(r.ct),
        Some(r.q),
        Some(r.h),
        Some(r.s),
        Some(r.k),
    ];
    cells[..13].copy_from_slice(&values);
    for (i, v) in r.output_shares.iter().chain(&r.compute_shares).enumerate() {
        cells[13 + i] = Some(*v);
    }
    cells[20..].copy_from_slice(&[
        Some(r.labor),
        Some(r.composite),
        Some(r.training_rate),
        Some(r.inference_allocated),
        Some(r.info_state as f64),
        Some(r.utility),
    ]);
    cells
}

/// Renders trajectories as CSV, one row per (scenario, year).
pub fn trajectory_csv(trajectories: &[Trajectory]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for t in trajectories {
        for r in &t.rows {
            let cells: Vec<String> = row_cells(r)
                .iter()
                .enumerate()
                .map(|(i, c)| match (i, c) {
                    (1 | 24, Some(v)) => format!("{}", *v as u64),
                    (_, Some(v)) => num(*v),
                    (_, None) => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// The trajectory table as a JSON-friendly document with the CSV's columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn trajectory_table(trajectories: &[Trajectory]) -> TrajectoryTable {
    TrajectoryTable {
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: trajectories
            .iter()
            .flat_map(|t| t.rows.iter().map(|r| row_cells(r).to_vec()))
            .collect(),
    }
}

/// Parses a table written by [`trajectory_csv`] back into per-scenario trajectories.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<Trajectory>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(GateError::Config(
            "trajectory table has unexpected columns".into(),
        ));
    }
    let mut out: Vec<Trajectory> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| GateError::Config(format!("column {}: {e}", COLUMNS[i])))
        };
        let id: usize = rec[1]
            .parse()
            .map_err(|e| GateError::Config(format!("scenario_id: {e}")))?;
        let row = Row {
            year: f(0)?,
            scenario_id: id,
            scenario_prob: f(2)?,
            y: f(3)?,
            growth: if rec[4].is_empty() { None } else { Some(f(4)?) },
            c: f(5)?,
            f: f(6)?,
            compute: f(7)?,
            ct: f(8)?,
            q: f(9)?,
            h: f(10)?,
            s: f(11)?,
            k: f(12)?,
            output_shares: [f(13)?, f(14)?, f(15)?, f(16)?, f(17)?],
            compute_shares: [f(18)?, f(19)?],
            labor: f(20)?,
            composite: f(21)?,
            training_rate: f(22)?,
            inference_allocated: f(23)?,
            info_state: rec[24]
                .parse()
                .map_err(|e| GateError::Config(format!("info_state: {e}")))?,
            utility: f(25)?,
        };
        match out.iter_mut().find(|t| t.scenario_id == id) {
            Some(t) => t.rows.push(row),
            None => out.push(Trajectory {
                scenario_id: id,
                prob: row.scenario_prob,
                zeta: f64::NAN,
                value: f64::NAN,
                rows: vec![row],
            }),
        }
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> GateError {
    GateError::Config(format!("malformed trajectory table: {e}"))
}

/// Probability-weighted mean of each headline series per year.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub years: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
}

pub const HEADLINE_SERIES: [&str; 17] = [
    "Y",
    "growth",
    "c",
    "f",
    "C",
    "CT",
    "Q",
    "H",
    "S",
    "K",
    "s_consumption",
    "s_capital",
    "s_compute",
    "s_hardware_rd",
    "s_software_rd",
    "s_training",
    "s_inference",
];

fn headline_value(r: &Row, name: &str) -> f64 {
    match name {
        "Y" => r.y,
        "growth" => r.growth.unwrap_or(f64::NAN),
        "c" => r.c,
        "f" => r.f,
        "C" => r.compute,
        "CT" => r.ct,
        "Q" => r.q,
        "H" => r.h,
        "S" => r.s,
        "K" => r.k,
        "s_consumption" => r.output_shares[0],
        "s_capital" => r.output_shares[1],
        "s_compute" => r.output_shares[2],
        "s_hardware_rd" => r.output_shares[3],
        "s_software_rd" => r.output_shares[4],
        "s_training" => r.compute_shares[0],
        "s_inference" => r.compute_shares[1],
        _ => f64::NAN,
    }
}

pub fn headline(trajectories: &[Trajectory]) -> Headline {
    let len = trajectories.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    let years = trajectories
        .first()
        .map(|t| t.rows[..len].iter().map(|r| r.year).collect())
        .unwrap_or_default();
    let series = HEADLINE_SERIES
        .iter()
        .map(|name| {
            let vals = (0..len)
                .map(|i| {
                    trajectories
                        .iter()
                        .map(|t| t.prob * headline_value(&t.rows[i], name))
                        .sum()
                })
                .collect();
            (name.to_string(), vals)
        })
        .collect();
    Headline { years, series }
}

/// Headline numbers printed after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_f: f64,
    pub year_f_half: Option<f64>,
    pub year_f_full: Option<f64>,
    pub peak_growth: Option<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

pub fn summarize(solution: &Solution, tau_plan: usize) -> RunSummary {
    let h = headline(&solution.plan(tau_plan));
    let get = |n: &str| {
        &h.series
            .iter()
            .find(|s| s.0 == n)
            .expect("headline series")
            .1
    };
    let f = get("f");
    let first_at = |x: f64| f.iter().position(|v| *v >= x - 1e-12).map(|i| h.years[i]);
    let peak = get("growth")
        .iter()
        .copied()
        .filter(|g| g.is_finite())
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))));
    RunSummary {
        final_f: f.last().copied().unwrap_or(f64::NAN),
        year_f_half: first_at(0.5),
        year_f_full: first_at(1.0),
        peak_growth: peak,
        value: solution.value,
        converged: solution.converged,
        iterations: solution.iterations,
        grad_norm: solution.grad_norm,
    }
}

/// Identity of a run: everything that determines its outputs.
#[derive(Serialize)]
struct RunKey<'a> {
    params: &'a ParameterSet,
    mode: Mode,
    settings: &'a SolverSettings,
}

pub fn run_hash(params: &ParameterSet, mode: Mode, settings: &SolverSettings) -> String {
    let key = RunKey {
        params,
        mode,
        settings,
    };
    sha256_hex(
        serde_json::to_string(&key)
            .expect("serialisable")
            .as_bytes(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub hash: String,
    pub mode: Mode,
    pub settings: SolverSettings,
    pub params: ParameterSet,
    pub started_at: u64,
    pub finished_at: u64,
    pub outputs: Vec<String>,
    pub summary: RunSummary,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(params: &ParameterSet, solution: &Solution, started_at: u64) -> Self {
        let hash = run_hash(params, solution.mode, &solution.settings);
        RunManifest {
            run_id: hash[..16].to_string(),
            hash,
            mode: solution.mode,
            settings: solution.settings,
            params: params.clone(),
            started_at,
            finished_at: unix_now(),
            outputs: vec![
                TRAJECTORY_FILE.into(),
                MANIFEST_FILE.into(),
                DIAGNOSTICS_FILE.into(),
            ],
            summary: summarize(solution, params.tau_plan),
        }
    }
}

/// Writes `contents` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn diagnostics_jsonl(records: &[IterationRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("serialisable") + "\n")
        .collect()
}

/// Writes the three run artefacts into `dir`.
pub fn write_run(
    dir: &Path,
    manifest: &RunManifest,
    plan: &[Trajectory],
    diagnostics: &[IterationRecord],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(TRAJECTORY_FILE), trajectory_csv(plan).as_bytes())?;
    write_atomic(
        &dir.join(DIAGNOSTICS_FILE),
        diagnostics_jsonl(diagnostics).as_bytes(),
    )?;
    write_atomic(
        &dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(manifest)?.as_bytes(),
    )?;
    Ok(())
}

/// A completed run loaded from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub trajectories: Vec<Trajectory>,
}

pub fn read_run(dir: &Path) -> Result<StoredRun> {
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let trajectories = parse_trajectory_csv(&fs::read_to_string(dir.join(TRAJECTORY_FILE))?)?;
    Ok(StoredRun {
        dir: dir.to_path_buf(),
        manifest,
        trajectories,
    })
}

/// One headline series across runs, with pairwise differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    pub name: String,
    /// One column per run.
    pub values: Vec<Vec<f64>>,
    /// `(i, j, values[j] − values[i])` for every pair `i < j`.
    pub differences: Vec<(usize, usize, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub runs: Vec<String>,
    pub years: Vec<f64>,
    pub series: Vec<SeriesComparison>,
    pub warnings: Vec<String>,
}

/// Aligns the headline series of several runs on the common horizon.
pub fn compare(runs: &[(String, Vec<Trajectory>)]) -> Result<Comparison> {
    if runs.len() < 2 {
        return Err(GateError::Config(
            "comparison needs at least two runs".into(),
        ));
    }
    let heads: Vec<Headline> = runs.iter().map(|(_, t)| headline(t)).collect();
    let len = heads.iter().map(|h| h.years.len()).min().unwrap_or(0);
    let mut warnings = Vec::new();
    if heads.iter().any(|h| h.years.len() != len) {
        warnings.push(format!(
            "runs have different horizons; comparison truncated to {len} years"
        ));
    }
    let series = HEADLINE_SERIES
        .iter()
        .enumerate()
        .map(|(si, name)| {
            let values: Vec<Vec<f64>> = heads
                .iter()
                .map(|h| h.series[si].1[..len].to_vec())
                .collect();
            let mut differences = Vec::new();
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    let d = values[i]
                        .iter()
                        .zip(&values[j])
                        .map(|(a, b)| b - a)
                        .collect();
                    differences.push((i, j, d));
                }
            }
            SeriesComparison {
                name: name.to_string(),
                values,
                differences,
            }
        })
        .collect();
    Ok(Comparison {
        runs: runs.iter().map(|r| r.0.clone()).collect(),
        years: heads[0].years[..len].to_vec(),
        series,
        warnings,
    })
}

impl Comparison {
    /// Wide CSV: `year`, then `<series>[<run>]` per run and `<series>[<j>-<i>]` per pair.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["year".to_string()];
        for s in &self.series {
            for r in &self.runs {
                header.push(format!("{}[{}]", s.name, r));
            }
            for (i, j, _) in &s.differences {
                header.push(format!("{}[{}-{}]", s.name, self.runs[*j], self.runs[*i]));
            }
        }
        let mut out = header.join(",") + "\n";
        for (t, year) in self.years.iter().enumerate() {
            let mut cells = vec![num(*year)];
            for s in &self.series {
                cells.extend(s.values.iter().map(|v| fmt_cell(v[t])));
                cells.extend(s.differences.iter().map(|d| fmt_cell(d.2[t])));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn fmt_cell(v: f64) -> String {
    if v.is_finite() {
        num(v)
    } else {
        String::new()
    }
}
