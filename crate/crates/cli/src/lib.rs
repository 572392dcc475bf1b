//! Command implementations behind the `gate` binary.
//!
//! Each command returns a value instead of printing so the integration tests
//! can drive them directly; `main` only formats and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gate_core::io::{self, Comparison, RunManifest, RunSummary};
use gate_core::params::{load_checked, validate, Violation};
use gate_core::planner::optimizer::IterationRecord;
use gate_core::{
    solve_with, GateError, Mode, ParameterSet, Result, Solution, SolverSettings, ValidationMode,
};
use serde::Serialize;

/// Process exit status for a failed command.
pub fn exit_code(err: &GateError) -> i32 {
    match err {
        GateError::NonFinite { .. } => 2,
        _ => 1,
    }
}

/// Reads and validates a configuration document. Strict-range violations are
/// returned as warnings.
pub fn load_config(path: &Path) -> Result<(ParameterSet, Vec<Violation>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| GateError::Config(format!("cannot read {}: {e}", path.display())))?;
    load_checked(&text)
}

/// A finished solve together with its iteration log.
pub struct Run {
    pub params: ParameterSet,
    pub solution: Solution,
    pub diagnostics: Vec<IterationRecord>,
    pub manifest: RunManifest,
}

pub fn execute(
    params: &ParameterSet,
    mode: Mode,
    settings: &SolverSettings,
    start: Option<&[f64]>,
) -> Result<Run> {
    let started = io::unix_now();
    let mut diagnostics = Vec::new();
    let solution = solve_with(params, mode, settings, start, &mut |r| {
        tracing::trace!(
            iteration = r.iteration,
            value = r.value,
            grad = r.grad_norm,
            "iteration"
        );
        diagnostics.push(*r);
    })?;
    let manifest = RunManifest::new(params, &solution, started);
    Ok(Run {
        params: params.clone(),
        solution,
        diagnostics,
        manifest,
    })
}

/// Writes trajectory, manifest and diagnostics for `run` into `dir`.
pub fn persist(run: &Run, dir: &Path) -> Result<()> {
    io::write_run(
        dir,
        &run.manifest,
        &run.solution.plan(run.params.tau_plan),
        &run.diagnostics,
    )
}

pub fn cmd_run(config: &Path, mode: Mode, settings: &SolverSettings, out: &Path) -> Result<Run> {
    let (params, warnings) = load_config(config)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    let run = execute(&params, mode, settings, None)?;
    persist(&run, out)?;
    Ok(run)
}

/// Human-readable summary printed after a run.
pub fn format_summary(m: &RunManifest) -> String {
    let s: &RunSummary = &m.summary;
    let year = |y: Option<f64>| match y {
        Some(y) => format!("{y:.0}"),
        None => "not reached".into(),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run {} ({}): {} after {} iterations, V = {:.9}, |grad| = {:.3e}",
        m.run_id,
        m.mode.as_str(),
        if s.converged { "converged" } else { "stopped" },
        s.iterations,
        s.value,
        s.grad_norm
    );
    let _ = writeln!(out, "final automated fraction: {:.6}", s.final_f);
    let _ = writeln!(out, "f reaches 0.5: {}", year(s.year_f_half));
    let _ = writeln!(out, "f reaches 1.0: {}", year(s.year_f_full));
    match s.peak_growth {
        Some(g) => {
            let _ = writeln!(out, "peak annual output growth: {:.2}%", 100.0 * g);
        }
        None => {
            let _ = writeln!(out, "peak annual output growth: n/a");
        }
    }
    out
}

pub fn cmd_compare(dirs: &[PathBuf]) -> Result<Comparison> {
    let mut runs = Vec::with_capacity(dirs.len());
    for d in dirs {
        let stored = io::read_run(d)
            .map_err(|e| GateError::Config(format!("cannot read run in {}: {e}", d.display())))?;
        let label = d
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| stored.manifest.run_id.clone());
        runs.push((label, stored.trajectories));
    }
    // Distinct labels keep the table columns unambiguous.
    for i in 0..runs.len() {
        if runs[..i].iter().any(|r| r.0 == runs[i].0) {
            runs[i].0 = format!("{}#{i}", runs[i].0);
        }
    }
    io::compare(&runs)
}

/// Grid of sweep values: `a,b,c`, `lin:start:stop:n` or `log:start:stop:n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Grid> {
        let bad = || {
            GateError::Config(format!(
                "bad grid `{s}`: expected a,b,c or lin|log:start:stop:n"
            ))
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [kind @ ("lin" | "log"), a, b, n] => {
                let (a, b) = (num(a)?, num(b)?);
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                if *kind == "log" && (a <= 0.0 || b <= 0.0) {
                    return Err(GateError::Config(format!(
                        "log grid `{s}` needs positive bounds"
                    )));
                }
                (0..n)
                    .map(|i| {
                        let w = if n == 1 {
                            0.0
                        } else {
                            i as f64 / (n - 1) as f64
                        };
                        if *kind == "lin" {
                            a + w * (b - a)
                        } else {
                            10f64.powf(a.log10() + w * (b.log10() - a.log10()))
                        }
                    })
                    .collect()
            }
            [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
            _ => return Err(bad()),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(Grid(values))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub dir: PathBuf,
    pub summary: Option<RunSummary>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

pub struct SweepRequest<'a> {
    pub config: &'a Path,
    pub param: &'a str,
    pub grid: &'a Grid,
    pub mode: Mode,
    pub settings: SolverSettings,
    pub out: &'a Path,
    pub jobs: usize,
}

/// One solve per grid value. Points are split into contiguous chunks, one per
/// job; within a chunk each solve starts from the previous point's decisions.
pub fn cmd_sweep(req: &SweepRequest) -> Result<Vec<SweepPoint>> {
    let (base, _) = load_config(req.config)?;
    if base.get(req.param).is_none() {
        return Err(GateError::UnknownParameter(req.param.to_string()));
    }
    fs::create_dir_all(req.out)?;
    let values = &req.grid.0;
    let jobs = req.jobs.clamp(1, values.len().max(1));
    let chunk = values.len().div_ceil(jobs).max(1);

    let mut points: Vec<SweepPoint> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .enumerate()
            .map(|(c, vals)| {
                let base = &base;
                scope.spawn(move || {
                    let mut previous: Option<Vec<f64>> = None;
                    vals.iter()
                        .enumerate()
                        .map(|(j, v)| sweep_point(req, base, c * chunk + j, *v, &mut previous))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    points.sort_by_key(|p| p.index);
    io::write_atomic(
        &req.out.join("summary.csv"),
        sweep_csv(req.param, &points).as_bytes(),
    )?;
    Ok(points)
}

fn sweep_point(
    req: &SweepRequest,
    base: &ParameterSet,
    index: usize,
    value: f64,
    previous: &mut Option<Vec<f64>>,
) -> SweepPoint {
    let dir = req.out.join(format!("point-{index:03}"));
    let mut point = SweepPoint {
        index,
        value,
        dir: dir.clone(),
        summary: None,
        warnings: Vec::new(),
        error: None,
    };
    let outcome = base.with_field(req.param, value).and_then(|params| {
        let errors = validate(&params, ValidationMode::Permissive);
        if !errors.is_empty() {
            return Err(GateError::Invalid(errors));
        }
        point.warnings = validate(&params, ValidationMode::Strict)
            .iter()
            .map(|v| v.to_string())
            .collect();
        let run = execute(&params, req.mode, &req.settings, previous.as_deref())?;
        persist(&run, &dir)?;
        Ok(run)
    });
    match outcome {
        Ok(run) => {
            tracing::info!(index, value, "sweep point solved");
            point.summary = Some(run.manifest.summary.clone());
            *previous = Some(run.solution.x);
        }
        Err(e) => {
            tracing::warn!(index, value, error = %e, "sweep point failed");
            point.error = Some(e.to_string());
        }
    }
    point
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// Per-point headline metrics, one row per grid value.
pub fn sweep_csv(param: &str, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "index,{param},status,final_f,year_f_half,year_f_full,peak_growth,value,converged,iterations,error\n"
    );
    for p in points {
        match &p.summary {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{},{:.17e},ok,{:.17e},{},{},{},{:.17e},{},{},",
                    p.index,
                    p.value,
                    s.final_f,
                    opt(s.year_f_half),
                    opt(s.year_f_full),
                    opt(s.peak_growth),
                    s.value,
                    s.converged,
                    s.iterations
                );
            }
            None => {
                let msg = p.error.as_deref().unwrap_or("").replace('"', "'");
                let _ = writeln!(out, "{},{:.17e},failed,,,,,,,,\"{msg}\"", p.index, p.value);
            }
        }
    }
    out
}
