//! Social planner: decision encoding, trajectory rollout, objective and solver.
//!
//! Each decision point holds seven unconstrained logits: five for the split
//! of output (consumption, capital, compute hardware, hardware R&D, software
//! R&D) and two for the split of effective compute (training, inference).
//! Shares are their normalised exponentials.
//!
//! Under automation uncertainty the planner keeps one decision point per
//! timestep and information state, the set of automation functions still
//! consistent with what has been observed. Scenarios sharing a surviving set
//! at a timestep read the same decision point.

pub mod checks;
pub mod optimizer;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ai_development::{advance_compute, ComputeFlows, ComputeState};
use crate::autodiff;
use crate::automation::AutomationFunction;
use crate::economy::{Economy, Shares};
use crate::error::{GateError, Result};
use crate::params::{BeliefCandidate, ParameterSet};
use crate::real::{max_c, Real};

pub use optimizer::{IterationRecord, SolverSettings};

/// Logits per decision point.
pub const BLOCK: usize = 7;

/// First calendar year of every trajectory.
pub const START_YEAR: f64 = 2024.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(alias = "det")]
    Deterministic,
    /// Optimise under the R&D wedge, then re-simulate under the true laws.
    #[serde(alias = "ext")]
    Externality,
    /// Optimise the expected objective over the belief family.
    #[serde(alias = "unc")]
    Uncertainty,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Deterministic => "deterministic",
            Mode::Externality => "externality",
            Mode::Uncertainty => "uncertainty",
        }
    }
}

impl FromStr for Mode {
    type Err = GateError;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "det" | "deterministic" => Ok(Mode::Deterministic),
            "ext" | "externality" => Ok(Mode::Externality),
            "unc" | "uncertainty" => Ok(Mode::Uncertainty),
            other => Err(GateError::Config(format!(
                "unknown mode `{other}` (expected det, ext or unc)"
            ))),
        }
    }
}

/// Seven logits for one timestep and information state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub output_logits: [f64; 5],
    pub compute_logits: [f64; 2],
}

fn softmax<R: Real, const N: usize>(z: &[R]) -> [R; N] {
    let top = z.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.value()));
    let e: Vec<R> = z.iter().map(|x| (*x - top).exp()).collect();
    let total = e.iter().skip(1).fold(e[0], |acc, x| acc + *x);
    std::array::from_fn(|i| e[i] / total)
}

/// Shares encoded by a block of seven logits.
pub fn decode<R: Real>(block: &[R]) -> Shares<R> {
    Shares {
        output: softmax::<R, 5>(&block[..5]),
        compute: softmax::<R, 2>(&block[5..7]),
    }
}

impl DecisionPoint {
    pub fn from_slice(x: &[f64]) -> Self {
        DecisionPoint {
            output_logits: std::array::from_fn(|i| x[i]),
            compute_logits: [x[5], x[6]],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.output_logits
            .iter()
            .chain(&self.compute_logits)
            .copied()
            .collect()
    }

    pub fn from_shares(s: &Shares<f64>) -> Self {
        DecisionPoint {
            output_logits: s.output.map(f64::ln),
            compute_logits: s.compute.map(f64::ln),
        }
    }

    pub fn decode(&self) -> Shares<f64> {
        decode(&self.to_vec())
    }
}

/// Shares implied by the initial spending flows: observed R&D and compute
/// spending, enough capital investment to offset depreciation, consumption
/// as the residual; compute split in proportion to the initial training run
/// and runtime compute.
pub fn warm_start_shares(p: &ParameterSet) -> Shares<f64> {
    let ik = p.delta_k * p.k0;
    let capital = crate::economy::capital_investment_cost(ik, p.k0, p.a_k) / p.y0;
    let compute = p.i_q0 / p.y0;
    let hardware = p.i_h0 / p.y0;
    let software = p.i_s0 / p.y0;
    let consumption = 1.0 - capital - compute - hardware - software;
    let total = p.c_i0 + p.c_t0;
    Shares {
        output: [consumption, capital, compute, hardware, software],
        compute: [p.c_t0 / total, p.c_i0 / total],
    }
}

/// Surviving-candidate sets reachable along any capability path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationStructure {
    pub zetas: Vec<f64>,
    pub probs: Vec<f64>,
    /// Bitmask of survivors for each information state; state 0 is the prior.
    pub states: Vec<u64>,
}

impl InformationStructure {
    pub fn deterministic() -> Self {
        Self::new(&[BeliefCandidate {
            zeta: 1.0,
            prob: 1.0,
        }])
    }

    /// Survivor sets are upper sets `{i : ζ_i ≥ x}` while the truth is still
    /// on the common ramp, and singletons once the truth has plateaued.
    pub fn new(candidates: &[BeliefCandidate]) -> Self {
        let zetas: Vec<f64> = candidates.iter().map(|c| c.zeta).collect();
        let probs: Vec<f64> = candidates.iter().map(|c| c.prob).collect();
        let n = zetas.len();
        let mut states = Vec::new();
        let mut sorted = zetas.clone();
        sorted.sort_by(f64::total_cmp);
        for z in &sorted {
            states.push(Self::upper_set(&zetas, *z));
        }
        for k in 0..n {
            let s = 1u64 << k;
            if !states.contains(&s) {
                states.push(s);
            }
        }
        InformationStructure {
            zetas,
            probs,
            states,
        }
    }

    fn upper_set(zetas: &[f64], x: f64) -> u64 {
        zetas
            .iter()
            .enumerate()
            .filter(|(_, z)| **z >= x)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Survivors in scenario `k` once the ramp (unplateaued function) reads `ramp`.
    pub fn mask(&self, k: usize, ramp: f64) -> u64 {
        if ramp > self.zetas[k] {
            1 << k
        } else {
            Self::upper_set(&self.zetas, ramp)
        }
    }

    pub fn state_index(&self, mask: u64) -> usize {
        self.states
            .iter()
            .position(|s| *s == mask)
            .expect("every reachable survivor set is enumerated")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Period utility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Utility {
    Crra {
        eta: f64,
    },
    /// CRRA below `threshold`, log tail above it with matching value and slope.
    Spliced {
        eta: f64,
        threshold: f64,
    },
}

fn is_log(eta: f64) -> bool {
    (eta - 1.0).abs() < 1e-9
}

/// CRRA utility without its additive constant `−1/(1−η)`.
fn crra_centered<R: Real>(c: R, eta: f64) -> R {
    if is_log(eta) {
        c.ln()
    } else {
        c.powf(1.0 - eta) / (1.0 - eta)
    }
}

impl Utility {
    pub fn eval<R: Real>(&self, c: R) -> R {
        self.eval_centered(c) + self.constant()
    }

    /// The additive constant of the utility function.
    pub fn constant(&self) -> f64 {
        match *self {
            Utility::Crra { eta } | Utility::Spliced { eta, .. } => {
                if is_log(eta) {
                    0.0
                } else {
                    -1.0 / (1.0 - eta)
                }
            }
        }
    }

    /// Utility minus [`Utility::constant`]. Near saturation the constant
    /// dominates, so differences are formed on this part.
    pub fn eval_centered<R: Real>(&self, c: R) -> R {
        match *self {
            Utility::Crra { eta } => crra_centered(c, eta),
            Utility::Spliced { eta, threshold } => {
                if c.value() <= threshold {
                    crra_centered(c, eta)
                } else {
                    (c / threshold).ln() * threshold.powf(1.0 - eta) + crra_centered(threshold, eta)
                }
            }
        }
    }
}

/// How decision points are looked up during a rollout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// One point per timestep and information state.
    Schedule,
    /// One point per automation phase: `f = f_init`, ramp, full automation.
    Phases,
}

/// One exported timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub year: f64,
    pub scenario_id: usize,
    pub scenario_prob: f64,
    pub y: f64,
    pub growth: Option<f64>,
    pub c: f64,
    pub f: f64,
    pub compute: f64,
    pub ct: f64,
    pub q: f64,
    pub h: f64,
    pub s: f64,
    pub k: f64,
    pub output_shares: [f64; 5],
    pub compute_shares: [f64; 2],
    pub labor: f64,
    pub composite: f64,
    /// Effective compute spent on training per year.
    pub training_rate: f64,
    /// Runtime compute actually allocated to digital workers.
    pub inference_allocated: f64,
    pub info_state: usize,
    pub utility: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario_id: usize,
    pub prob: f64,
    pub zeta: f64,
    pub value: f64,
    pub rows: Vec<Row>,
}

/// A fully specified planning problem: objective as a function of the logits.
#[derive(Clone, Debug)]
pub struct Problem {
    pub economy: Economy,
    pub af: AutomationFunction,
    pub info: InformationStructure,
    pub wedge: f64,
    pub utility: Utility,
    pub horizon: usize,
    pub layout: Layout,
    /// Floor applied to per-capita consumption inside utility only.
    pub c_floor: f64,
}

impl Problem {
    /// Problem optimised in `mode`; externality mode carries the wedge.
    pub fn new(p: &ParameterSet, mode: Mode) -> Result<Problem> {
        let info = match mode {
            Mode::Uncertainty => InformationStructure::new(&p.belief_spec),
            _ => InformationStructure::deterministic(),
        };
        if info.zetas.len() > 63 {
            return Err(GateError::Config("too many belief candidates".into()));
        }
        let s0 = warm_start_shares(p);
        Ok(Problem {
            economy: Economy::new(p)?,
            af: p.automation_function(),
            info,
            wedge: if mode == Mode::Externality { p.xi } else { 1.0 },
            utility: Utility::Crra { eta: p.eta },
            horizon: p.tau_optim,
            layout: Layout::Schedule,
            c_floor: 1e-12 * s0.output[0] * p.y0 / p.l0,
        })
    }

    pub fn params(&self) -> &ParameterSet {
        &self.economy.params
    }

    pub fn blocks(&self) -> usize {
        match self.layout {
            Layout::Schedule => self.horizon * self.info.len(),
            Layout::Phases => 3,
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks() * BLOCK
    }

    /// Every block set to the warm-start shares.
    pub fn warm_start(&self) -> Vec<f64> {
        let point = DecisionPoint::from_shares(&warm_start_shares(self.params())).to_vec();
        point.iter().copied().cycle().take(self.dim()).collect()
    }

    /// Discounted sum of the utility constant over the horizon; the objective
    /// equals `centered_objective + offset`.
    pub fn offset(&self) -> f64 {
        let p = self.params();
        let r = p.beta - p.g_l;
        let weights: f64 = (0..self.horizon)
            .map(|t| p.dt * (-r * t as f64 * p.dt).exp())
            .sum();
        weights * self.utility.constant()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.centered_objective(x) + self.offset()
    }

    /// Objective without the utility constant. Same gradient, more digits.
    pub fn centered_objective(&self, x: &[f64]) -> f64 {
        self.run(x, None)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = self.centered_value_and_gradient(x);
        (v + self.offset(), g)
    }

    pub fn centered_value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        autodiff::gradient(x, |v| self.run(v, None))
    }

    /// Objective plus one trajectory per scenario.
    pub fn simulate(&self, x: &[f64]) -> (f64, Vec<Trajectory>) {
        let mut out = Vec::new();
        let v = self.run(x, Some(&mut out));
        (v + self.offset(), out)
    }

    fn block_index(&self, t: usize, scenario: usize, ramp: f64, f: f64) -> usize {
        match self.layout {
            Layout::Schedule => {
                let s = self.info.state_index(self.info.mask(scenario, ramp));
                t * self.info.len() + s
            }
            Layout::Phases => {
                if f <= self.af.f_init + 1e-12 {
                    0
                } else if f < 1.0 - 1e-12 {
                    1
                } else {
                    2
                }
            }
        }
    }

    fn run<R: Real>(&self, x: &[R], mut sink: Option<&mut Vec<Trajectory>>) -> R {
        assert_eq!(x.len(), self.dim(), "decision vector has the wrong length");
        let p = self.params();
        let e = &self.economy;
        let dt = p.dt;
        let r = p.beta - p.g_l;
        let iota_log = p.iota_max.log10() / p.m;
        let mut total = R::constant(0.0);

        for k in 0..self.info.zetas.len() {
            let af = self.af.with_plateau(self.info.zetas[k]);
            let prob = self.info.probs[k];
            let mut capital = R::constant(p.k0);
            let mut compute: ComputeState<R> = ComputeState::initial(p).lift();
            let mut labor = p.l0;
            let mut value = R::constant(0.0);
            let mut rows = Vec::new();
            let mut prev_y: Option<f64> = None;

            for t in 0..self.horizon {
                let cap_log = compute.ct.value().log10() + iota_log;
                let ramp = self.af.ramp_from_log10(cap_log);
                let f_now = af.fraction_from_log10(cap_log);
                let b = self.block_index(t, k, ramp, f_now);
                let shares = decode(&x[b * BLOCK..(b + 1) * BLOCK]);
                let per = e.period(&af, capital, labor, &compute, &shares);
                let u = self
                    .utility
                    .eval_centered(max_c(per.consumption, self.c_floor));
                let weight = dt * (-r * t as f64 * dt).exp();
                value = value + u * weight;

                if sink.is_some() {
                    let y = per.output.value();
                    let cv = compute.values();
                    let sv = shares.values();
                    let w: f64 = {
                        let nodes = crate::automation::TaskGrid::automated_nodes(
                            p.task_grid_workers,
                            per.f.value(),
                            af.f_init,
                        );
                        nodes
                            .iter()
                            .zip(&per.fill.inference)
                            .map(|(n, c)| n.1 * c)
                            .sum()
                    };
                    rows.push(Row {
                        year: START_YEAR + t as f64 * dt,
                        scenario_id: k,
                        scenario_prob: prob,
                        y,
                        growth: prev_y.map(|py| (y / py).powf(1.0 / dt) - 1.0),
                        c: per.consumption.value(),
                        f: per.f.value(),
                        compute: cv.c,
                        ct: cv.ct,
                        q: cv.q,
                        h: cv.h,
                        s: cv.s,
                        k: capital.value(),
                        output_shares: sv.output,
                        compute_shares: sv.compute,
                        labor,
                        composite: per.composite.value(),
                        training_rate: per.training.value() / dt,
                        inference_allocated: w,
                        info_state: b % self.info.len().max(1),
                        utility: u.value() + self.utility.constant(),
                    });
                    prev_y = Some(y);
                }

                let flows = ComputeFlows {
                    compute_spend: per.compute_spend,
                    hardware_rd: per.hardware_rd,
                    software_rd: per.software_rd,
                    training: per.training,
                };
                compute = advance_compute(&compute, &flows, p, dt, self.wedge);
                capital = e.step_capital(capital, per.capital_spend);
                labor *= (p.g_l * dt).exp();
            }

            if let Some(out) = sink.as_deref_mut() {
                out.push(Trajectory {
                    scenario_id: k,
                    prob,
                    zeta: self.info.zetas[k],
                    value: value.value() + self.offset(),
                    rows,
                });
            }
            total = total + value * prob;
        }
        total
    }

    /// Decision points of a schedule-layout vector keyed by (timestep, survivor mask).
    pub fn schedule(&self, x: &[f64]) -> DecisionSchedule {
        let n = self.info.len();
        DecisionSchedule {
            horizon: self.horizon,
            states: self.info.states.clone(),
            points: (0..self.blocks())
                .map(|b| DecisionPoint::from_slice(&x[b * BLOCK..(b + 1) * BLOCK]))
                .collect(),
            layout_states: n,
        }
    }
}

/// Decision points indexed by timestep and information state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionSchedule {
    pub horizon: usize,
    /// Survivor bitmask of each information state.
    pub states: Vec<u64>,
    pub points: Vec<DecisionPoint>,
    layout_states: usize,
}

impl DecisionSchedule {
    pub fn point(&self, t: usize, state: usize) -> &DecisionPoint {
        &self.points[t * self.layout_states + state]
    }
}

/// Result of a solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub mode: Mode,
    pub settings: SolverSettings,
    pub x: Vec<f64>,
    /// Objective of the reported trajectories (true laws in externality mode).
    pub value: f64,
    /// Objective the optimiser maximised.
    pub optimized_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    /// Full-horizon trajectories, one per scenario.
    pub trajectories: Vec<Trajectory>,
    pub schedule: DecisionSchedule,
    pub info: InformationStructure,
}

impl Solution {
    /// Trajectories truncated to the planning horizon.
    pub fn plan(&self, tau_plan: usize) -> Vec<Trajectory> {
        self.trajectories
            .iter()
            .map(|t| Trajectory {
                rows: t.rows.iter().take(tau_plan).cloned().collect(),
                ..t.clone()
            })
            .collect()
    }
}

/// `∂V/∂x` for the problem of `mode`, by reverse accumulation.
pub fn gradient(x: &[f64], p: &ParameterSet, mode: Mode) -> Result<(f64, Vec<f64>)> {
    Ok(Problem::new(p, mode)?.value_and_gradient(x))
}

/// Solves `p` in `mode` from the warm start.
pub fn solve(p: &ParameterSet, mode: Mode, settings: &SolverSettings) -> Result<Solution> {
    solve_with(p, mode, settings, None, &mut |_| {})
}

/// Spacing of the training logit between default starting points. Larger
/// offsets front-load training, so full automation arrives earlier.
const START_SHIFT: f64 = 2.0;

/// Candidate starting points, best guess first: an explicit start, then in
/// externality mode the deterministic optimum, then shifted warm starts.
fn starting_points(
    problem: &Problem,
    p: &ParameterSet,
    mode: Mode,
    settings: &SolverSettings,
    start: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>> {
    let n = settings.starts.max(1);
    let mut points: Vec<Vec<f64>> = start
        .filter(|x| x.len() == problem.dim())
        .map(<[f64]>::to_vec)
        .into_iter()
        .collect();
    if mode == Mode::Externality && points.len() < n {
        let det = solve_with(p, Mode::Deterministic, settings, None, &mut |_| {})?;
        if det.x.len() == problem.dim() {
            points.push(det.x);
        }
    }
    let warm = problem.warm_start();
    let mut k = 0;
    while points.len() < n {
        let mut x = warm.clone();
        for block in x.chunks_mut(BLOCK) {
            block[5] += START_SHIFT * k as f64;
        }
        points.push(x);
        k += 1;
    }
    Ok(points)
}

/// Solves from each starting point and keeps the highest optimised value.
/// Progress reports the running best, so values never decrease; iteration
/// numbers count across starts.
pub fn solve_with(
    p: &ParameterSet,
    mode: Mode,
    settings: &SolverSettings,
    start: Option<&[f64]>,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<Solution> {
    let problem = Problem::new(p, mode)?;
    let mut best: Option<optimizer::Outcome> = None;
    let mut failure = None;
    let mut best_seen = f64::NEG_INFINITY;
    let mut done = 0;
    for x0 in starting_points(&problem, p, mode, settings, start)? {
        let mut forward = |r: &IterationRecord| {
            if r.value >= best_seen {
                best_seen = r.value;
                progress(&IterationRecord {
                    iteration: done + r.iteration,
                    ..*r
                });
            }
        };
        match optimizer::maximize(
            |x| problem.centered_value_and_gradient(x),
            x0,
            problem.offset(),
            settings,
            &mut forward,
        ) {
            Ok(out) => {
                done += out.iterations + 1;
                if best.as_ref().is_none_or(|b| out.value > b.value) {
                    best = Some(out);
                }
            }
            Err(e) => {
                tracing::warn!(mode = mode.as_str(), error = %e, "start abandoned");
                failure.get_or_insert(e);
            }
        }
    }
    let out = match (best, failure) {
        (Some(out), _) => out,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one starting point"),
    };
    tracing::debug!(
        mode = mode.as_str(),
        iterations = out.iterations,
        value = out.value,
        grad_norm = out.grad_norm,
        status = %out.status,
        "solve finished"
    );

    let reporting = if mode == Mode::Externality {
        Problem {
            wedge: 1.0,
            ..problem.clone()
        }
    } else {
        problem.clone()
    };
    let (value, trajectories) = reporting.simulate(&out.x);
    if !value.is_finite() {
        return Err(GateError::NonFinite {
            iteration: out.iterations,
            detail: "re-simulated objective is not finite".into(),
        });
    }
    Ok(Solution {
        mode,
        settings: *settings,
        schedule: problem.schedule(&out.x),
        info: problem.info.clone(),
        x: out.x,
        value,
        optimized_value: out.value,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        converged: out.converged,
        status: out.status,
        trajectories,
    })
}
