//! Extensive and intensive margins of automation.
//!
//! The automation function maps frontier capability (effective compute of
//! the largest training run, scaled up by maximal inference) to the fraction
//! of tasks AI can perform. It is log-linear between `T / 10^Δ` and `T`,
//! flat at `f_init` below and capped at the plateau `ζ` above.

use serde::{Deserialize, Serialize};

use crate::error::{GateError, Result};
use crate::params::BeliefCandidate;
use crate::real::{max_c, min_c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomationFunction {
    pub f_init: f64,
    /// Training requirement for full automation (eFLOP).
    pub t_agi: f64,
    /// FLOP gap in orders of magnitude.
    pub delta_flop: f64,
    /// Plateau level; 1 for the true function.
    pub zeta: f64,
}

impl AutomationFunction {
    pub fn new(f_init: f64, t_agi: f64, delta_flop: f64, zeta: f64) -> Self {
        AutomationFunction {
            f_init,
            t_agi,
            delta_flop,
            zeta,
        }
    }

    /// Same ramp with a different plateau.
    pub fn with_plateau(&self, zeta: f64) -> Self {
        AutomationFunction { zeta, ..*self }
    }

    /// Log10 of the capability at which automation starts to rise.
    pub fn ramp_start_log10(&self) -> f64 {
        self.t_agi.log10() - self.delta_flop
    }

    /// Unplateaued ramp value, clamped to `[f_init, 1]`.
    pub fn ramp_from_log10<R: Real>(&self, log_c: R) -> R {
        let x = (log_c - self.ramp_start_log10()) * ((1.0 - self.f_init) / self.delta_flop)
            + self.f_init;
        min_c(max_c(x, self.f_init), 1.0)
    }

    pub fn fraction_from_log10<R: Real>(&self, log_c: R) -> R {
        min_c(self.ramp_from_log10(log_c), self.zeta)
    }

    /// `f(C)` for capability `C` (eFLOP).
    pub fn fraction_automatable(&self, capability: f64) -> f64 {
        self.fraction_from_log10(capability.log10())
    }

    /// Highest value the function attains.
    pub fn sup(&self) -> f64 {
        self.zeta.min(1.0)
    }

    /// Log10 of the smallest capability that automates task `i`, for `f_init < i <= sup`.
    pub fn inverse_log10<R: Real>(&self, i: R) -> R {
        (i - self.f_init) * (self.delta_flop / (1.0 - self.f_init)) + self.ramp_start_log10()
    }

    /// Least capability at which task `i` is automatable: 0 for tasks already
    /// automatable at the start, `+∞` for tasks beyond the plateau.
    pub fn inverse_automation(&self, i: f64) -> f64 {
        if i <= self.f_init {
            0.0
        } else if i > self.sup() {
            f64::INFINITY
        } else {
            10f64.powf(self.inverse_log10(i))
        }
    }
}

/// Capability of a model trained with `ct` eFLOP when run at inference multiplier `iota`.
pub fn capability_with_inference<R: Real>(ct: R, iota: f64, m: f64) -> R {
    ct * iota.powf(1.0 / m)
}

/// Runtime-cost constants shared by every task.
#[derive(Clone, Copy, Debug)]
pub struct RuntimeCost {
    pub gamma0: f64,
    pub gamma1: f64,
    pub m: f64,
    pub iota_max: f64,
}

impl RuntimeCost {
    /// Log10 runtime requirement for task `i` given log10 of the training run.
    ///
    /// `f_inv_log10` is `None` for tasks automatable from the start.
    pub fn log10_requirement<R: Real>(&self, i: R, log_ct: R, f_inv_log10: Option<R>) -> R {
        let base = i * self.gamma1 + self.gamma0;
        match f_inv_log10 {
            Some(li) => base + max_c(li - log_ct, 0.0) * self.m,
            None => base,
        }
    }
}

/// Runtime compute (eFLOP/year) one digital worker needs on task `i`.
pub fn runtime_requirement(
    i: f64,
    ct: f64,
    af: &AutomationFunction,
    gamma0: f64,
    gamma1: f64,
    m: f64,
    iota_max: f64,
) -> Result<f64> {
    let f = af.fraction_automatable(capability_with_inference(ct, iota_max, m));
    if !(0.0..=1.0).contains(&i) || i > f {
        return Err(GateError::InfeasibleTask(i));
    }
    let rc = RuntimeCost {
        gamma0,
        gamma1,
        m,
        iota_max,
    };
    let f_inv = (i > af.f_init).then(|| af.inverse_log10(i));
    Ok(10f64.powf(rc.log10_requirement(i, ct.log10(), f_inv)))
}

/// Number of digital workers that `runtime` eFLOP/year sustain at requirement `requirement`.
pub fn digital_workers(runtime: f64, requirement: f64) -> f64 {
    runtime / requirement
}

/// The planner's beliefs about which automation function is true.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub candidates: Vec<BeliefCandidate>,
    pub surviving: Vec<bool>,
}

impl BeliefState {
    pub fn new(candidates: &[BeliefCandidate]) -> Self {
        BeliefState {
            candidates: candidates.to_vec(),
            surviving: vec![true; candidates.len()],
        }
    }

    /// Prior probabilities renormalised over the survivors.
    pub fn probs(&self) -> Vec<f64> {
        let total: f64 = self
            .candidates
            .iter()
            .zip(&self.surviving)
            .filter(|(_, s)| **s)
            .map(|(c, _)| c.prob)
            .sum();
        self.candidates
            .iter()
            .zip(&self.surviving)
            .map(|(c, s)| if *s { c.prob / total } else { 0.0 })
            .collect()
    }

    /// Survivors as a bitmask (bit `i` set when candidate `i` survives).
    pub fn mask(&self) -> u64 {
        self.surviving
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Conditions on an observation of the true function.
    ///
    /// A candidate is ruled out once the observed automation fraction lies
    /// strictly above its plateau, or once capability has passed the point at
    /// which the ramp would have exceeded the candidate's plateau while the
    /// observed fraction stayed below it.
    pub fn update_beliefs(
        &self,
        af: &AutomationFunction,
        capability: f64,
        f_observed: f64,
    ) -> Result<BeliefState> {
        let ramp = af.with_plateau(1.0).fraction_automatable(capability);
        let surviving: Vec<bool> = self
            .candidates
            .iter()
            .zip(&self.surviving)
            .map(|(c, &s)| {
                let predicted = ramp.min(c.zeta);
                s && (predicted - f_observed).abs() <= 1e-12
            })
            .collect();
        if !surviving.iter().any(|s| *s) {
            return Err(GateError::InconsistentBeliefs);
        }
        Ok(BeliefState {
            candidates: self.candidates.clone(),
            surviving,
        })
    }
}

/// Midpoint quadrature nodes on the unit task interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGrid {
    pub worker_nodes: Vec<f64>,
    pub worker_weights: Vec<f64>,
    pub labor_nodes: Vec<f64>,
    pub labor_weights: Vec<f64>,
}

fn midpoints(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / n as f64;
    ((0..n).map(|j| (j as f64 + 0.5) * h).collect(), vec![h; n])
}

impl TaskGrid {
    pub fn new(workers: usize, labor: usize) -> Self {
        let (worker_nodes, worker_weights) = midpoints(workers);
        let (labor_nodes, labor_weights) = midpoints(labor);
        TaskGrid {
            worker_nodes,
            worker_weights,
            labor_nodes,
            labor_weights,
        }
    }

    /// Quadrature `(node, weight)` pairs covering the automated tasks `[0, f]`.
    ///
    /// The interval splits at `f_init`: tasks below it are cheap from the
    /// start, tasks above it carry the inference multiplier. Each piece gets
    /// `n` midpoint nodes that stretch with `f`, so the integral moves
    /// continuously as automation advances.
    pub fn automated_nodes<R: Real>(n: usize, f: R, f_init: f64) -> Vec<(R, R, bool)> {
        let mut out = Vec::with_capacity(2 * n);
        let h = 1.0 / n as f64;
        for j in 0..n {
            let x = (j as f64 + 0.5) * h;
            out.push((R::constant(x * f_init), R::constant(f_init * h), false));
        }
        let width = f - f_init;
        if width.value() > 0.0 {
            for j in 0..n {
                let x = (j as f64 + 0.5) * h;
                out.push((width * x + f_init, width * h, true));
            }
        }
        out
    }
}
