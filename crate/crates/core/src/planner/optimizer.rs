//! Limited-memory BFGS ascent with a backtracking Armijo line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{GateError, Result};

/// Stopping rules and memory size for the optimiser.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Stop once the gradient max-norm falls below `tolerance · |V|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of curvature pairs kept by L-BFGS.
    pub history: usize,
    /// Relative slack allowed by the sanity checks.
    pub check_tolerance: f64,
    /// Starting points tried by a solve; the best optimum wins.
    pub starts: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-9,
            max_iterations: 20_000,
            history: 100,
            check_tolerance: 1e-5,
            starts: 3,
        }
    }
}

/// One accepted optimiser step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Why the loop ended.
    pub status: String,
}

/// Consecutive accepted steps without a change in value before giving up.
const STALL_LIMIT: usize = 50;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximises `f`, which returns the value and gradient at a point.
///
/// `f` may drop an additive constant from its value so that line-search
/// comparisons keep full precision; `offset` adds it back for the stopping
/// rule and for everything reported.
pub fn maximize<F>(
    mut f: F,
    x0: Vec<f64>,
    offset: f64,
    settings: &SolverSettings,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut v, mut g) = f(&x);
    if !v.is_finite() || g.iter().any(|d| !d.is_finite()) {
        return Err(GateError::NonFinite {
            iteration: 0,
            detail: format!("objective {v} at the starting point"),
        });
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = String::from("iteration limit reached");
    let mut converged = false;
    let mut iter = 0;
    let mut flat = 0;
    progress(&IterationRecord {
        iteration: 0,
        value: v + offset,
        grad_norm: max_norm(&g),
        step: 0.0,
    });

    while iter < settings.max_iterations {
        let gnorm = max_norm(&g);
        if gnorm <= settings.tolerance * (v + offset).abs().max(1e-300) {
            converged = true;
            status = "gradient tolerance reached".into();
            break;
        }

        // Two-loop recursion on the ascent direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        let scale = match mem.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / dot(&g, &g).sqrt(),
        };
        for qi in q.iter_mut() {
            *qi *= scale;
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let mut d = q;
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            mem.clear();
            let s = 1.0 / dot(&g, &g).sqrt();
            d = g.iter().map(|gi| gi * s).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (tv, tg) = f(&trial);
            if tv.is_finite() && tg.iter().all(|t| t.is_finite()) && tv >= v + 1e-4 * step * slope {
                accepted = Some((trial, tv, tg));
                break;
            }
            step *= 0.5;
        }
        let Some((nx, nv, ng)) = accepted else {
            if mem.is_empty() {
                status = "line search failed".into();
                break;
            }
            mem.clear();
            continue;
        };

        iter += 1;
        let s: Vec<f64> = nx.iter().zip(&x).map(|(a, b)| a - b).collect();
        // Curvature of −V: y = ∇(−V)_new − ∇(−V)_old.
        let y: Vec<f64> = g.iter().zip(&ng).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            mem.push_back((s, y, 1.0 / sy));
            if mem.len() > settings.history {
                mem.pop_front();
            }
        }
        let stalled = nv - v <= 4.0 * f64::EPSILON * v.abs();
        flat = if stalled { flat + 1 } else { 0 };
        x = nx;
        v = nv;
        g = ng;
        progress(&IterationRecord {
            iteration: iter,
            value: v + offset,
            grad_norm: max_norm(&g),
            step,
        });
        if stalled && (mem.is_empty() || flat >= STALL_LIMIT) {
            status = "no further improvement".into();
            break;
        }
    }

    let grad_norm = max_norm(&g);
    if !converged && grad_norm <= settings.tolerance * (v + offset).abs().max(1e-300) {
        converged = true;
        status = "gradient tolerance reached".into();
    }
    Ok(Outcome {
        x,
        value: v + offset,
        grad: g,
        grad_norm,
        iterations: iter,
        converged,
        status,
    })
}
