//! Post-solve checks against local optima and utility-curvature artefacts.

use serde::{Deserialize, Serialize};

use super::{
    optimizer, warm_start_shares, Layout, Mode, Problem, Solution, SolverSettings, Utility, BLOCK,
};
use crate::error::Result;
use crate::params::ParameterSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Objective of the full solution.
    pub full_value: f64,
    /// Objective of the competing schedule, under the original utility.
    pub alternative_value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Re-solves with one decision point per automation phase and requires the
/// full solution to do at least as well.
pub fn sanity_check_simple_policy(p: &ParameterSet, full: &Solution) -> Result<CheckReport> {
    let settings = full.settings;
    let problem = Problem {
        layout: Layout::Phases,
        ..Problem::new(p, Mode::Deterministic)?
    };
    // Seed each phase with the full solution's first decision in that phase.
    let mut x0 = problem.warm_start();
    let mut seeded = [false; 3];
    let rows = &full.trajectories[0].rows;
    for (t, row) in rows.iter().enumerate() {
        let phase = if row.f <= p.f_init + 1e-12 {
            0
        } else if row.f < 1.0 - 1e-12 {
            1
        } else {
            2
        };
        if !seeded[phase] {
            seeded[phase] = true;
            let src = &full.x[t * BLOCK * full.info.len()..][..BLOCK];
            x0[phase * BLOCK..(phase + 1) * BLOCK].copy_from_slice(src);
        }
    }
    let out = optimizer::maximize(
        |x| problem.centered_value_and_gradient(x),
        x0,
        problem.offset(),
        &settings,
        &mut |_| {},
    )?;
    let tolerance = settings.check_tolerance * full.value.abs();
    let passed = full.value >= out.value - tolerance;
    Ok(CheckReport {
        name: "simple_policy".into(),
        passed,
        full_value: full.value,
        alternative_value: out.value,
        tolerance,
        detail: if passed {
            format!(
                "phase policy reached {} after {} iterations",
                out.value, out.iterations
            )
        } else {
            "the main solver may have converged to a suboptimal local optimum".into()
        },
    })
}

/// Consumption above which the spliced utility switches to its log tail.
pub fn splice_threshold(p: &ParameterSet) -> f64 {
    1e3 * warm_start_shares(p).output[0] * p.y0 / p.l0
}

/// Re-solves with a log tail spliced onto utility above [`splice_threshold`]
/// and requires that schedule not to beat the full solution under the
/// original utility.
pub fn sanity_check_spliced_utility(p: &ParameterSet, full: &Solution) -> Result<CheckReport> {
    let settings: SolverSettings = full.settings;
    let original = Problem::new(p, Mode::Deterministic)?;
    let spliced = Problem {
        utility: Utility::Spliced {
            eta: p.eta,
            threshold: splice_threshold(p),
        },
        ..original.clone()
    };
    let out = optimizer::maximize(
        |x| spliced.centered_value_and_gradient(x),
        full.x.clone(),
        spliced.offset(),
        &settings,
        &mut |_| {},
    )?;
    let alternative = original.objective(&out.x);
    let tolerance = settings.check_tolerance * full.value.abs();
    let passed = alternative <= full.value + tolerance;
    Ok(CheckReport {
        name: "spliced_utility".into(),
        passed,
        full_value: full.value,
        alternative_value: alternative,
        tolerance,
        detail: if passed {
            format!(
                "spliced objective {} after {} iterations",
                out.value, out.iterations
            )
        } else {
            "the spliced-utility schedule beats the full solution under the original utility".into()
        },
    })
}
