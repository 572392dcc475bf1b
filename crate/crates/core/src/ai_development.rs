//! Compute stock, hardware/software efficiency and the largest training run.

use serde::{Deserialize, Serialize};

use crate::error::{GateError, Result};
use crate::params::ParameterSet;
use crate::real::Real;

/// AI-side state at one timestep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputeState<R = f64> {
    /// Physical compute stock (FLOP/year).
    pub q: R,
    /// Hardware efficiency (FLOP/year/$).
    pub h: R,
    /// Software efficiency (eFLOP/FLOP).
    pub s: R,
    /// Usable effective compute (eFLOP/year).
    pub c: R,
    /// Largest training run (eFLOP).
    pub ct: R,
}

impl<R: Real> ComputeState<R> {
    pub fn values(&self) -> ComputeState<f64> {
        ComputeState {
            q: self.q.value(),
            h: self.h.value(),
            s: self.s.value(),
            c: self.c.value(),
            ct: self.ct.value(),
        }
    }
}

impl ComputeState<f64> {
    /// Initial state: effective compute covers the initial runtime budget plus
    /// one year's worth of the largest training run, and the physical stock is
    /// backed out of the heat-cap map.
    pub fn initial(p: &ParameterSet) -> ComputeState<f64> {
        let c = p.c_i0 + p.c_t0;
        let usable = c / p.s0;
        ComputeState {
            q: usable_inverse(usable, p.c_l),
            h: p.h0,
            s: p.s0,
            c,
            ct: p.c_t0,
        }
    }

    pub fn lift<R: Real>(&self) -> ComputeState<R> {
        ComputeState {
            q: R::constant(self.q),
            h: R::constant(self.h),
            s: R::constant(self.s),
            c: R::constant(self.c),
            ct: R::constant(self.ct),
        }
    }
}

/// Heat-capped usable compute `Q / (Q/C_L + 1)`.
pub fn usable_compute<R: Real>(q: R, c_l: f64) -> R {
    q / (q / c_l + 1.0)
}

/// Physical stock that yields `usable` after the heat cap.
pub fn usable_inverse(usable: f64, c_l: f64) -> f64 {
    usable * c_l / (c_l - usable)
}

/// Spending `I_Q` needed for effective compute investment `I_q` (forward cost formula).
pub fn compute_investment_cost(i_q: f64, q: f64, h: f64, a_q: f64, chi: f64) -> f64 {
    q / (chi * a_q * h) * ((a_q * i_q * h / q + 1.0).powf(chi) - 1.0)
}

/// Effective compute investment bought by spending `I_Q` under convex adjustment costs.
pub fn compute_effective_investment<R: Real>(i_big: R, q: R, h: R, a_q: f64, chi: f64) -> R {
    let inner = i_big * h * (chi * a_q) / q + 1.0;
    q / (h * a_q) * (inner.powf(1.0 / chi) - 1.0)
}

/// Checked `f64` entry point for [`compute_effective_investment`].
pub fn effective_compute_investment(i_big: f64, q: f64, h: f64, a_q: f64, chi: f64) -> Result<f64> {
    if !(i_big >= 0.0 && q > 0.0 && h > 0.0 && a_q > 0.0 && chi > 1.0) {
        return Err(GateError::Domain(format!(
            "compute investment requires I_Q >= 0, Q, H, a_Q > 0, chi > 1 (got {i_big}, {q}, {h}, {a_q}, {chi})"
        )));
    }
    Ok(compute_effective_investment(i_big, q, h, a_q, chi))
}

/// R&D law-of-motion constants for one efficiency series.
#[derive(Clone, Copy, Debug)]
pub struct EfficiencyLaw {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub level_init: f64,
    pub level_max: f64,
}

impl EfficiencyLaw {
    pub fn hardware(p: &ParameterSet) -> Self {
        EfficiencyLaw {
            theta: p.theta_h,
            phi: p.phi_h,
            lambda: p.lambda_h,
            level_init: p.h0,
            level_max: p.h_max,
        }
    }

    pub fn software(p: &ParameterSet) -> Self {
        EfficiencyLaw {
            theta: p.theta_s,
            phi: p.phi_s,
            lambda: p.lambda_s,
            level_init: p.s0,
            level_max: p.s_max,
        }
    }

    /// Unconstrained growth rate `θ · level^(−φ) · (I/ξ)^λ`.
    pub fn growth_rate<R: Real>(&self, level: R, investment: R, wedge: f64) -> R {
        let perceived = investment / wedge;
        if perceived.value() <= 0.0 {
            return R::constant(0.0);
        }
        level.powf(-self.phi) * perceived.powf(self.lambda) * self.theta
    }

    /// Ceiling factor Λ: 1 at the initial level, 0 at the ceiling.
    pub fn ceiling_factor<R: Real>(&self, level: R) -> R {
        let span = (self.level_max / self.level_init).ln();
        (level.ln().rsub(self.level_max.ln())) / span
    }

    /// Advances the level by `dt` with the growth rate held fixed over the step.
    ///
    /// The constrained law `d ln X/dt = g · (ln X_max − ln X) / span` is
    /// integrated exactly for constant `g`, so the gap to the ceiling in log
    /// space shrinks by `exp(−g·dt/span)` and the level can never reach it.
    pub fn step<R: Real>(&self, level: R, investment: R, dt: f64, wedge: f64) -> R {
        let g = self.growth_rate(level, investment, wedge);
        if g.value() == 0.0 {
            return level;
        }
        let span = (self.level_max / self.level_init).ln();
        let log_max = self.level_max.ln();
        let gap = level.ln().rsub(log_max);
        let new_gap = gap * (g * (-dt / span)).exp();
        new_gap.rsub(log_max).exp()
    }
}

/// Checked single efficiency step.
#[allow(clippy::too_many_arguments)]
pub fn step_efficiency(
    level: f64,
    investment: f64,
    theta: f64,
    phi: f64,
    lambda: f64,
    level_init: f64,
    level_max: f64,
    dt: f64,
    wedge: f64,
) -> Result<f64> {
    if !(level >= level_init * (1.0 - 1e-12) && level < level_max) {
        return Err(GateError::Domain(format!(
            "efficiency level {level} outside [{level_init}, {level_max})"
        )));
    }
    if !(investment >= 0.0 && dt > 0.0 && wedge > 0.0) {
        return Err(GateError::Domain(
            "negative R&D flow or non-positive dt".into(),
        ));
    }
    let law = EfficiencyLaw {
        theta,
        phi,
        lambda,
        level_init,
        level_max,
    };
    Ok(law.step(level, investment, dt, wedge))
}

/// Flows applied to the compute state within one period.
#[derive(Clone, Copy, Debug)]
pub struct ComputeFlows<R = f64> {
    /// Spending on compute hardware ($/year).
    pub compute_spend: R,
    pub hardware_rd: R,
    pub software_rd: R,
    /// Effective compute added to the largest training run this step (eFLOP).
    pub training: R,
}

/// One period of the compute dynamics: efficiencies, stock, identity, training run.
pub fn advance_compute<R: Real>(
    state: &ComputeState<R>,
    flows: &ComputeFlows<R>,
    p: &ParameterSet,
    dt: f64,
    wedge: f64,
) -> ComputeState<R> {
    let h = EfficiencyLaw::hardware(p).step(state.h, flows.hardware_rd, dt, wedge);
    let s = EfficiencyLaw::software(p).step(state.s, flows.software_rd, dt, wedge);
    let i_q = compute_effective_investment(flows.compute_spend, state.q, h, p.a_q, p.chi);
    let q = state.q + (i_q * h - state.q * p.delta_q) * dt;
    let c = usable_compute(q, p.c_l) * s;
    let ct = state.ct + flows.training;
    ComputeState { q, h, s, c, ct }
}

/// Checked `f64` wrapper for [`advance_compute`].
pub fn step_compute_state(
    state: &ComputeState<f64>,
    flows: &ComputeFlows<f64>,
    p: &ParameterSet,
    dt: f64,
) -> Result<ComputeState<f64>> {
    let f = flows;
    if !(f.compute_spend >= 0.0
        && f.hardware_rd >= 0.0
        && f.software_rd >= 0.0
        && f.training >= 0.0)
    {
        return Err(GateError::Domain(
            "compute flows must be non-negative".into(),
        ));
    }
    if !(dt > 0.0) {
        return Err(GateError::Domain("dt must be positive".into()));
    }
    Ok(advance_compute(state, flows, p, dt, 1.0))
}
