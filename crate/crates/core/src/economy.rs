//! Production side: task composite, output, capital accumulation and the
//! within-period allocation of labour and runtime compute.

use serde::{Deserialize, Serialize};

use crate::ai_development::ComputeState;
use crate::automation::{capability_with_inference, AutomationFunction, RuntimeCost, TaskGrid};
use crate::error::{GateError, Result};
use crate::params::{LaborMode, ParameterSet};
use crate::real::Real;

const LN10: f64 = std::f64::consts::LN_10;

/// `(Σ w_j x_j^ρ)^(1/ρ)`; zero if any input is zero.
pub fn ces_composite<R: Real>(inputs: &[R], weights: &[f64], rho: f64) -> R {
    if inputs.iter().any(|x| x.value() <= 0.0) {
        return R::constant(0.0);
    }
    let mut sum = R::constant(0.0);
    for (x, w) in inputs.iter().zip(weights) {
        sum = sum + x.powf(rho) * *w;
    }
    sum.powf(1.0 / rho)
}

/// `A · T^(1−α−μ) · K^α · F^μ`.
pub fn produce<R: Real>(a: f64, t: R, k: R, f: f64, alpha: f64, mu: f64) -> R {
    t.powf(1.0 - alpha - mu) * k.powf(alpha) * (a * f.powf(mu))
}

/// Effective capital investment bought by spending `I_K` with quadratic adjustment costs.
pub fn capital_investment<R: Real>(i_big: R, k: R, a_k: f64) -> R {
    // Rationalised root of I_K = I_k + a_K I_k² / (2K); stable as a_K → 0.
    let disc = (i_big * (2.0 * a_k) / k + 1.0).sqrt();
    i_big * 2.0 / (disc + 1.0)
}

pub fn capital_effective_investment(i_big: f64, k: f64, a_k: f64) -> Result<f64> {
    if !(i_big >= 0.0 && k > 0.0 && a_k >= 0.0) {
        return Err(GateError::Domain(format!(
            "capital investment requires I_K >= 0, K > 0, a_K >= 0 (got {i_big}, {k}, {a_k})"
        )));
    }
    Ok(capital_investment(i_big, k, a_k))
}

/// Spending needed for effective capital investment `i_k`.
pub fn capital_investment_cost(i_k: f64, k: f64, a_k: f64) -> f64 {
    i_k + a_k * i_k * i_k / (2.0 * k)
}

/// Human labour per task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaborAllocation {
    pub automated: f64,
    pub non_automated: f64,
}

pub fn allocate_labor(l_total: f64, f: f64, mode: LaborMode) -> LaborAllocation {
    match mode {
        LaborMode::PerfectReallocation => LaborAllocation {
            automated: 0.0,
            non_automated: if f < 1.0 { l_total / (1.0 - f) } else { 0.0 },
        },
        LaborMode::NoReallocation => LaborAllocation {
            automated: l_total,
            non_automated: l_total,
        },
    }
}

/// Labour density on each node of a grid (automated nodes are those below `f`).
pub fn labor_on_grid(nodes: &[f64], l_total: f64, f: f64, mode: LaborMode) -> Vec<f64> {
    let a = allocate_labor(l_total, f, mode);
    nodes
        .iter()
        .map(|&i| if i < f { a.automated } else { a.non_automated })
        .collect()
}

/// Solution of the runtime-compute allocation across automated tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct WaterFill {
    /// Runtime compute per unit task measure on each node (eFLOP/year).
    pub inference: Vec<f64>,
    /// Common task-input level scale `k`: active nodes get `k · R_j^(1/(ρ−1))`.
    pub level: f64,
    pub active: Vec<bool>,
}

/// Allocates `budget` over nodes with weights `w`, runtime requirements `r`
/// and human labour `l` to maximise `Σ w_j (l_j + c_j / r_j)^ρ` subject to
/// `Σ w_j c_j = budget`, `c_j ≥ 0`.
pub fn water_fill(budget: f64, w: &[f64], r: &[f64], l: &[f64], rho: f64) -> WaterFill {
    let n = w.len();
    if budget <= 0.0 || n == 0 {
        return WaterFill {
            inference: vec![0.0; n],
            level: 0.0,
            active: vec![false; n],
        };
    }
    let e = 1.0 / (1.0 - rho);
    // Activation threshold on k for each node.
    let kappa: Vec<f64> = (0..n).map(|j| l[j] * r[j].powf(e)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| kappa[a].total_cmp(&kappa[b]));
    let p = rho / (rho - 1.0);
    let (mut num, mut den) = (budget, 0.0);
    let mut level = 0.0;
    let mut count = n;
    for (pos, &j) in order.iter().enumerate() {
        num += w[j] * r[j] * l[j];
        den += w[j] * r[j].powf(p);
        level = num / den;
        if pos + 1 == n || level <= kappa[order[pos + 1]] {
            count = pos + 1;
            break;
        }
    }
    let mut active = vec![false; n];
    for &j in &order[..count] {
        active[j] = true;
    }
    let inference = (0..n)
        .map(|j| {
            if active[j] {
                (r[j] * (level * r[j].powf(1.0 / (rho - 1.0)) - l[j])).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    WaterFill {
        inference,
        level,
        active,
    }
}

/// `Σ w_j T_j^ρ` over automated nodes at the optimal allocation, with the
/// active set fixed from a plain evaluation so the result is smooth in every
/// tracked input.
fn automated_power_sum<R: Real>(
    budget: R,
    w: &[R],
    log_r: &[R],
    labor: f64,
    rho: f64,
) -> (R, WaterFill) {
    let wv: Vec<f64> = w.iter().map(|x| x.value()).collect();
    let rv: Vec<f64> = log_r.iter().map(|x| 10f64.powf(x.value())).collect();
    let lv = vec![labor; w.len()];
    let fill = water_fill(budget.value(), &wv, &rv, &lv, rho);
    let p = rho / (rho - 1.0);
    let mut num = budget;
    let mut den = R::constant(0.0);
    let mut idle = R::constant(0.0);
    for j in 0..w.len() {
        if fill.active[j] {
            let r = (log_r[j] * LN10).exp();
            num = num + w[j] * r * labor;
            den = den + w[j] * (log_r[j] * (p * LN10)).exp();
        } else {
            idle = idle + w[j] * labor.powf(rho);
        }
    }
    if den.value() == 0.0 {
        return (idle, fill);
    }
    ((num / den).powf(rho) * den + idle, fill)
}

/// Top-level allocation shares for one period.
///
/// Output shares, in order: consumption, capital, compute hardware,
/// hardware R&D, software R&D. Compute shares: training, inference.
#[derive(Clone, Copy, Debug)]
pub struct Shares<R = f64> {
    pub output: [R; 5],
    pub compute: [R; 2],
}

pub const OUTPUT_SHARE_NAMES: [&str; 5] = [
    "s_consumption",
    "s_capital",
    "s_compute",
    "s_hardware_rd",
    "s_software_rd",
];
pub const COMPUTE_SHARE_NAMES: [&str; 2] = ["s_training", "s_inference"];

impl<R: Real> Shares<R> {
    pub fn values(&self) -> Shares<f64> {
        Shares {
            output: self.output.map(|x| x.value()),
            compute: self.compute.map(|x| x.value()),
        }
    }
}

/// Everything one period produces.
#[derive(Clone, Debug)]
pub struct Period<R = f64> {
    pub f: R,
    pub inference_budget: R,
    /// Effective compute added to training this period (eFLOP).
    pub training: R,
    pub composite: R,
    pub output: R,
    /// Per-capita consumption.
    pub consumption: R,
    pub capital_spend: R,
    pub compute_spend: R,
    pub hardware_rd: R,
    pub software_rd: R,
    pub fill: WaterFill,
}

/// The constant parts of the production side.
#[derive(Clone, Debug)]
pub struct Economy {
    pub params: ParameterSet,
    pub tfp: f64,
    pub runtime: RuntimeCost,
}

impl Economy {
    /// Builds the economy and calibrates TFP to initial output.
    pub fn new(p: &ParameterSet) -> Result<Economy> {
        let mut e = Economy {
            params: p.clone(),
            tfp: 1.0,
            runtime: RuntimeCost {
                gamma0: p.gamma0,
                gamma1: p.gamma1,
                m: p.m,
                iota_max: p.iota_max,
            },
        };
        e.tfp = calibrate_tfp(p)?;
        Ok(e)
    }

    /// Automated fraction implied by a training run of `ct` under `af`.
    pub fn automated_fraction<R: Real>(&self, af: &AutomationFunction, ct: R) -> R {
        let cap = capability_with_inference(ct, self.params.iota_max, self.params.m);
        af.fraction_from_log10(cap.log10())
    }

    /// Task composite for given automation level, training run, runtime budget and labour.
    pub fn composite<R: Real>(
        &self,
        af: &AutomationFunction,
        f: R,
        log_ct: R,
        budget: R,
        labor: f64,
    ) -> (R, WaterFill) {
        let p = &self.params;
        let rho = p.rho;
        let nodes = TaskGrid::automated_nodes(p.task_grid_workers, f, af.f_init);
        let w: Vec<R> = nodes.iter().map(|n| n.1).collect();
        let log_r: Vec<R> = nodes
            .iter()
            .map(|&(i, _, ramp)| {
                let inv = ramp.then(|| af.inverse_log10(i));
                self.runtime.log10_requirement(i, log_ct, inv)
            })
            .collect();
        let alloc_labor = match p.labor_mode {
            LaborMode::PerfectReallocation => 0.0,
            LaborMode::NoReallocation => labor,
        };
        let (auto, fill) = automated_power_sum(budget, &w, &log_r, alloc_labor, rho);
        let rest = f.rsub(1.0);
        let human = match p.labor_mode {
            LaborMode::PerfectReallocation => rest.powf(1.0 - rho) * labor.powf(rho),
            LaborMode::NoReallocation => rest * labor.powf(rho),
        };
        ((auto + human).powf(1.0 / rho), fill)
    }

    /// Evaluates one period given the start-of-period states and shares.
    pub fn period<R: Real>(
        &self,
        af: &AutomationFunction,
        capital: R,
        labor: f64,
        compute: &ComputeState<R>,
        shares: &Shares<R>,
    ) -> Period<R> {
        let p = &self.params;
        let f = self.automated_fraction(af, compute.ct);
        let budget = compute.c * shares.compute[1];
        let training = compute.c * shares.compute[0] * p.dt;
        let (composite, fill) = self.composite(af, f, compute.ct.log10(), budget, labor);
        let output = produce(self.tfp, composite, capital, p.f0, p.alpha, p.mu);
        Period {
            f,
            inference_budget: budget,
            training,
            composite,
            consumption: output * shares.output[0] / labor,
            capital_spend: output * shares.output[1],
            compute_spend: output * shares.output[2],
            hardware_rd: output * shares.output[3],
            software_rd: output * shares.output[4],
            output,
            fill,
        }
    }

    /// Capital after one period of investment and depreciation.
    pub fn step_capital<R: Real>(&self, capital: R, spend: R) -> R {
        let p = &self.params;
        let ik = capital_investment(spend, capital, p.a_k);
        capital + (ik - capital * p.delta_k) * p.dt
    }
}

/// TFP that makes period-0 output equal `y0`, with the initial runtime
/// compute `c_i0` spread optimally over the initially automatable tasks.
pub fn calibrate_tfp(p: &ParameterSet) -> Result<f64> {
    let e = Economy {
        params: p.clone(),
        tfp: 1.0,
        runtime: RuntimeCost {
            gamma0: p.gamma0,
            gamma1: p.gamma1,
            m: p.m,
            iota_max: p.iota_max,
        },
    };
    let af = p.automation_function();
    let f = e.automated_fraction(&af, p.c_t0);
    let (t, _) = e.composite(&af, f, p.c_t0.log10(), p.c_i0, p.l0);
    let y = produce(1.0, t, p.k0, p.f0, p.alpha, p.mu);
    if !(y > 0.0 && y.is_finite()) {
        return Err(GateError::DegenerateCalibration);
    }
    Ok(p.y0 / y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_preset;
    use proptest::prelude::*;

    #[test]
    fn ces_of_equal_inputs() {
        let w = [0.25; 4];
        assert!((ces_composite(&[3.0; 4], &w, -0.65) - 3.0).abs() < 1e-12);
        assert_eq!(ces_composite(&[3.0, 0.0, 1.0, 1.0], &w, -0.65), 0.0);
    }

    #[test]
    fn ces_two_and_a_quarter() {
        let n = 99;
        let w = vec![1.0 / n as f64; n];
        let base = ces_composite(&vec![1.0; n], &w, -0.5);
        let mut x = vec![1.0; n];
        for v in x.iter_mut().take(n / 3) {
            *v = 1e12;
        }
        let ratio = ces_composite(&x, &w, -0.5) / base;
        assert!((ratio - 2.25).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn production_identities() {
        assert_eq!(produce(2.5, 1.0, 1.0, 1.0, 0.35, 0.1), 2.5);
        let y1 = produce(1.0, 3.0, 5.0, 7.0, 0.35, 0.0);
        let y2 = produce(1.0, 3.0, 10.0, 7.0, 0.35, 0.0);
        assert!((y2 / y1 - 2f64.powf(0.35)).abs() < 1e-12);
        let y3 = produce(1.0, 6.0, 10.0, 14.0, 0.35, 0.1);
        let y4 = produce(1.0, 3.0, 5.0, 7.0, 0.35, 0.1);
        assert!((y3 / y4 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn capital_inverse() {
        assert_eq!(capital_effective_investment(0.0, 5.0, 1.0).unwrap(), 0.0);
        let k = 450e12;
        let ik = capital_effective_investment(k, k, 1.0).unwrap();
        assert!((ik / k - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        let ik = capital_effective_investment(1e13, k, 1e-12).unwrap();
        assert!((ik / 1e13 - 1.0).abs() < 1e-9);
        assert!(capital_effective_investment(-1.0, k, 1.0).is_err());
    }

    #[test]
    fn labor_modes() {
        let a = allocate_labor(3.6e9, 0.5, LaborMode::PerfectReallocation);
        assert!((a.non_automated - 7.2e9).abs() < 1.0);
        assert_eq!(a.automated, 0.0);
        let b = allocate_labor(3.6e9, 0.5, LaborMode::NoReallocation);
        assert_eq!((b.automated, b.non_automated), (3.6e9, 3.6e9));
        let c = allocate_labor(3.6e9, 0.1, LaborMode::PerfectReallocation);
        assert!((c.non_automated - 4e9).abs() < 1.0);
        let g = labor_on_grid(
            &TaskGrid::new(20, 100).labor_nodes,
            3.6e9,
            0.5,
            LaborMode::PerfectReallocation,
        );
        let total: f64 = g.iter().sum::<f64>() / 100.0;
        assert!((total - 3.6e9).abs() / 3.6e9 < 1e-12);
    }

    #[test]
    fn water_fill_zero_budget() {
        let wf = water_fill(0.0, &[0.5, 0.5], &[1.0, 2.0], &[1.0, 1.0], -0.65);
        assert_eq!(wf.inference, vec![0.0, 0.0]);
    }

    #[test]
    fn water_fill_symmetric_split() {
        let wf = water_fill(10.0, &[0.5, 0.5], &[2.0, 2.0], &[1.0, 1.0], -0.65);
        assert!((wf.inference[0] - wf.inference[1]).abs() < 1e-12);
        assert!((0.5 * wf.inference[0] + 0.5 * wf.inference[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn water_fill_skips_saturated_node() {
        // Node 1 already has far more labour than the budget can match elsewhere.
        let wf = water_fill(1.0, &[0.5, 0.5], &[1.0, 1.0], &[1.0, 1e6], -0.65);
        assert!(!wf.active[1]);
        assert_eq!(wf.inference[1], 0.0);
        assert!((0.5 * wf.inference[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_hits_initial_output() {
        let p = default_preset();
        let e = Economy::new(&p).unwrap();
        let af = p.automation_function();
        let c0 = ComputeState::initial(&p);
        let shares = Shares {
            output: [0.7, 0.2, 0.05, 0.03, 0.02],
            compute: [p.c_t0 / c0.c, p.c_i0 / c0.c],
        };
        let per = e.period(&af, p.k0, p.l0, &c0, &shares);
        assert!((per.output / p.y0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn calibration_scales_with_output() {
        let p = default_preset();
        let a = calibrate_tfp(&p).unwrap();
        let q = ParameterSet {
            y0: 2.0 * p.y0,
            ..p
        };
        assert!((calibrate_tfp(&q).unwrap() / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_reallocation_composite_exceeds_labour_only() {
        let p = ParameterSet {
            labor_mode: LaborMode::NoReallocation,
            ..default_preset()
        };
        let e = Economy::new(&p).unwrap();
        let af = p.automation_function();
        let (t0, _) = e.composite(&af, 0.1, p.c_t0.log10(), 0.0, p.l0);
        let (t1, _) = e.composite(&af, 0.1, p.c_t0.log10(), 1e28, p.l0);
        assert!((t0 / p.l0 - 1.0).abs() < 1e-12);
        assert!(t1 > t0);
    }

    fn power_sum(alloc: &[f64], w: &[f64], r: &[f64], l: &[f64], rho: f64) -> f64 {
        (0..w.len())
            .map(|j| w[j] * (l[j] + alloc[j] / r[j]).powf(rho))
            .sum()
    }

    proptest! {
        #[test]
        fn ces_is_homogeneous(x in proptest::collection::vec(0.1f64..10.0, 5), k in 0.1f64..10.0) {
            let w = [0.2; 5];
            let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
            let a = ces_composite(&scaled, &w, -0.65);
            let b = k * ces_composite(&x, &w, -0.65);
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }

        #[test]
        fn water_fill_kkt_and_budget(
            b in 0.01f64..100.0,
            r in proptest::collection::vec(0.1f64..10.0, 4),
            l in proptest::collection::vec(0.0f64..5.0, 4),
            rho in -3.0f64..-0.2,
        ) {
            let w = [0.25; 4];
            let wf = water_fill(b, &w, &r, &l, rho);
            let spent: f64 = (0..4).map(|j| w[j] * wf.inference[j]).sum();
            prop_assert!((spent - b).abs() <= 1e-8 * b);
            for j in 0..4 {
                // Marginal value per unit compute at zero allocation must not exceed the level's.
                if !wf.active[j] {
                    prop_assert!(l[j] > 0.0);
                    let t_star = wf.level * r[j].powf(1.0 / (rho - 1.0));
                    prop_assert!(t_star <= l[j] * (1.0 + 1e-9));
                }
            }
        }

        #[test]
        fn more_budget_more_composite(b1 in 0.01f64..100.0, b2 in 0.01f64..100.0) {
            let (w, r, l) = ([0.3, 0.3, 0.4], [1.0, 3.0, 7.0], [0.5, 0.1, 2.0]);
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            let s = |b: f64| power_sum(&water_fill(b, &w, &r, &l, -0.65).inference, &w, &r, &l, -0.65).powf(1.0 / -0.65);
            prop_assert!(s(lo) <= s(hi) * (1.0 + 1e-12));
        }

        #[test]
        fn capital_inverse_round_trip(exp in -3.0f64..3.0, a_k in 0.1f64..3.0) {
            let k = 450e12;
            let ik = k * 10f64.powf(exp);
            let spend = capital_investment_cost(ik, k, a_k);
            let back = capital_effective_investment(spend, k, a_k).unwrap();
            prop_assert!((back - ik).abs() <= 1e-9 * ik);
            prop_assert!(back <= spend);
        }
    }
}
