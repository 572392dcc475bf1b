//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use gate_core::ai_development::{
    compute_effective_investment, compute_investment_cost, EfficiencyLaw,
};
use gate_core::automation::{capability_with_inference, AutomationFunction, BeliefState};
use gate_core::economy::{
    capital_effective_investment, capital_investment_cost, ces_composite, water_fill,
};
use gate_core::io::headline;
use gate_core::params::{default_preset, desk_preset, BeliefCandidate, LaborMode, ParameterSet};
use gate_core::planner::checks::{sanity_check_simple_policy, sanity_check_spliced_utility};
use gate_core::planner::{solve, Mode, Problem, Solution, SolverSettings, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn automation_anchors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let f_init = rng.random_range(0.05..0.2);
        let t_agi = 10f64.powf(rng.random_range(33.0..41.0));
        let delta = rng.random_range(0.3..9.0);
        let af = AutomationFunction::new(f_init, t_agi, delta, 1.0);
        let start = t_agi / 10f64.powf(delta);
        worst = worst
            .max((af.fraction_automatable(start) - f_init).abs())
            .max((af.fraction_automatable(t_agi) - 1.0).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("max anchor error {worst:.2e} over 1000 draws"),
    )
}

fn training_inference_value() -> Outcome {
    let v = capability_with_inference(1e30, 100.0, 2.0).log10();
    outcome(v == 31.0, format!("log10 capability = {v}"))
}

fn ces_ratio() -> Outcome {
    let n = 300;
    let w = vec![1.0 / n as f64; n];
    let base = ces_composite(&vec![1.0; n], &w, -0.5);
    let mut x = vec![1.0; n];
    x.iter_mut().take(n / 3).for_each(|v| *v = 1e12);
    let ratio = ces_composite(&x, &w, -0.5) / base;
    outcome(
        (ratio - 2.25).abs() <= 1e-3,
        format!("composite ratio {ratio:.6}"),
    )
}

fn rd_calibration() -> Outcome {
    let p = default_preset();
    let gh = EfficiencyLaw::hardware(&p).growth_rate(p.h0, p.i_h0, 1.0);
    let gs = EfficiencyLaw::software(&p).growth_rate(p.s0, p.i_s0, 1.0);
    outcome(
        (gh - 0.275).abs() <= 1e-3 && (gs - 0.70).abs() <= 1e-2,
        format!("g_H = {gh:.5}, g_S = {gs:.4}"),
    )
}

fn gradient_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = ParameterSet {
            tau_plan: 5,
            tau_optim: 5,
            rho: rng.random_range(-2.0..-0.3),
            eta: rng.random_range(1.0..3.0),
            alpha: rng.random_range(0.25..0.45),
            labor_mode: if rng.random_bool(0.5) {
                LaborMode::PerfectReallocation
            } else {
                LaborMode::NoReallocation
            },
            ..default_preset()
        };
        let problem = Problem::new(&p, Mode::Deterministic).expect("valid instance");
        let x: Vec<f64> = problem
            .warm_start()
            .iter()
            .map(|v| v + rng.random_range(-2.0..2.0))
            .collect();
        let (_, g) = problem.value_and_gradient(&x);
        let h = 1e-5;
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (problem.centered_objective(&a) - problem.centered_objective(&b)) / (2.0 * h);
            err = err.max((g[i] - fd).abs());
            scale = scale.max(fd.abs());
        }
        worst = worst.max(err / scale);
    }
    outcome(
        worst < 1e-4,
        format!("worst relative error {worst:.2e} over 50 instances"),
    )
}

fn inference_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = -0.65;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..5.0)).collect();
        let l: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
        let budget = rng.random_range(0.5..5.0);
        let composite = |c: &[f64]| -> f64 {
            let s: f64 = (0..3).map(|j| w[j] * (l[j] + c[j] / r[j]).powf(rho)).sum();
            s.powf(1.0 / rho)
        };
        let fill = water_fill(budget, &w, &r, &l, rho);
        let analytic = composite(&fill.inference);
        // Brute force over budget fractions on a 1e-3 grid of the 2-simplex.
        let steps = 1000;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=steps {
            for b in 0..=steps - a {
                let fa = a as f64 / steps as f64;
                let fb = b as f64 / steps as f64;
                let fc = 1.0 - fa - fb;
                let c = [fa * budget / w[0], fb * budget / w[1], fc * budget / w[2]];
                best = best.max(composite(&c));
            }
        }
        worst = worst.max((analytic - best).abs() / best);
        if analytic < best * (1.0 - 1e-12) {
            worst = worst.max(f64::INFINITY);
        }
    }
    outcome(
        worst <= 1e-5,
        format!("max relative gap to brute force {worst:.2e}"),
    )
}

fn adjustment_round_trips() -> Outcome {
    let mut worst: f64 = 0.0;
    let (q, h, k) = (1e28, 1e18, 450e12);
    for step in 0..=60 {
        let e = -3.0 + step as f64 * 0.1;
        let iq = q / h * 10f64.powf(e);
        let back = compute_effective_investment(
            compute_investment_cost(iq, q, h, 2.0, 4.0),
            q,
            h,
            2.0,
            4.0,
        );
        worst = worst.max((back - iq).abs() / iq);
        let ik = k * 10f64.powf(e);
        let back =
            capital_effective_investment(capital_investment_cost(ik, k, 1.0), k, 1.0).unwrap();
        worst = worst.max((back - ik).abs() / ik);
    }
    outcome(
        worst <= 1e-9,
        format!("max relative round-trip error {worst:.2e}"),
    )
}

fn budget_identities(solutions: &[(&str, &Solution)]) -> Outcome {
    let mut share_err: f64 = 0.0;
    let mut slack_err: f64 = 0.0;
    let mut rows = 0;
    for (_, sol) in solutions {
        for t in &sol.trajectories {
            for r in &t.rows {
                rows += 1;
                share_err = share_err
                    .max((r.output_shares.iter().sum::<f64>() - 1.0).abs())
                    .max((r.compute_shares.iter().sum::<f64>() - 1.0).abs());
                let used = r.training_rate + r.inference_allocated;
                slack_err = slack_err.max((r.compute - used) / r.compute);
                if used > r.compute * (1.0 + 1e-8) {
                    slack_err = f64::INFINITY;
                }
            }
        }
    }
    outcome(
        share_err <= 4.0 * f64::EPSILON && slack_err < 1e-8,
        format!("{rows} rows: share error {share_err:.1e}, compute slack {slack_err:.1e}"),
    )
}

fn non_decreasing(t: &Trajectory) -> bool {
    t.rows
        .windows(2)
        .all(|w| w[1].f >= w[0].f && w[1].ct >= w[0].ct)
}

fn desk_solve(p: &ParameterSet, det: &Solution, solve_secs: f64) -> Outcome {
    let t = Instant::now();
    let simple = sanity_check_simple_policy(p, det).expect("simple policy check runs");
    let spliced = sanity_check_spliced_utility(p, det).expect("spliced utility check runs");
    let total = solve_secs + t.elapsed().as_secs_f64();
    let monotone = det.trajectories.iter().all(non_decreasing);
    let bound = 1e-6 * det.value.abs();
    let converged = det.grad_norm < bound && det.iterations <= 20_000;
    outcome(
        converged && monotone && simple.passed && spliced.passed && total <= 600.0,
        format!(
            "|g| = {:.2e} < {:.2e}: {} after {} iterations ({}); solve and checks {:.1}s; monotone f, CT: {}; simple policy {} (V_full {:.9}, V_simple {:.9}); spliced utility {} (V_spliced under original {:.9})",
            det.grad_norm,
            bound,
            converged,
            det.iterations,
            det.status,
            total,
            monotone,
            if simple.passed { "pass" } else { "FAIL" },
            simple.full_value,
            simple.alternative_value,
            if spliced.passed { "pass" } else { "FAIL" },
            spliced.alternative_value,
        ),
    )
}

fn wedge_monotonicity(det: &Solution, ext: &Solution, tau_plan: usize) -> Outcome {
    let a = &det.trajectories[0].rows[..tau_plan];
    let b = &ext.trajectories[0].rows[..tau_plan];
    let mut worst: f64 = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        worst = worst.max(y.h / x.h - 1.0).max(y.s / x.s - 1.0);
    }
    outcome(
        worst <= 1e-12,
        format!(
            "max relative excess of wedge H, S over baseline {worst:.2e}; wedge converged={}",
            ext.converged
        ),
    )
}

fn uncertainty(p: &ParameterSet, det: &Solution, settings: &SolverSettings) -> Outcome {
    let single = solve(p, Mode::Uncertainty, settings).expect("single-candidate solve");
    let gap = (single.value - det.value).abs();
    let allowed = 2.0 * settings.tolerance * det.value.abs();

    let three = ParameterSet {
        belief_spec: vec![
            BeliefCandidate {
                zeta: 0.3,
                prob: 0.2,
            },
            BeliefCandidate {
                zeta: 0.6,
                prob: 0.3,
            },
            BeliefCandidate {
                zeta: 1.0,
                prob: 0.5,
            },
        ],
        ..p.clone()
    };
    let sol = solve(&three, Mode::Uncertainty, settings).expect("three-candidate solve");
    let problem = Problem::new(&three, Mode::Uncertainty).unwrap();
    let mut measurable = true;
    let mut beliefs_agree = true;
    let mut shared = 0;
    let af = three.automation_function();
    for t in 0..three.tau_optim {
        for a in &sol.trajectories {
            // The information state must match an explicit belief update.
            let mut b = BeliefState::new(&three.belief_spec);
            for s in 0..=t {
                let cap_s = capability_with_inference(a.rows[s].ct, three.iota_max, three.m);
                b = b
                    .update_beliefs(
                        &af,
                        cap_s,
                        af.with_plateau(a.zeta).fraction_automatable(cap_s),
                    )
                    .expect("truth is in the family");
            }
            beliefs_agree &= problem.info.states[a.rows[t].info_state] == b.mask();
            for bb in &sol.trajectories {
                if a.scenario_id < bb.scenario_id && a.rows[t].info_state == bb.rows[t].info_state {
                    shared += 1;
                    let ra = &a.rows[t];
                    let rb = &bb.rows[t];
                    measurable &= ra.output_shares == rb.output_shares
                        && ra.compute_shares == rb.compute_shares;
                }
            }
        }
    }
    outcome(
        gap <= allowed && measurable && beliefs_agree,
        format!(
            "|V_single - V_det| = {gap:.2e} (allowed {allowed:.2e}); 3-candidate: {shared} shared (t, state) pairs, measurable={measurable}, states match belief updates={beliefs_agree}"
        ),
    )
}

fn horizon_robustness(p: &ParameterSet, det: &Solution, settings: &SolverSettings) -> Outcome {
    let longer = ParameterSet {
        tau_optim: 3 * p.tau_plan,
        ..p.clone()
    };
    let sol = solve(&longer, Mode::Deterministic, settings).expect("longer-horizon solve");
    let a = headline(&det.plan(p.tau_plan));
    let b = headline(&sol.plan(p.tau_plan));
    let mut worst = (String::new(), 0.0f64);
    for ((name, xa), (_, xb)) in a.series.iter().zip(&b.series) {
        let scale = xa
            .iter()
            .chain(xb)
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in xa.iter().zip(xb) {
            if u.is_finite() && v.is_finite() && scale > 0.0 {
                let d = (u - v).abs() / scale;
                if d > worst.1 {
                    worst = (name.clone(), d);
                }
            }
        }
    }
    outcome(
        worst.1 < 0.01,
        format!("largest change {:.3e} in series {}", worst.1, worst.0),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "[{}] {name} ({secs:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name, o, secs));
    };

    run("automation function anchors", &mut automation_anchors);
    run(
        "training-inference footnote value",
        &mut training_inference_value,
    );
    run("CES 2.25x check", &mut ces_ratio);
    run("R&D calibration fixture", &mut rd_calibration);
    run("gradient contract", &mut gradient_contract);
    run("inference allocation oracle", &mut inference_oracle);
    run("adjustment-cost inverses", &mut adjustment_round_trips);

    let p = desk_preset();
    let settings = SolverSettings::default();
    let t = Instant::now();
    let det = solve(&p, Mode::Deterministic, &settings).expect("desk solve");
    let det_secs = t.elapsed().as_secs_f64();
    let ext = solve(&p, Mode::Externality, &settings).expect("wedge solve");

    run("budget identities", &mut || {
        budget_identities(&[("det", &det), ("ext", &ext)])
    });
    run("desk-scale solve", &mut || desk_solve(&p, &det, det_secs));
    run("wedge monotonicity", &mut || {
        wedge_monotonicity(&det, &ext, p.tau_plan)
    });
    run("uncertainty degeneracy and measurability", &mut || {
        uncertainty(&p, &det, &settings)
    });
    run("horizon robustness", &mut || {
        horizon_robustness(&p, &det, &settings)
    });

    let failed = results.iter().filter(|r| !r.1.passed).count();
    println!(
        "{} of {} acceptance criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
