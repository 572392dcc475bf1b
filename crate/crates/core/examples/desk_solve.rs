//! Solves the desk preset and prints progress every few hundred iterations.

use gate_core::params::desk_preset;
use gate_core::planner::{solve_with, Mode, SolverSettings};

fn main() {
    let mode: Mode = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "det".into())
        .parse()
        .unwrap();
    let p = desk_preset();
    let settings = SolverSettings::default();
    let start = std::time::Instant::now();
    let sol = solve_with(&p, mode, &settings, None, &mut |r| {
        if r.iteration % 500 == 0 {
            println!(
                "{:>6} V={:.12} |g|={:.3e} step={:.2e}",
                r.iteration, r.value, r.grad_norm, r.step
            );
        }
    })
    .unwrap();
    println!(
        "status={} converged={} iterations={} V={} |g|={:.3e} ({:.1}s)",
        sol.status,
        sol.converged,
        sol.iterations,
        sol.value,
        sol.grad_norm,
        start.elapsed().as_secs_f64()
    );
    for r in &sol.trajectories[0].rows {
        println!(
            "{:.0} Y={:.3e} f={:.4} CT={:.3e} C={:.3e} H={:.3e} S={:.3e} c={:.3e} sh={:?} cs={:?}",
            r.year,
            r.y,
            r.f,
            r.ct,
            r.compute,
            r.h,
            r.s,
            r.c,
            r.output_shares.map(|v| (v * 1e4).round() / 1e4),
            r.compute_shares.map(|v| (v * 1e4).round() / 1e4)
        );
    }
}
