//! The Q-process of the moving walk: generic kernel, closed form, finite-horizon
//! convergence and a long simulated run that never touches the boundary.
//!
//! Run with `cargo run --release --example q_process`.

use quasistat::qprocess::{build_qprocess, finite_horizon_qlaw};
use quasistat::sim::simulate_qprocess;
use quasistat::walk::{qprocess_closed_form, RandomWalkSpec};

fn main() -> quasistat::Result<()> {
    let spec = RandomWalkSpec::moving(0.4, 4);
    let start = 3;
    let problem = spec.problem(start)?;
    let kernel = build_qprocess(&problem, start)?;
    let closed = qprocess_closed_form(&spec, start)?;
    let gap = (0..2).map(|k| (&kernel.slices[k] - &closed.slices[k]).amax()).fold(0.0, f64::max);
    println!("rho = {:.10}, max row deviation {:.1e}, closed-form gap {gap:.1e}", kernel.rho, kernel.max_row_deviation());

    for phase in [1, 0] {
        println!("\nstep into phase {phase}:");
        for y in 0..kernel.n_states {
            if !kernel.rows[phase][y] {
                continue;
            }
            let row: Vec<String> = (0..kernel.n_states)
                .filter(|&z| kernel.slice(phase)[(y, z)] > 0.0)
                .map(|z| format!("{z}:{:.4}", kernel.slice(phase)[(y, z)]))
                .collect();
            println!("  {y} -> {}", row.join(" "));
        }
    }

    let path = [4, 5, 4];
    let limit = kernel.cylinder_probability(start, &path);
    println!("\nP_{start}(X_1..X_3 = {path:?} | τ > m) against the Q-process value {limit:.10}:");
    for m in [3, 10, 50, 200] {
        println!("  m = {m:>3}: {:.10}", finite_horizon_qlaw(&problem, start, &path, m)?);
    }

    let run = simulate_qprocess(&problem, &kernel, start, 1_000_000, 1)?;
    println!("\n{} steps, {} boundary hits, visits {:?}", run.steps, run.boundary_hits, run.visits);
    Ok(())
}
