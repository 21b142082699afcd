//! Quasi-ergodic limits: the spectral answer against the exact finite-n
//! mean ratio, including a chain where the start picks the dominant class.
//!
//! Run with `cargo run --example quasi_ergodic`.

use quasistat::conditioning::mean_ratio_series;
use quasistat::ergodic::{qed_moving, quasi_ergodic_distribution};
use quasistat::walk::{moving_example_qed, RandomWalkSpec, StartParity};

fn main() -> quasistat::Result<()> {
    let spec = RandomWalkSpec::moving(0.3, 5);
    let f: Vec<f64> = (0..11).map(|x| (x as f64).sqrt()).collect();
    for start in [1, 2] {
        let problem = spec.problem(start)?;
        let (qed, phi) = qed_moving(&problem, &f)?;
        let closed = moving_example_qed(&spec, StartParity::of_state(start))?;
        let gap = qed
            .eta
            .weights()
            .iter()
            .zip(&closed.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("start {start}: rho_max = {:.8}, phi(f) = {phi:.8}, closed-form gap {gap:.1e}", qed.rho_max());
        let series = mean_ratio_series(&problem, &f, 4000)?;
        for n in [10, 100, 1000, 4000] {
            println!("  n = {n:>4}: mean ratio {:.8}  (|diff| {:.1e})", series[n - 1], (series[n - 1] - phi).abs());
        }
    }

    // two disjoint classes with equal decay rates: no unique answer
    let tie = quasistat::AbsorbedChainProblem::new(quasistat::ProblemParts::labeled(
        &["a", "b", "dead"],
        &[vec![0.5, 0.0, 0.5], vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0]],
        &[vec!["dead"]],
        &[("a", 0.5), ("b", 0.5)],
    )?)?;
    match quasi_ergodic_distribution(&tie) {
        Ok(_) => println!("\nunexpected: tie resolved"),
        Err(e) => println!("\ntied chain: {e}"),
    }
    Ok(())
}
