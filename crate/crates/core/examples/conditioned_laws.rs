//! Conditional laws `P(X_n ∈ · | τ > n)` of a periodically absorbed walk:
//! the laws oscillate, the cycle of limit points is detected, and no
//! distribution is fixed by every phase map.
//!
//! Run with `cargo run --example conditioned_laws`.

use quasistat::conditioning::{conditional_laws, no_qsd_certificate, qld_cycle};
use quasistat::walk::RandomWalkSpec;

fn main() -> quasistat::Result<()> {
    let problem = RandomWalkSpec::moving(0.5, 3).problem(3)?;
    let space = problem.space();
    println!("n   {}", space.labels().join("      "));
    for (n, law) in conditional_laws(&problem, 8)?.iter().enumerate() {
        let cells: Vec<String> = law.weights().iter().map(|w| format!("{w:.4}")).collect();
        println!("{n:<3} {}", cells.join(" "));
    }

    let cycle = qld_cycle(&problem)?;
    println!("\n{} ({} limit points)", cycle.verdict(), cycle.cycle.len());
    for (law, t) in cycle.cycle.iter().zip(&cycle.times) {
        let cells: Vec<String> = law.labeled(space).map(|(l, w)| format!("{l}:{w:.4}")).collect();
        println!("  times ≡ {t}: {}", cells.join(" "));
    }

    let cert = no_qsd_certificate(&problem, 0.05)?;
    println!(
        "\ncommon support {:?}, grid of {} points, smallest fixed-point defect {:.3}",
        cert.common_support, cert.grid_points, cert.grid_min_defect
    );
    println!("no common fixed point: {}", cert.no_common_fixed_point);
    Ok(())
}
