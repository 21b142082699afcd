//! Communicating classes, periods and Perron data of a lifted chain, with the
//! survival expansion checked against direct matrix powers.
//!
//! Run with `cargo run --example spectral_classes`.

use nalgebra::DVector;
use quasistat::chain::lift_chain;
use quasistat::spectral::{decompose_classes, peripheral_system, survival_coefficient, verify_eigenprojection};
use quasistat::walk::RandomWalkSpec;

fn main() -> quasistat::Result<()> {
    let problem = RandomWalkSpec::moving(0.35, 4).problem(3)?;
    let lifted = lift_chain(&problem);
    let q = lifted.survivor_matrix();
    let decomp = decompose_classes(q)?;
    let label = |s: usize| lifted.survivor_label(problem.space(), s);

    for (i, class) in decomp.classes.iter().enumerate() {
        let states: Vec<String> = class.states.iter().map(|&s| label(s)).collect();
        println!("class {i}: {} states, period {}, rho = {:.10}", class.len(), class.period, class.rho);
        println!("  {}", states.join(" "));
        if class.degenerate {
            continue;
        }
        let system = peripheral_system(class);
        let (l, r) = system.residuals(q, class);
        println!("  peripheral residuals: left {l:.1e}, right {r:.1e}");
        let x = class.anchor();
        let ep = verify_eigenprojection(class, &system, x)?;
        println!("  eigenprojection residual at {}: {:.1e}", label(x), ep.residual);
    }

    // P(τ > n) from (3, 0) against c_n ρ^n
    let start = lifted.survivor_position(3, 0).expect("3 survives at phase 0");
    let class = &decomp.classes[decomp.class_index(start)];
    let mut u = DVector::from_element(lifted.n_survivors(), 1.0);
    println!("\n  n   P(τ > n)        c_n ρ^n");
    for n in 1..=30 {
        u = q * u;
        if n % 5 == 0 {
            let approx = survival_coefficient(class, start, n)? * class.rho.powi(n as i32);
            println!("{n:>3}   {:.10}   {approx:.10}", u[start]);
        }
    }
    Ok(())
}
