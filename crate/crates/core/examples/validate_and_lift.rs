//! Builds a small problem with a two-phase boundary, validates a broken
//! variant and prints the lifted chain's survivors.
//!
//! Run with `cargo run --example validate_and_lift`.

use quasistat::chain::{lift_chain, survivor_restriction, validate_problem};
use quasistat::{AbsorbedChainProblem, ProblemParts};

fn main() -> quasistat::Result<()> {
    let labels = ["a", "b", "c", "dead"];
    let rows = vec![
        vec![0.2, 0.5, 0.2, 0.1],
        vec![0.3, 0.3, 0.3, 0.1],
        vec![0.4, 0.4, 0.1, 0.1],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    // `c` is only absorbing at odd times
    let parts = ProblemParts::labeled(&labels, &rows, &[vec!["dead"], vec!["c", "dead"]], &[("a", 1.0)])?;

    let mut broken = parts.clone();
    broken.kernel[(1, 1)] = 0.5;
    broken.initial[3] = 0.5;
    println!("broken variant:");
    for msg in validate_problem(&broken).messages() {
        println!("  {msg}");
    }

    let problem = AbsorbedChainProblem::new(parts)?;
    let lifted = lift_chain(&problem);
    println!(
        "\n{} base states, gamma = {}, {} lifted states, {} survivors",
        problem.n_states(),
        problem.gamma(),
        lifted.size(),
        lifted.n_survivors()
    );
    let q = lifted.survivor_matrix();
    for i in 0..lifted.n_survivors() {
        let row: Vec<String> = (0..lifted.n_survivors())
            .filter(|&j| q[(i, j)] > 0.0)
            .map(|j| format!("{}:{:.2}", lifted.survivor_label(problem.space(), j), q[(i, j)]))
            .collect();
        println!("  {:>6} -> {}", lifted.survivor_label(problem.space(), i), row.join(" "));
    }
    let phase1 = survivor_restriction(problem.kernel().matrix(), problem.boundary().killing_mask(1))?;
    println!("one-step killing mass into phase 1: {:?}", phase1.deficiencies());
    Ok(())
}
