//! Seeded Monte Carlo estimates against exact finite-horizon values, and the
//! same run split over several threads with identical results.
//!
//! Run with `cargo run --release --example monte_carlo`.

use quasistat::conditioning::{exact_mean_ratio, survival_probability};
use quasistat::sim::{simulate, SimConfig};
use quasistat::walk::RandomWalkSpec;

fn main() -> quasistat::Result<()> {
    let n = 20;
    let problem = RandomWalkSpec::moving(0.5, 3).problem(3)?;
    let f: Vec<f64> = (0..7).map(|x| x as f64).collect();
    let config = SimConfig::new(2024, 400_000, n);
    let summary = simulate(&problem, &f, &config)?;

    let surv = summary.survival(n);
    let exact_surv = survival_probability(&problem, n);
    println!("P(τ > {n}): {:.6} ± {:.1e}, exact {exact_surv:.6}, z = {:.2}", surv.estimate, surv.se, surv.z_score(exact_surv));

    let mr = summary.mean_ratio(n)?;
    let exact = exact_mean_ratio(&problem, &f, n)?;
    println!(
        "mean ratio: {:.6} ± {:.1e} from {} survivors, exact {exact:.6}, z = {:.2}",
        mr.estimate,
        mr.se,
        mr.survivors,
        mr.z_score(exact)
    );
    let law = summary.conditional_law(n)?;
    println!("empirical law of X_{n} given survival: {:?}", law.weights().iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>());

    let sharded = simulate(&problem, &f, &config.clone().with_shards(8))?;
    let same = sharded.survivors == summary.survivors && sharded.mean_ratio == summary.mean_ratio;
    println!("8 shards reproduce the single-thread run: {same}");
    Ok(())
}
