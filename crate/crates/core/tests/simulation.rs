//! Monte Carlo estimators checked against exact finite-horizon values.

use quasistat::chain::lift_chain;
use quasistat::conditioning::{exact_mean_ratio, survival_probability};
use quasistat::qprocess::build_qprocess;
use quasistat::sim::{estimate_survival, simulate, simulate_qprocess, SimConfig};
use quasistat::spectral::{decompose_classes, survival_coefficient};
use quasistat::walk::RandomWalkSpec;

/// z-score bound for every Monte Carlo comparison.
const Z_MAX: f64 = 3.0;

#[test]
fn fixed_two_state_walk_survival() {
    let problem = RandomWalkSpec::fixed(0.5, 2).problem(1).unwrap();
    let est = estimate_survival(&problem, &SimConfig::new(11, 1_000_000, 10)).unwrap();
    let target = 0.5f64.powi(10);
    assert!(est.z_score(target).abs() <= Z_MAX, "{est:?} vs {target}");
}

#[test]
fn moving_walk_mean_ratio_at_twenty() {
    let n = 20;
    let problem = RandomWalkSpec::moving(0.5, 3).problem(3).unwrap();
    let f: Vec<f64> = (0..7).map(|x| x as f64).collect();
    let exact = exact_mean_ratio(&problem, &f, n).unwrap();
    let summary = simulate(&problem, &f, &SimConfig::new(5, 200_000, n)).unwrap();
    let est = summary.mean_ratio(n).unwrap();
    assert!(est.survivors >= 10_000, "{} survivors", est.survivors);
    assert!(est.z_score(exact).abs() <= Z_MAX, "{est:?} vs {exact}");
    let surv = summary.survival(n);
    assert!(surv.z_score(survival_probability(&problem, n)).abs() <= Z_MAX);
}

#[test]
fn survival_follows_the_perron_asymptotics() {
    let n = 20;
    let problem = RandomWalkSpec::moving(0.5, 3).problem(3).unwrap();
    let lifted = lift_chain(&problem);
    let decomp = decompose_classes(lifted.survivor_matrix()).unwrap();
    let start = lifted.survivor_position(3, 0).unwrap();
    let class = &decomp.classes[decomp.class_index(start)];
    let c = survival_coefficient(class, start, n).unwrap();
    let asymptotic = c * class.rho.powi(n as i32);
    let est = estimate_survival(&problem, &SimConfig::new(9, 200_000, n)).unwrap();
    let ratio = est.estimate / asymptotic;
    assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
}

#[test]
fn runs_are_reproducible() {
    let problem = RandomWalkSpec::moving(0.3, 4).problem(1).unwrap();
    let f: Vec<f64> = (0..9).map(|x| (x as f64).sin()).collect();
    let a = simulate(&problem, &f, &SimConfig::new(42, 5000, 30)).unwrap();
    let b = simulate(&problem, &f, &SimConfig::new(42, 5000, 30).with_shards(3)).unwrap();
    assert_eq!(a.survivors, b.survivors);
    assert_eq!(a.law_counts, b.law_counts);
    assert_eq!(a.mean_ratio, b.mean_ratio);
    let c = simulate(&problem, &f, &SimConfig::new(43, 5000, 30)).unwrap();
    assert_ne!(a.law_counts, c.law_counts);
}

#[test]
fn qprocess_never_touches_the_boundary() {
    let problem = RandomWalkSpec::moving(0.35, 4).problem(3).unwrap();
    let kernel = build_qprocess(&problem, 3).unwrap();
    let run = simulate_qprocess(&problem, &kernel, 3, 1_000_000, 17).unwrap();
    assert_eq!(run.boundary_hits, 0);
    assert_eq!(run.visits.iter().sum::<u64>(), 1_000_001);
}
