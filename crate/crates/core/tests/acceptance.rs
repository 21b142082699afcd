//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use quasistat::chain::lift_chain;
use quasistat::conditioning::{collapsed_chain, exact_mean_ratio, no_qsd_certificate, qld_cycle, survival_probability};
use quasistat::ergodic::{qed_moving, quasi_ergodic_distribution};
use quasistat::qprocess::{build_qprocess, finite_horizon_qlaw};
use quasistat::sim::{simulate, SimConfig};
use quasistat::spectral::{decompose_classes, peripheral_system, survival_coefficient, verify_eigenprojection, IrreducibleClass};
use quasistat::walk::{
    charpoly_roots, closed_form_spectrum, moving_example_qed, numeric_spectrum, qprocess_closed_form, RandomWalkSpec,
    StartParity,
};
use quasistat::{AbsorbedChainProblem, Distribution, ProblemParts};

use common::{random_problem, rng, Raw};

const SPECTRUM_TOL: f64 = 1e-10;
const CHARPOLY_TOL: f64 = 1e-9;
const QED_CLOSED_FORM_TOL: f64 = 1e-9;
const ORACLE_HORIZON: usize = 2000;
const ORACLE_TOL: f64 = 1e-2;
const P_INDEPENDENCE_TOL: f64 = 1e-12;
const CYCLE_TV_ONE_TOL: f64 = 1e-12;
const NO_QSD_GRID_STEP: f64 = 1e-3;
const COLLAPSE_TOL: f64 = 1e-14;
const COLLAPSE_CHAINS: u64 = 20;
const ROW_SUM_TOL: f64 = 1e-10;
const KERNEL_MATCH_TOL: f64 = 1e-10;
const QLAW_HORIZON: usize = 200;
const QLAW_TOL: f64 = 1e-6;
const SURVIVAL_HORIZON: usize = 60;
const SURVIVAL_BAND: (f64, f64) = (0.99, 1.01);
const EIGENPROJECTION_TOL: f64 = 1e-10;
const MC_HORIZON: usize = 200;
const MC_MIN_SURVIVORS: u64 = 10_000;
const MC_Z: f64 = 3.0;
const MC_PATHS: u64 = 40_000;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 1. Numerical spectrum of Q_K against 2√(p(1−p)) cos(jπ/(K+1)).
fn spectrum_golden() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_roots: f64 = 0.0;
    for p in [0.1, 0.5, 0.9] {
        for k in 1..=50 {
            let closed = closed_form_spectrum(k, p).eigenvalues;
            for (a, b) in numeric_spectrum(k, p).iter().zip(&closed) {
                worst = worst.max((a - b).abs());
            }
            if k <= 30 {
                for (a, b) in charpoly_roots(k, p).iter().zip(&closed) {
                    worst_roots = worst_roots.max((a - b).abs());
                }
            }
        }
    }
    check(
        worst <= SPECTRUM_TOL && worst_roots <= CHARPOLY_TOL,
        format!(
            "max |numeric − closed| = {worst:.2e} (tol {SPECTRUM_TOL:e}), charpoly roots {worst_roots:.2e} (tol {CHARPOLY_TOL:e})"
        ),
    )
}

fn indicator(n: usize, s: usize) -> Vec<f64> {
    (0..n).map(|x| if x == s { 1.0 } else { 0.0 }).collect()
}

/// 2. Moving-boundary QED: spectral vs closed form vs exact oracle at n = 2000.
fn qed_cross_validation() -> Outcome {
    let mut worst_closed: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for n in [3, 4, 5] {
        for p in [0.3, 0.5, 0.7] {
            let spec = RandomWalkSpec::moving(p, n);
            for (start, parity) in [(3, StartParity::Odd), (2, StartParity::Even)] {
                let problem = spec.problem(start).map_err(|e| e.to_string())?;
                let states = problem.n_states();
                let (qed, _) = qed_moving(&problem, &vec![0.0; states]).map_err(|e| e.to_string())?;
                let closed = moving_example_qed(&spec, parity).map_err(|e| e.to_string())?;
                for x in 0..states {
                    worst_closed = worst_closed.max((qed.eta.get(x) - closed.weights[x]).abs());
                    let f = indicator(states, x);
                    let exact = exact_mean_ratio(&problem, &f, ORACLE_HORIZON).map_err(|e| e.to_string())?;
                    worst_oracle = worst_oracle.max((exact - qed.phi(&f)).abs());
                }
            }
        }
    }
    check(
        worst_closed <= QED_CLOSED_FORM_TOL && worst_oracle <= ORACLE_TOL,
        format!(
            "max |η_E − closed form| = {worst_closed:.2e} (tol {QED_CLOSED_FORM_TOL:e}), \
             max |oracle(n={ORACLE_HORIZON}) − φ| = {worst_oracle:.2e} (tol {ORACLE_TOL:e})"
        ),
    )
}

/// 3. The moving QED does not depend on p.
fn p_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [3, 4, 5] {
        for start in [3, 2] {
            let etas: Vec<Vec<f64>> = [0.3, 0.5, 0.7]
                .iter()
                .map(|&p| {
                    let problem = RandomWalkSpec::moving(p, n).problem(start).unwrap();
                    let (qed, _) = qed_moving(&problem, &vec![0.0; 2 * n + 1]).unwrap();
                    qed.eta.weights().to_vec()
                })
                .collect();
            for e in &etas[1..] {
                for (a, b) in e.iter().zip(&etas[0]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    check(
        worst <= P_INDEPENDENCE_TOL,
        format!("max |η_E(p) − η_E(p')| = {worst:.2e} (tol {P_INDEPENDENCE_TOL:e})"),
    )
}

/// 4. N = 3: no quasi-limiting distribution and no common fixed point.
fn non_existence() -> Outcome {
    let problem = RandomWalkSpec::moving(0.5, 3).problem(3).map_err(|e| e.to_string())?;
    let cycle = qld_cycle(&problem).map_err(|e| e.to_string())?;
    let min_tv = cycle.consecutive_tv.iter().copied().fold(f64::INFINITY, f64::min);
    let cert = no_qsd_certificate(&problem, NO_QSD_GRID_STEP).map_err(|e| e.to_string())?;
    check(
        cycle.cycle.len() >= 2 && min_tv >= 1.0 - CYCLE_TV_ONE_TOL && cert.no_common_fixed_point,
        format!(
            "{} limit points, min pairwise TV {min_tv:.15}; grid {} points (step {NO_QSD_GRID_STEP:e}), \
             min defect {:.3e}, {} eigen fixed points with min defect {:.3e}",
            cycle.cycle.len(),
            cert.grid_points,
            cert.grid_min_defect,
            cert.eigen_fixed_points.len(),
            cert.eigen_fixed_points.iter().map(|e| e.defect).fold(f64::INFINITY, f64::min),
        ),
    )
}

/// 5. Collapsed-chain cylinders equal subsampled original cylinders.
fn collapse_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cylinders = 0;
    let mut chains = 0;
    let mut skipped = 0;
    for seed in 0.. {
        if chains == COLLAPSE_CHAINS {
            break;
        }
        let mut r = rng(1000 + seed);
        let n = 2 + (seed % 4) as usize;
        let gamma = 2 + (seed % 2) as usize;
        let problem = random_problem(&mut r, n, gamma, 0.05);
        let raw = Raw::of(&problem);
        let m = (seed as usize) % gamma;
        let alive = problem.boundary().survival_set(m);
        let mut start = vec![0.0; n];
        for (i, &x) in alive.iter().enumerate() {
            start[x] = 1.0 + i as f64;
        }
        let start = Distribution::from_mass(start).map_err(|e| e.to_string())?;
        let oracle = raw.subsampled_cylinders(start.weights(), m, 2);
        if oracle.is_empty() {
            // every path is absorbed within 2γ steps: nothing to condition on
            skipped += 1;
            continue;
        }
        chains += 1;
        let collapsed = collapsed_chain(&problem, m);
        let law: BTreeMap<Vec<usize>, f64> = collapsed
            .cylinder_law(&start, 2)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect();
        for (path, &v) in &law {
            worst = worst.max((v - oracle.get(path).copied().unwrap_or(0.0)).abs());
        }
        for (path, &v) in &oracle {
            worst = worst.max((v - law.get(path).copied().unwrap_or(0.0)).abs());
        }
        cylinders += law.len();
    }
    check(
        worst <= COLLAPSE_TOL,
        format!("{chains} chains ({skipped} skipped: certain absorption), {cylinders} cylinders, max deviation {worst:.2e} (tol {COLLAPSE_TOL:e})"),
    )
}

/// 6. Q-process kernels: row sums, closed form, finite-horizon limits.
fn qprocess_checks() -> Outcome {
    let mut worst_rows: f64 = 0.0;
    let mut worst_match: f64 = 0.0;
    for n in [3, 4, 5] {
        for p in [0.3, 0.5, 0.7] {
            let spec = RandomWalkSpec::moving(p, n);
            for start in [3, 2] {
                let problem = spec.problem(start).map_err(|e| e.to_string())?;
                let k = build_qprocess(&problem, start).map_err(|e| e.to_string())?;
                worst_rows = worst_rows.max(k.renormalization_deviation).max(k.max_row_deviation());
                let closed = qprocess_closed_form(&spec, start).map_err(|e| e.to_string())?;
                if closed.rows != k.rows {
                    return Err(format!("N={n} p={p} start={start}: kernel supports differ"));
                }
                for ph in 0..2 {
                    worst_match = worst_match.max((&k.slices[ph] - &closed.slices[ph]).amax());
                }
            }
        }
    }
    let mut worst_qlaw: f64 = 0.0;
    let mut cylinders = 0;
    for p in [0.5, 0.3] {
        for start in [3, 2] {
            let problem = RandomWalkSpec::moving(p, 3).problem(start).map_err(|e| e.to_string())?;
            let k = build_qprocess(&problem, start).map_err(|e| e.to_string())?;
            for z1 in 0..7 {
                for z2 in 0..7 {
                    let exact = finite_horizon_qlaw(&problem, start, &[z1, z2], QLAW_HORIZON).map_err(|e| e.to_string())?;
                    worst_qlaw = worst_qlaw.max((exact - k.cylinder_probability(start, &[z1, z2])).abs());
                    cylinders += 1;
                }
            }
        }
    }
    check(
        worst_rows <= ROW_SUM_TOL && worst_match <= KERNEL_MATCH_TOL && worst_qlaw <= QLAW_TOL,
        format!(
            "row-sum deviation {worst_rows:.2e} (tol {ROW_SUM_TOL:e}), closed form {worst_match:.2e} \
             (tol {KERNEL_MATCH_TOL:e}), {cylinders} cylinders at m={QLAW_HORIZON}: {worst_qlaw:.2e} (tol {QLAW_TOL:e})"
        ),
    )
}

/// 7. Survival coefficients: positivity, exact asymptotics, K = 2 exact law.
fn survival_coefficients() -> Outcome {
    let mut min_c = f64::INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in [0.5, 0.3] {
        for start in [3, 2] {
            let problem = RandomWalkSpec::moving(p, 3).problem(start).map_err(|e| e.to_string())?;
            let raw = Raw::of(&problem);
            let lifted = lift_chain(&problem);
            let decomp = decompose_classes(lifted.survivor_matrix()).map_err(|e| e.to_string())?;
            for class in decomp.classes.iter().filter(|c| !c.degenerate) {
                for &s in &class.states {
                    for n in 0..=SURVIVAL_HORIZON {
                        min_c = min_c.min(survival_coefficient(class, s, n).map_err(|e| e.to_string())?);
                    }
                    let (x, phase) = lifted.survivor_state(s);
                    let exact = raw.survival_from(x, phase, SURVIVAL_HORIZON);
                    let c = survival_coefficient(class, s, SURVIVAL_HORIZON).unwrap();
                    let ratio = exact / (c * class.rho.powi(SURVIVAL_HORIZON as i32));
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
            }
        }
    }
    let k2 = RandomWalkSpec::fixed(0.5, 2).problem(1).map_err(|e| e.to_string())?;
    let exact_k2 = (0..=SURVIVAL_HORIZON).all(|n| survival_probability(&k2, n) == 0.5f64.powi(n as i32));
    check(
        min_c > 0.0 && lo >= SURVIVAL_BAND.0 && hi <= SURVIVAL_BAND.1 && exact_k2,
        format!(
            "min c_n(x) = {min_c:.4}, P_x(τ>{SURVIVAL_HORIZON})/(c ρ^n) ∈ [{lo:.6}, {hi:.6}] \
             (band [{}, {}]), K=2 P_1(τ>n) = 2^-n exactly: {exact_k2}",
            SURVIVAL_BAND.0, SURVIVAL_BAND.1
        ),
    )
}

fn rotation_problem() -> AbsorbedChainProblem {
    // a 3-cycle with leaks: one class of period 3
    let parts = ProblemParts::labeled(
        &["a", "b", "c", "dead"],
        &[
            vec![0.0, 0.9, 0.0, 0.1],
            vec![0.0, 0.0, 0.8, 0.2],
            vec![0.7, 0.0, 0.0, 0.3],
            vec![0.0, 0.0, 0.0, 1.0],
        ],
        &[vec!["dead"]],
        &[("a", 1.0)],
    )
    .unwrap();
    AbsorbedChainProblem::new(parts).unwrap()
}

/// 8. Peripheral coefficients of δ_x equal w_k(x).
fn eigenprojection() -> Outcome {
    let mut problems = vec![
        RandomWalkSpec::fixed(0.5, 2).problem(1).unwrap(),
        RandomWalkSpec::fixed(0.3, 5).problem(1).unwrap(),
        rotation_problem(),
    ];
    for (n, p) in [(3, 0.5), (3, 0.3), (4, 0.5), (5, 0.7)] {
        problems.push(RandomWalkSpec::moving(p, n).problem(3).unwrap());
    }
    let mut r = rng(77);
    for i in 0..10 {
        problems.push(random_problem(&mut r, 3 + i % 3, 1 + i % 3, 0.05));
    }
    let mut worst: f64 = 0.0;
    let mut classes = 0;
    let mut max_period = 0;
    for problem in &problems {
        let lifted = lift_chain(problem);
        let decomp = decompose_classes(lifted.survivor_matrix()).map_err(|e| e.to_string())?;
        let active: Vec<&IrreducibleClass> = decomp.classes.iter().filter(|c| !c.degenerate).collect();
        for class in active {
            let system = peripheral_system(class);
            for &s in &class.states {
                let report = verify_eigenprojection(class, &system, s).map_err(|e| e.to_string())?;
                worst = worst.max(report.residual);
            }
            classes += 1;
            max_period = max_period.max(class.period);
        }
    }
    check(
        worst <= EIGENPROJECTION_TOL,
        format!(
            "{classes} classes (periods up to {max_period}), max |α_k(x) − w_k(x)| = {worst:.2e} (tol {EIGENPROJECTION_TOL:e})"
        ),
    )
}

/// A fast-mixing chain with weak killing and a 2-periodic boundary.
pub fn weakly_killed_chain() -> AbsorbedChainProblem {
    let parts = ProblemParts::labeled(
        &["a", "b", "c", "d", "e", "dead"],
        &[
            vec![0.300, 0.250, 0.200, 0.244, 0.003, 0.003],
            vec![0.200, 0.300, 0.250, 0.245, 0.003, 0.002],
            vec![0.250, 0.200, 0.300, 0.244, 0.002, 0.004],
            vec![0.100, 0.200, 0.300, 0.394, 0.003, 0.003],
            vec![0.350, 0.250, 0.200, 0.197, 0.000, 0.003],
            vec![0.000, 0.000, 0.000, 0.000, 0.000, 1.000],
        ],
        &[vec!["dead"], vec!["e", "dead"]],
        &[("a", 0.5), ("c", 0.5)],
    )
    .unwrap();
    AbsorbedChainProblem::new(parts).unwrap()
}

/// 9. Monte Carlo mean ratio against φ_max(f), reproducible across shard layouts.
fn monte_carlo() -> Outcome {
    let problem = weakly_killed_chain();
    let f = vec![0.0, 1.0, 2.0, 3.0, 4.0, 0.0];
    // start from the phase-0 part of the Q-process stationary law, which
    // removes the initial transient from the finite-n time average
    let qed = quasi_ergodic_distribution(&problem).map_err(|e| e.to_string())?;
    let lifted = lift_chain(&problem);
    let mut start = vec![0.0; problem.n_states()];
    for (i, &w) in qed.lifted_eta.iter().enumerate() {
        let (x, k) = lifted.survivor_state(i);
        if k == 0 {
            start[x] += w;
        }
    }
    let start = Distribution::from_mass(start).map_err(|e| e.to_string())?;
    let problem = problem.with_initial(start).map_err(|e| e.to_string())?;
    let phi = qed.phi(&f);
    let config = SimConfig::new(20_240_601, MC_PATHS, MC_HORIZON);
    let one = simulate(&problem, &f, &config).map_err(|e| e.to_string())?;
    let sharded = simulate(&problem, &f, &config.with_shards(7)).map_err(|e| e.to_string())?;
    let deterministic = one.survivors == sharded.survivors
        && one.law_counts == sharded.law_counts
        && one.mean_ratio == sharded.mean_ratio;
    let est = one.mean_ratio(MC_HORIZON).map_err(|e| e.to_string())?;
    let z = est.z_score(phi);
    let exact = exact_mean_ratio(&problem, &f, MC_HORIZON).map_err(|e| e.to_string())?;
    check(
        est.survivors >= MC_MIN_SURVIVORS && z <= MC_Z && deterministic,
        format!(
            "{} survivors at n={MC_HORIZON}, estimate {:.5} ± {:.5}, φ = {phi:.5} (|z| = {z:.2}, limit {MC_Z}); \
             exact finite-n value {exact:.5}; identical across 1 and 7 shards: {deterministic}",
            est.survivors, est.estimate, est.se
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 spectrum golden", spectrum_golden),
        ("2 QED cross-validation (moving boundary)", qed_cross_validation),
        ("3 p-independence of the moving QED", p_independence),
        ("4 non-existence of QLD and QSD (N=3)", non_existence),
        ("5 collapse identity", collapse_identity),
        ("6 Q-process", qprocess_checks),
        ("7 survival coefficient", survival_coefficients),
        ("8 eigenprojection", eigenprojection),
        ("9 Monte Carlo concordance", monte_carlo),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
