//! Conditioned laws `P_μ(X_n ∈ · | τ > n)` and related objects.
//!
//! The one-step map at phase `m` pushes a law forward by `P` and conditions
//! on landing outside `A_m`; the conditioned law at time `n` is the
//! composition of these maps over phases `1..=n`. This module also builds
//! the γ-step collapsed chain, extracts the limit-point cycle of the
//! conditioned laws, certifies the absence of a common fixed point, and
//! evaluates the conditioned time averages exactly by a backward recursion
//! on the lifted survivor matrix.

use nalgebra::{DMatrix, DVector};

use crate::chain::{lift_chain, survivor_restriction, AbsorbedChainProblem, Distribution};
use crate::ergodic;
use crate::error::{Error, Result};
use crate::spectral::decompose_classes;

pub const CYCLE_TV_TOL: f64 = 1e-12;
pub const CYCLE_MAX_ITER: usize = 100_000;
/// Two cycle elements closer than this in TV are treated as equal.
const CYCLE_DEDUP_TOL: f64 = 1e-9;
/// Defects below this count as fixed points.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// `f_m(μ) = P_μ(X_1 ∈ · | X_1 ∉ A_m)`.
pub fn conditional_step(problem: &AbsorbedChainProblem, mu: &Distribution, phase: usize) -> Result<Distribution> {
    let p = problem.kernel().matrix();
    let mass = p.tr_mul(&DVector::from_column_slice(mu.weights()));
    let mass: Vec<f64> = mass
        .iter()
        .enumerate()
        .map(|(y, &w)| if problem.boundary().is_killed(phase, y) { 0.0 } else { w })
        .collect();
    Distribution::from_mass(mass).map_err(|e| match e {
        Error::NullEvent(_) => Error::NullEvent(format!(
            "no mass survives the step into phase {}",
            phase % problem.gamma()
        )),
        other => other,
    })
}

/// `P_μ(X_n ∈ · | τ > n) = f_n ∘ … ∘ f_1(μ)`.
pub fn conditional_law(problem: &AbsorbedChainProblem, n: usize) -> Result<Distribution> {
    let mut mu = problem.initial().clone();
    for k in 1..=n {
        mu = conditional_step(problem, &mu, k)?;
    }
    Ok(mu)
}

/// Conditioned laws for `n = 0..=horizon`.
pub fn conditional_laws(problem: &AbsorbedChainProblem, horizon: usize) -> Result<Vec<Distribution>> {
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(problem.initial().clone());
    for k in 1..=horizon {
        let next = conditional_step(problem, out.last().unwrap(), k)?;
        out.push(next);
    }
    Ok(out)
}

/// Same law computed as `(μ ⊗ δ_0) Q^n` on the lifted chain, projected and normalized.
pub fn conditional_law_lifted(problem: &AbsorbedChainProblem, n: usize) -> Result<Distribution> {
    let lifted = lift_chain(problem);
    let q = lifted.survivor_matrix();
    let mut v = DVector::from_vec(lifted.embed_initial(problem.initial()));
    for _ in 0..n {
        v = q.tr_mul(&v);
        let s = v.sum();
        if s <= 0.0 {
            return Err(Error::NullEvent(format!("survival to time {n} has probability zero")));
        }
        v /= s;
    }
    Distribution::from_mass(lifted.project(v.as_slice()))
}

/// `P_μ(τ > n)` by lifted matrix powers.
pub fn survival_probability(problem: &AbsorbedChainProblem, n: usize) -> f64 {
    let lifted = lift_chain(problem);
    let q = lifted.survivor_matrix();
    let mut v = DVector::from_vec(lifted.embed_initial(problem.initial()));
    for _ in 0..n {
        v = q.tr_mul(&v);
    }
    v.sum()
}

/// The γ-step chain on `F = E_m`: `p(x, A) = P_x(X_γ ∈ A, survive phases m+1..=m+γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedChain {
    pub base_phase: usize,
    /// States of `F`, ascending.
    pub survivors: Vec<usize>,
    /// `|F| × |F|` surviving γ-step kernel.
    pub kernel: DMatrix<f64>,
    /// Mass sent to the cemetery `A_m`.
    pub cemetery: Vec<f64>,
}

pub fn collapsed_chain(problem: &AbsorbedChainProblem, base_phase: usize) -> CollapsedChain {
    let p = problem.kernel().matrix();
    let n = p.nrows();
    let gamma = problem.gamma();
    let mut m = DMatrix::<f64>::identity(n, n);
    for s in 1..=gamma {
        m = &m * p;
        let mask = problem.boundary().killing_mask(base_phase + s);
        for (y, &killed) in mask.iter().enumerate() {
            if killed {
                m.column_mut(y).fill(0.0);
            }
        }
    }
    let survivors = problem.boundary().survival_set(base_phase);
    let kernel = m.select_rows(&survivors).select_columns(&survivors);
    let cemetery = kernel
        .row_iter()
        .map(|r| (1.0 - r.sum()).max(0.0))
        .collect();
    CollapsedChain {
        base_phase: base_phase % gamma,
        survivors,
        kernel,
        cemetery,
    }
}

impl CollapsedChain {
    pub fn position(&self, x: usize) -> Option<usize> {
        self.survivors.binary_search(&x).ok()
    }

    /// `P_start(Z_0 = z_0, …, Z_n = z_n)` for a path of base-state indices;
    /// zero if the path leaves `F`.
    pub fn cylinder_mass(&self, start: &Distribution, path: &[usize]) -> f64 {
        let Some((&z0, rest)) = path.split_first() else {
            return 1.0;
        };
        let Some(mut prev) = self.position(z0) else {
            return 0.0;
        };
        let mut mass = start.get(z0);
        for &z in rest {
            let Some(next) = self.position(z) else {
                return 0.0;
            };
            mass *= self.kernel[(prev, next)];
            prev = next;
        }
        mass
    }

    /// `P_start(τ̃ > n)`.
    pub fn survival(&self, start: &Distribution, n: usize) -> f64 {
        let mut v = DVector::from_iterator(self.survivors.len(), self.survivors.iter().map(|&x| start.get(x)));
        for _ in 0..n {
            v = self.kernel.tr_mul(&v);
        }
        v.sum()
    }

    /// All surviving `(n+1)`-cylinders `(z_0..z_n)` with their conditioned probabilities.
    pub fn cylinder_law(&self, start: &Distribution, n: usize) -> Result<Vec<(Vec<usize>, f64)>> {
        let z = self.survival(start, n);
        if z <= 0.0 {
            return Err(Error::NullEvent(format!("collapsed chain dies before step {n}")));
        }
        let f = self.survivors.len();
        let total = f.pow((n + 1) as u32);
        let mut out = Vec::with_capacity(total);
        for code in 0..total {
            let mut c = code;
            let path: Vec<usize> = (0..=n)
                .map(|_| {
                    let s = self.survivors[c % f];
                    c /= f;
                    s
                })
                .collect();
            let mass = self.cylinder_mass(start, &path);
            out.push((path, mass / z));
        }
        Ok(out)
    }
}

/// Limit-point cycle of the conditioned laws.
#[derive(Debug, Clone)]
pub struct QldCycle {
    /// Minimal repeating cycle; `cycle[i]` is the limit along times `≡ times[i]`.
    pub cycle: Vec<Distribution>,
    pub times: Vec<usize>,
    /// Period of the dominant lifted class (the number of steps iterated per fixed-point update).
    pub lifted_period: usize,
    pub iterations: usize,
    /// TV change of the last fixed-point update.
    pub fixed_point_tv: f64,
    /// `TV(cycle[i], cycle[i+1 mod len])`.
    pub consecutive_tv: Vec<f64>,
    pub max_pairwise_tv: f64,
}

impl QldCycle {
    pub fn has_quasi_limiting_distribution(&self) -> bool {
        self.cycle.len() == 1
    }

    pub fn verdict(&self) -> &'static str {
        if self.has_quasi_limiting_distribution() {
            "quasi-limiting distribution exists"
        } else {
            "no quasi-limiting distribution"
        }
    }
}

fn advance(problem: &AbsorbedChainProblem, mu: &Distribution, from: usize, steps: usize) -> Result<Distribution> {
    let mut mu = mu.clone();
    for t in from + 1..=from + steps {
        mu = conditional_step(problem, &mu, t)?;
    }
    Ok(mu)
}

/// Iterates the period-fold composed map to a fixed point and returns the
/// cycle of limit points it generates.
pub fn qld_cycle(problem: &AbsorbedChainProblem) -> Result<QldCycle> {
    let lifted = lift_chain(problem);
    let decomp = decompose_classes(lifted.survivor_matrix())?;
    let mu0 = lifted.embed_initial(problem.initial());
    let selection = ergodic::select_dominant(&decomp, &mu0)?;
    let t = decomp.classes[selection.selected.expect("dominant class is unique")].period;
    let gamma = problem.gamma();
    let period = t / gcd(t, gamma) * gamma;

    let mut mu = problem.initial().clone();
    let mut time = 0;
    let mut iterations = 0;
    let mut tv = f64::INFINITY;
    while iterations < CYCLE_MAX_ITER {
        let next = advance(problem, &mu, time, period)?;
        tv = next.tv(&mu);
        mu = next;
        time += period;
        iterations += 1;
        if tv < CYCLE_TV_TOL {
            break;
        }
    }
    if tv >= CYCLE_TV_TOL {
        return Err(Error::NonConvergence {
            what: "conditioned-law fixed point".into(),
            iterations,
            residual: tv,
        });
    }

    let mut full = Vec::with_capacity(period);
    let mut cur = mu;
    for s in 0..period {
        cur = conditional_step(problem, &cur, time + s + 1)?;
        full.push(cur.clone());
    }
    let len = (1..=period)
        .filter(|d| period % d == 0)
        .find(|&d| (0..period).all(|i| full[i].tv(&full[(i + d) % period]) < CYCLE_DEDUP_TOL))
        .unwrap_or(period);
    let cycle: Vec<Distribution> = full.into_iter().take(len).collect();
    let times = (1..=len).map(|s| time + s).collect();
    let consecutive_tv = (0..len).map(|i| cycle[i].tv(&cycle[(i + 1) % len])).collect();
    let mut max_pairwise_tv: f64 = 0.0;
    for i in 0..len {
        for j in i + 1..len {
            max_pairwise_tv = max_pairwise_tv.max(cycle[i].tv(&cycle[j]));
        }
    }
    Ok(QldCycle {
        cycle,
        times,
        lifted_period: period,
        iterations,
        fixed_point_tv: tv,
        consecutive_tv,
        max_pairwise_tv,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `max_m TV(f_m(μ), μ)` over the phases; a null event counts as defect 1.
pub fn fixed_point_defect(problem: &AbsorbedChainProblem, mu: &Distribution) -> f64 {
    (0..problem.gamma())
        .map(|m| conditional_step(problem, mu, m).map_or(1.0, |d| d.tv(mu)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct EigenFixedPoint {
    pub phase: usize,
    pub law: Distribution,
    /// `TV(f_phase(ν), ν)`.
    pub own_defect: f64,
    /// Largest defect over all phases.
    pub defect: f64,
}

/// Evidence that no law is simultaneously fixed by every phase map.
#[derive(Debug, Clone)]
pub struct NoQsdCertificate {
    /// `∩_m E_m`, the only possible support of a common fixed point.
    pub common_support: Vec<usize>,
    pub grid_step: f64,
    pub grid_points: usize,
    pub grid_min_defect: f64,
    pub grid_argmin: Option<Distribution>,
    /// Perron laws of the fixed-boundary chains that are fixed points of their own phase map.
    pub eigen_fixed_points: Vec<EigenFixedPoint>,
    pub no_common_fixed_point: bool,
}

const MAX_GRID_POINTS: usize = 50_000_000;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Grid search over the simplex on `∩_m E_m` (resolution `grid_step`) plus
/// the Perron fixed points of each fixed-boundary chain.
pub fn no_qsd_certificate(problem: &AbsorbedChainProblem, grid_step: f64) -> Result<NoQsdCertificate> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidArgument("grid step must lie in (0, 1]".into()));
    }
    let n = problem.n_states();
    let gamma = problem.gamma();
    let common: Vec<usize> = (0..n)
        .filter(|&x| (0..gamma).all(|m| !problem.boundary().is_killed(m, x)))
        .collect();
    let r = (1.0 / grid_step).round() as usize;
    let d = common.len();
    let mut grid_min_defect = 1.0f64;
    let mut grid_argmin = None;
    let mut grid_points = 0;
    if d > 0 {
        let count = binomial(r + d - 1, d - 1);
        if count > MAX_GRID_POINTS {
            return Err(Error::InvalidArgument(format!(
                "grid of {count} points over {d} common survivors is too large"
            )));
        }
        let mut parts = vec![0usize; d];
        for_each_composition(&mut parts, r, &mut |parts| {
            let mut mass = vec![0.0; n];
            for (k, &x) in common.iter().enumerate() {
                mass[x] = parts[k] as f64 / r as f64;
            }
            let mu = Distribution::from_mass(mass).expect("grid point has unit mass");
            let defect = fixed_point_defect(problem, &mu);
            grid_points += 1;
            if grid_argmin.is_none() || defect < grid_min_defect {
                grid_min_defect = defect;
                grid_argmin = Some(mu);
            }
        });
    }

    let p = problem.kernel().matrix();
    let mut eigen_fixed_points = Vec::new();
    for phase in 0..gamma {
        let restriction = survivor_restriction(p, problem.boundary().killing_mask(phase))?;
        let decomp = decompose_classes(&restriction.matrix)?;
        for class in decomp.classes.iter().filter(|c| !c.degenerate) {
            let mut mass = vec![0.0; n];
            for (i, &s) in class.states.iter().enumerate() {
                mass[restriction.survivors[s]] = class.nu[i];
            }
            let law = Distribution::from_mass(mass)?;
            let own_defect = conditional_step(problem, &law, phase).map_or(1.0, |d| d.tv(&law));
            if own_defect < FIXED_POINT_TOL {
                let defect = fixed_point_defect(problem, &law);
                eigen_fixed_points.push(EigenFixedPoint {
                    phase,
                    law,
                    own_defect,
                    defect,
                });
            }
        }
    }

    let threshold = 1e-6;
    let no_common_fixed_point =
        grid_min_defect > threshold && eigen_fixed_points.iter().all(|e| e.defect > threshold);
    Ok(NoQsdCertificate {
        common_support: common,
        grid_step,
        grid_points,
        grid_min_defect,
        grid_argmin,
        eigen_fixed_points,
        no_common_fixed_point,
    })
}

/// Calls `visit` with every weak composition of `total` into `parts.len()` parts.
fn for_each_composition(parts: &mut [usize], total: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(parts: &mut [usize], i: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
        if i + 1 == parts.len() {
            parts[i] = left;
            visit(parts);
            return;
        }
        for v in 0..=left {
            parts[i] = v;
            rec(parts, i + 1, left - v, visit);
        }
    }
    if !parts.is_empty() {
        rec(parts, 0, total, visit);
    }
}

/// Incremental exact evaluation of `E_μ[(1/n) Σ_{k<n} f(X_k) | τ > n]`.
///
/// Keeps `u_n = Q^n 1` and `s_n = D_f u_n + Q s_{n−1}` on the lifted
/// survivor matrix, rescaled jointly each step.
#[derive(Debug, Clone)]
pub struct MeanRatioOracle {
    q: DMatrix<f64>,
    f: DVector<f64>,
    mu: DVector<f64>,
    u: DVector<f64>,
    s: DVector<f64>,
    n: usize,
}

impl MeanRatioOracle {
    pub fn new(problem: &AbsorbedChainProblem, f: &[f64]) -> Result<Self> {
        if f.len() != problem.n_states() {
            return Err(Error::InvalidArgument(format!(
                "f has {} values for {} states",
                f.len(),
                problem.n_states()
            )));
        }
        let lifted = lift_chain(problem);
        let m = lifted.n_survivors();
        let fl = DVector::from_fn(m, |i, _| f[lifted.survivor_state(i).0]);
        Ok(Self {
            q: lifted.survivor_matrix().clone(),
            f: fl,
            mu: DVector::from_vec(lifted.embed_initial(problem.initial())),
            u: DVector::from_element(m, 1.0),
            s: DVector::zeros(m),
            n: 0,
        })
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn advance(&mut self) {
        let u = &self.q * &self.u;
        let s = u.component_mul(&self.f) + &self.q * &self.s;
        let c = u.amax();
        if c > 0.0 {
            self.u = u / c;
            self.s = s / c;
        } else {
            self.u = u;
            self.s = s;
        }
        self.n += 1;
    }

    /// Value at the current horizon (which must be at least 1).
    pub fn value(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let den = self.mu.dot(&self.u);
        if den <= 0.0 {
            return Err(Error::NullEvent(format!("survival to time {} has probability zero", self.n)));
        }
        Ok(self.mu.dot(&self.s) / (self.n as f64 * den))
    }
}

pub fn exact_mean_ratio(problem: &AbsorbedChainProblem, f: &[f64], n: usize) -> Result<f64> {
    let mut oracle = MeanRatioOracle::new(problem, f)?;
    for _ in 0..n {
        oracle.advance();
    }
    oracle.value()
}

/// Values for horizons `1..=n`.
pub fn mean_ratio_series(problem: &AbsorbedChainProblem, f: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut oracle = MeanRatioOracle::new(problem, f)?;
    (1..=n)
        .map(|_| {
            oracle.advance();
            oracle.value()
        })
        .collect()
}
