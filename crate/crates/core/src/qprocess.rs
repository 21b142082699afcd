//! The Q-process: the chain conditioned never to be absorbed.
//!
//! Under a γ-periodic boundary it is a time-inhomogeneous chain whose step
//! from time `n − 1` to `n` uses
//! `K_n(y, z) = ξ(z, n̄) P(y, z) / (ρ ξ(y, n−1))`, with `(ρ, ξ)` the Perron data
//! of the lifted class of the starting point. The family is γ-periodic in `n`.

use nalgebra::DMatrix;

use crate::chain::{lift_chain, AbsorbedChainProblem, LiftedChain};
use crate::ergodic::classify;
use crate::error::{Error, Result};
use crate::spectral::decompose_classes;

/// Negative or excess mass below this is clipped silently; the deviation is kept.
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QProcessKernel {
    pub gamma: usize,
    /// Size of the base state space; slices are indexed by base states.
    pub n_states: usize,
    pub rho: f64,
    /// `slices[k]` drives the step into phase `k`, i.e. `K_n` for `n ≡ k mod γ`.
    pub slices: Vec<DMatrix<f64>>,
    /// `rows[k][y]`: whether `(y, k − 1)` belongs to the class, so that row `y`
    /// of `slices[k]` is a probability vector.
    pub rows: Vec<Vec<bool>>,
    /// Largest row-sum correction applied while renormalizing.
    pub renormalization_deviation: f64,
    pub warnings: Vec<String>,
}

impl QProcessKernel {
    /// `K_n(y, z)` for the step from time `n − 1` to `n` (`n ≥ 1`).
    pub fn transition(&self, n: usize, y: usize, z: usize) -> f64 {
        self.slices[n % self.gamma][(y, z)]
    }

    /// Slice driving the step into `phase`.
    pub fn slice(&self, phase: usize) -> &DMatrix<f64> {
        &self.slices[phase % self.gamma]
    }

    /// Homogeneous γ-step kernel started at `base_phase`:
    /// `K_{m+1} K_{m+2} ⋯ K_{m+γ}`.
    pub fn homogenized(&self, base_phase: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.n_states, self.n_states);
        for s in 1..=self.gamma {
            out *= self.slice(base_phase + s);
        }
        out
    }

    /// `Q_x(X_1 = path[0], ..., X_k = path[k−1])`.
    pub fn cylinder_probability(&self, x: usize, path: &[usize]) -> f64 {
        let mut prob = 1.0;
        let mut y = x;
        for (i, &z) in path.iter().enumerate() {
            prob *= self.transition(i + 1, y, z);
            y = z;
        }
        prob
    }

    /// Largest `|Σ_z K(y, z) − 1|` over active rows.
    pub fn max_row_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, slice) in self.slices.iter().enumerate() {
            for y in 0..self.n_states {
                if self.rows[k][y] {
                    worst = worst.max((slice.row(y).sum() - 1.0).abs());
                }
            }
        }
        worst
    }
}

/// Q-process kernel for a start at `x` at phase 0.
pub fn build_qprocess(problem: &AbsorbedChainProblem, x: usize) -> Result<QProcessKernel> {
    if x >= problem.n_states() {
        return Err(Error::InvalidArgument(format!("state index {x} out of range")));
    }
    let lifted = lift_chain(problem);
    let Some(pos) = lifted.survivor_position(x, 0) else {
        return Err(Error::NotInClass(format!(
            "state {} is absorbed at phase 0",
            problem.space().label(x)
        )));
    };
    let decomp = decompose_classes(lifted.survivor_matrix())?;
    let class_idx = decomp.class_index(pos);
    let class = &decomp.classes[class_idx];
    if class.degenerate || class.rho == 0.0 {
        return Err(Error::NullEvent(format!(
            "no path from {} survives forever",
            problem.space().label(x)
        )));
    }
    let mut mu = vec![0.0; lifted.n_survivors()];
    mu[pos] = 1.0;
    let mut warnings = classify(&decomp, &mu).warnings;

    let gamma = problem.gamma();
    let n = problem.n_states();
    // ξ on lifted survivors, zero off-class
    let mut xi = vec![0.0; lifted.n_survivors()];
    for (i, &s) in class.states.iter().enumerate() {
        xi[s] = class.xi[i];
    }
    let xi_at = |y: usize, phase: usize| {
        lifted
            .survivor_position(y, phase % gamma)
            .map_or(0.0, |i| xi[i])
    };
    let p = problem.kernel().matrix();
    let mut slices = Vec::with_capacity(gamma);
    let mut rows = Vec::with_capacity(gamma);
    let mut deviation: f64 = 0.0;
    for phase in 0..gamma {
        let prev = (phase + gamma - 1) % gamma;
        let mut k = DMatrix::zeros(n, n);
        let mut active = vec![false; n];
        for y in 0..n {
            let xy = xi_at(y, prev);
            if xy <= 0.0 {
                continue;
            }
            active[y] = true;
            for z in 0..n {
                let v = xi_at(z, phase) * p[(y, z)] / (class.rho * xy);
                k[(y, z)] = v.max(0.0);
            }
            let sum = k.row(y).sum();
            deviation = deviation.max((sum - 1.0).abs());
            k.row_mut(y).unscale_mut(sum);
        }
        slices.push(k);
        rows.push(active);
    }
    if deviation > CLIP_TOL {
        warnings.push(format!("kernel rows renormalized, largest correction {deviation:.3e}"));
    }
    Ok(QProcessKernel {
        gamma,
        n_states: n,
        rho: class.rho,
        slices,
        rows,
        renormalization_deviation: deviation,
        warnings,
    })
}

/// `u_k = Q^k 1` on the lifted survivors, kept at unit max-norm with the log
/// of the scale accumulated separately.
fn scaled_survival(lifted: &LiftedChain, steps: usize) -> (Vec<f64>, f64) {
    let q = lifted.survivor_matrix();
    let mut u = nalgebra::DVector::from_element(lifted.n_survivors(), 1.0);
    let mut log_scale = 0.0;
    for _ in 0..steps {
        u = q * u;
        let m = u.amax();
        if m == 0.0 {
            return (u.iter().copied().collect(), f64::NEG_INFINITY);
        }
        u /= m;
        log_scale += m.ln();
    }
    (u.iter().copied().collect(), log_scale)
}

/// `P_x(X_1 = c_1, ..., X_k = c_k | τ > m)` computed exactly on the lifted chain.
pub fn finite_horizon_qlaw(problem: &AbsorbedChainProblem, x: usize, cylinder: &[usize], m: usize) -> Result<f64> {
    if m < cylinder.len() {
        return Err(Error::InvalidArgument(format!(
            "horizon {m} is shorter than the cylinder ({})",
            cylinder.len()
        )));
    }
    let lifted = lift_chain(problem);
    let gamma = problem.gamma();
    let Some(start) = lifted.survivor_position(x, 0) else {
        return Err(Error::NullEvent(format!(
            "state {} is absorbed at phase 0",
            problem.space().label(x)
        )));
    };
    let (u_m, log_m) = scaled_survival(&lifted, m);
    if u_m[start] == 0.0 || log_m == f64::NEG_INFINITY {
        return Err(Error::NullEvent(format!("P(τ > {m}) = 0 from the given start")));
    }
    let p = problem.kernel().matrix();
    let mut path_prob = 1.0;
    let mut y = x;
    let mut end = start;
    for (i, &z) in cylinder.iter().enumerate() {
        let Some(pos) = lifted.survivor_position(z, (i + 1) % gamma) else {
            return Ok(0.0);
        };
        path_prob *= p[(y, z)];
        y = z;
        end = pos;
    }
    if path_prob == 0.0 {
        return Ok(0.0);
    }
    let (u_rest, log_rest) = scaled_survival(&lifted, m - cylinder.len());
    Ok(path_prob * u_rest[end] / u_m[start] * (log_rest - log_m).exp())
}
