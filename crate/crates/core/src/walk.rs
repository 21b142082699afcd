//! The ±1 random walk: closed-form spectrum, Perron vectors and QSD for a
//! fixed interval, and the 2-periodic moving example on `{0..2N}`.
//!
//! The walk steps up with probability `1 − p` and down with probability `p`.
//! It is truncated to the states that can matter: `{0..K+1}` for the fixed
//! interval and `{0..2N}` for the moving boundary, absorbing states carrying a
//! self-loop (they are killed anyway).

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::chain::{AbsorbedChainProblem, ProblemParts, StateSpace};
use crate::error::{Error, Result};
use crate::ergodic::MeanRatioDistribution;
use crate::qprocess::QProcessKernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkSize {
    /// Interior `{1..K}`, killed at `{0, K+1}`.
    Fixed(usize),
    /// `E = {0..2N}`, γ = 2, `A_even = {0, 2N}`, `A_odd = {0, 1, 2N−1, 2N}`.
    Moving(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkSpec {
    pub p: f64,
    pub size: WalkSize,
}

impl RandomWalkSpec {
    pub fn fixed(p: f64, k: usize) -> Self {
        Self { p, size: WalkSize::Fixed(k) }
    }

    pub fn moving(p: f64, n: usize) -> Self {
        Self { p, size: WalkSize::Moving(n) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidArgument(format!("p = {} must lie in (0, 1)", self.p)));
        }
        match self.size {
            WalkSize::Fixed(0) => Err(Error::InvalidArgument("K must be at least 1".into())),
            WalkSize::Moving(n) if n < 2 => Err(Error::InvalidArgument("N must be at least 2".into())),
            _ => Ok(()),
        }
    }

    /// Number of states of the truncated walk.
    pub fn n_states(&self) -> usize {
        match self.size {
            WalkSize::Fixed(k) => k + 2,
            WalkSize::Moving(n) => 2 * n + 1,
        }
    }

    pub fn killing_sets(&self) -> Vec<Vec<usize>> {
        match self.size {
            WalkSize::Fixed(k) => vec![vec![0, k + 1]],
            WalkSize::Moving(n) => vec![vec![0, 2 * n], vec![0, 1, 2 * n - 1, 2 * n]],
        }
    }

    pub fn kernel(&self) -> DMatrix<f64> {
        let m = self.n_states();
        let mut p = DMatrix::zeros(m, m);
        p[(0, 0)] = 1.0;
        p[(m - 1, m - 1)] = 1.0;
        for x in 1..m - 1 {
            p[(x, x + 1)] = 1.0 - self.p;
            p[(x, x - 1)] = self.p;
        }
        p
    }

    /// The walk started from `δ_start`.
    pub fn problem(&self, start: usize) -> Result<AbsorbedChainProblem> {
        self.problem_with_initial(&[(start, 1.0)])
    }

    /// The walk started from a weighted mix of states.
    pub fn problem_with_initial(&self, initial: &[(usize, f64)]) -> Result<AbsorbedChainProblem> {
        self.validate()?;
        let m = self.n_states();
        let mut mu = vec![0.0; m];
        for &(x, w) in initial {
            if x >= m {
                return Err(Error::InvalidArgument(format!("state {x} outside 0..{}", m - 1)));
            }
            mu[x] += w;
        }
        let total: f64 = mu.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("initial weights must have positive mass".into()));
        }
        mu.iter_mut().for_each(|w| *w /= total);
        AbsorbedChainProblem::new(ProblemParts {
            labels: StateSpace::indexed(m).labels().to_vec(),
            kernel: self.kernel(),
            killing_sets: self.killing_sets(),
            initial: mu,
        })
    }
}

/// `Q_K`: tridiagonal, sub-diagonal `p`, super-diagonal `1 − p`.
pub fn walk_matrix(k: usize, p: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| {
        if j == i + 1 {
            1.0 - p
        } else if i == j + 1 {
            p
        } else {
            0.0
        }
    })
}

/// Closed-form eigen-data of `Q_K`, with `j = 1..K` stored at index `j − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevEigenSystem {
    pub k: usize,
    pub p: f64,
    /// `λ_j = 2√(p(1−p)) cos(jπ/(K+1))`, decreasing.
    pub eigenvalues: Vec<f64>,
    /// `x_j(i) = √(p/(1−p))^{i−1} sin(ijπ/(K+1)) / sin(jπ/(K+1))`.
    pub right_vectors: Vec<Vec<f64>>,
    /// Left eigenvectors `((1−p)/p)^{(i−1)/2} sin(ijπ/(K+1))`.
    pub left_vectors: Vec<Vec<f64>>,
    /// Left Perron vector, `⟨ν,1⟩ = 1`.
    pub nu: Vec<f64>,
    /// Right Perron vector, `⟨ν,ξ⟩ = 1`.
    pub xi: Vec<f64>,
}

pub fn closed_form_spectrum(k: usize, p: f64) -> ChebyshevEigenSystem {
    let theta = PI / (k as f64 + 1.0);
    let s = 2.0 * (p * (1.0 - p)).sqrt();
    let up = (p / (1.0 - p)).sqrt();
    let eigenvalues = (1..=k).map(|j| s * (j as f64 * theta).cos()).collect();
    let right_vectors = (1..=k)
        .map(|j| {
            let sj = (j as f64 * theta).sin();
            (1..=k)
                .map(|i| up.powi(i as i32 - 1) * (i as f64 * j as f64 * theta).sin() / sj)
                .collect()
        })
        .collect();
    let left_vectors: Vec<Vec<f64>> = (1..=k)
        .map(|j| {
            (1..=k)
                .map(|i| up.powi(1 - i as i32) * (i as f64 * j as f64 * theta).sin())
                .collect()
        })
        .collect();
    let raw_nu = &left_vectors[0];
    let total: f64 = raw_nu.iter().sum();
    let nu: Vec<f64> = raw_nu.iter().map(|v| v / total).collect();
    let raw_xi: Vec<f64> = (1..=k).map(|i| up.powi(i as i32 - 1) * (i as f64 * theta).sin()).collect();
    let pair: f64 = nu.iter().zip(&raw_xi).map(|(a, b)| a * b).sum();
    let xi = raw_xi.iter().map(|v| v / pair).collect();
    ChebyshevEigenSystem {
        k,
        p,
        eigenvalues,
        right_vectors,
        left_vectors,
        nu,
        xi,
    }
}

/// `P_0, ..., P_K` at `x`, where `P_K(X) = det(Q_K − X I)`:
/// `P_0 = 1`, `P_1 = −X`, `P_{K+2} = −X P_{K+1} − p(1−p) P_K`.
pub fn charpoly_values(k: usize, p: f64, x: f64) -> Vec<f64> {
    let c = p * (1.0 - p);
    let mut out = vec![1.0, -x];
    for i in 2..=k {
        out.push(-x * out[i - 1] - c * out[i - 2]);
    }
    out.truncate(k + 1);
    out
}

/// Number of roots of `P_K` below `x`, from the ratios `P_i / P_{i−1}` of the
/// same recursion (a Sturm count; the ratios stay finite unlike `P_K` itself).
fn roots_below(k: usize, p: f64, x: f64) -> usize {
    let c = p * (1.0 - p);
    let mut count = 0;
    let mut d = -x;
    for i in 0..k {
        if i > 0 {
            d = -x - c / d;
        }
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + x.abs());
        }
        // `d_i = P_i / P_{i−1}` are the LDLᵀ pivots of `Q_K − x I`;
        // negative pivots count the eigenvalues below `x`.
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Roots of `P_K`, decreasing, by bisection on the Sturm count.
pub fn charpoly_roots(k: usize, p: f64) -> Vec<f64> {
    let bound = 2.0 * (p * (1.0 - p)).sqrt() + 1e-3;
    (1..=k)
        .map(|j| {
            // the j-th largest root has exactly k − j roots below it
            let target = k - j;
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if roots_below(k, p, mid) > target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Numerical spectrum of `Q_K`, decreasing, through the similar symmetric
/// matrix `D Q_K D^{-1}` with off-diagonals `√(p(1−p))`.
pub fn numeric_spectrum(k: usize, p: f64) -> Vec<f64> {
    let off = (p * (1.0 - p)).sqrt();
    let sym = DMatrix::from_fn(k, k, |i, j| if i.abs_diff(j) == 1 { off } else { 0.0 });
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Parity of the starting state of the moving walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartParity {
    /// Only even states charged: the walk lives on `2..2N−2`.
    Even,
    /// Some odd state charged: the odd class dominates.
    Odd,
}

impl StartParity {
    pub fn of_state(x: usize) -> Self {
        if x % 2 == 0 {
            Self::Even
        } else {
            Self::Odd
        }
    }
}

/// Closed-form quasi-ergodic law of the moving walk, over `{0..2N}`.
pub fn moving_example_qed(spec: &RandomWalkSpec, parity: StartParity) -> Result<MeanRatioDistribution> {
    spec.validate()?;
    let WalkSize::Moving(n) = spec.size else {
        return Err(Error::InvalidArgument("moving_example_qed needs a moving walk".into()));
    };
    let mut weights = vec![0.0; 2 * n + 1];
    match parity {
        StartParity::Odd => {
            for x in 1..2 * n {
                weights[x] = (x as f64 * PI / (2 * n) as f64).sin().powi(2);
            }
        }
        StartParity::Even => {
            if n == 2 {
                return Err(Error::NullEvent(
                    "N = 2 from an even state: every path is absorbed at step 1".into(),
                ));
            }
            for x in 2..2 * n - 1 {
                weights[x] = ((x - 1) as f64 * PI / (2 * n - 2) as f64).sin().powi(2);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(MeanRatioDistribution { weights })
}

/// Closed-form Q-process of the moving walk started in the class of `start`
/// at phase 0. From `y` at step `n` (time `n − 1` to `n`), with
/// `L = 2N − 1 + (−1)^{n+y}` and offset `a = 0` for `L = 2N`, `a = 1` for
/// `L = 2N − 2`:
/// `K_n(y, y±1) = ½ sin((y±1−a)π/L) / (sin((y−a)π/L) cos(π/L))`.
pub fn qprocess_closed_form(spec: &RandomWalkSpec, start: usize) -> Result<QProcessKernel> {
    spec.validate()?;
    let WalkSize::Moving(n) = spec.size else {
        return Err(Error::InvalidArgument("qprocess_closed_form needs a moving walk".into()));
    };
    let m = 2 * n + 1;
    if start == 0 || start >= 2 * n {
        return Err(Error::NotInClass(format!("state {start} is absorbed at phase 0")));
    }
    if n == 2 && start % 2 == 0 {
        return Err(Error::NullEvent("N = 2 from an even state: no surviving path".into()));
    }
    let odd = start % 2 == 1;
    let mut slices = Vec::with_capacity(2);
    let mut rows = Vec::with_capacity(2);
    for phase in 0..2 {
        // slice `phase` moves from phase `phase − 1` into `phase`
        let prev = (phase + 1) % 2;
        let mut k = DMatrix::zeros(m, m);
        let mut active = vec![false; m];
        for y in 1..2 * n {
            let in_odd_class = (y + prev) % 2 == 1;
            if in_odd_class != odd {
                continue;
            }
            let (l, a) = if (phase + y) % 2 == 0 { (2 * n, 0) } else { (2 * n - 2, 1) };
            if y <= a || y - a >= l {
                continue;
            }
            let l = l as f64;
            let rel = (y - a) as f64;
            let denom = (rel * PI / l).sin() * (PI / l).cos();
            for z in [y - 1, y + 1] {
                let v = 0.5 * ((z as f64 - a as f64) * PI / l).sin() / denom;
                k[(y, z)] = v.max(0.0);
            }
            active[y] = true;
        }
        slices.push(k);
        rows.push(active);
    }
    let rho = if odd {
        2.0 * (spec.p * (1.0 - spec.p)).sqrt() * (PI / (2 * n) as f64).cos()
    } else {
        2.0 * (spec.p * (1.0 - spec.p)).sqrt() * (PI / (2 * n - 2) as f64).cos()
    };
    Ok(QProcessKernel {
        gamma: 2,
        n_states: m,
        rho,
        slices,
        rows,
        renormalization_deviation: 0.0,
        warnings: Vec::new(),
    })
}
