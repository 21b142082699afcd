//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the library's numerical code: the lifted chain,
//! survival probabilities and conditioned laws are rebuilt from the raw
//! kernel and killing masks with plain loops and exhaustive path sums.

#![allow(dead_code)]

use std::collections::BTreeMap;

use quasistat::{AbsorbedChainProblem, ProblemParts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Raw data of a problem: kernel rows, per-phase kill masks and initial weights.
#[derive(Debug, Clone)]
pub struct Raw {
    pub p: Vec<Vec<f64>>,
    pub kill: Vec<Vec<bool>>,
    pub mu: Vec<f64>,
}

impl Raw {
    pub fn of(problem: &AbsorbedChainProblem) -> Self {
        let m = problem.kernel().matrix();
        let n = m.nrows();
        let p = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
        let kill = (0..problem.gamma())
            .map(|k| (0..n).map(|x| problem.boundary().is_killed(k, x)).collect())
            .collect();
        Self {
            p,
            kill,
            mu: problem.initial().weights().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn gamma(&self) -> usize {
        self.kill.len()
    }

    pub fn killed(&self, time: usize, x: usize) -> bool {
        self.kill[time % self.gamma()][x]
    }

    /// `P_x(τ > n)` for a start at `x` at time `t0`, by forward mass propagation.
    pub fn survival_from(&self, x: usize, t0: usize, n: usize) -> f64 {
        let mut v = vec![0.0; self.n()];
        if self.killed(t0, x) {
            return 0.0;
        }
        v[x] = 1.0;
        for t in t0 + 1..=t0 + n {
            v = self.step(&v, t);
        }
        v.iter().sum()
    }

    /// One unnormalized step into time `t`, dropping mass killed at `t`.
    pub fn step(&self, v: &[f64], t: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for x in 0..n {
            if v[x] == 0.0 {
                continue;
            }
            for y in 0..n {
                out[y] += v[x] * self.p[x][y];
            }
        }
        for (y, w) in out.iter_mut().enumerate() {
            if self.killed(t, y) {
                *w = 0.0;
            }
        }
        out
    }

    /// `P_μ(X_n ∈ · | τ > n)` by forward propagation; `None` on a null event.
    pub fn conditional_law(&self, n: usize) -> Option<Vec<f64>> {
        let mut v = self.mu.clone();
        for t in 1..=n {
            v = self.step(&v, t);
        }
        let s: f64 = v.iter().sum();
        (s > 0.0).then(|| v.iter().map(|w| w / s).collect())
    }

    /// Every surviving path `(x_{t0}, ..., x_{t0+steps})` from `start` with its mass.
    pub fn surviving_paths(&self, start: &[f64], t0: usize, steps: usize) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut path = Vec::with_capacity(steps + 1);
        for x in 0..self.n() {
            if start[x] > 0.0 && !self.killed(t0, x) {
                path.clear();
                path.push(x);
                self.extend(&mut path, start[x], t0, steps, &mut out);
            }
        }
        out
    }

    fn extend(&self, path: &mut Vec<usize>, mass: f64, t0: usize, steps: usize, out: &mut Vec<(Vec<usize>, f64)>) {
        if path.len() == steps + 1 {
            out.push((path.clone(), mass));
            return;
        }
        let x = *path.last().unwrap();
        let t = t0 + path.len();
        for y in 0..self.n() {
            let w = self.p[x][y];
            if w > 0.0 && !self.killed(t, y) {
                path.push(y);
                self.extend(path, mass * w, t0, steps, out);
                path.pop();
            }
        }
    }

    /// `E_μ[(1/n) Σ_{k<n} f(X_k) | τ > n]` by exhaustive path enumeration.
    pub fn brute_mean_ratio(&self, f: &[f64], n: usize) -> f64 {
        let paths = self.surviving_paths(&self.mu, 0, n);
        let z: f64 = paths.iter().map(|(_, m)| m).sum();
        let num: f64 = paths
            .iter()
            .map(|(path, m)| m * path[..n].iter().map(|&x| f[x]).sum::<f64>() / n as f64)
            .sum();
        num / z
    }

    /// Law of `(X_{t0}, X_{t0+γ}, ..., X_{t0+nγ})` given survival to `t0 + nγ`,
    /// from exhaustive enumeration of the full paths.
    pub fn subsampled_cylinders(&self, start: &[f64], t0: usize, n: usize) -> BTreeMap<Vec<usize>, f64> {
        let g = self.gamma();
        let paths = self.surviving_paths(start, t0, n * g);
        let z: f64 = paths.iter().map(|(_, m)| m).sum();
        let mut out = BTreeMap::new();
        for (path, m) in paths {
            let key: Vec<usize> = (0..=n).map(|i| path[i * g]).collect();
            *out.entry(key).or_insert(0.0) += m / z;
        }
        out
    }
}

/// Lifted survivors `(x, k)` in phase-major order, with the survivor matrix.
pub fn lifted_survivors(raw: &Raw) -> (Vec<(usize, usize)>, Vec<Vec<f64>>) {
    let (n, g) = (raw.n(), raw.gamma());
    let states: Vec<(usize, usize)> = (0..g)
        .flat_map(|k| (0..n).map(move |x| (x, k)))
        .filter(|&(x, k)| !raw.kill[k][x])
        .collect();
    let q = states
        .iter()
        .map(|&(x, k)| {
            states
                .iter()
                .map(|&(y, l)| if l == (k + 1) % g { raw.p[x][y] } else { 0.0 })
                .collect()
        })
        .collect();
    (states, q)
}

pub fn mat_vec(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `Q^n 1`.
pub fn survival_vector(q: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut u = vec![1.0; q.len()];
    for _ in 0..n {
        u = mat_vec(q, &u);
    }
    u
}

/// A random valid problem: state 0 is killed at every phase and every row
/// sends at least `leak` to it, which forces almost-sure absorption.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, gamma: usize, leak: f64) -> AbsorbedChainProblem {
    assert!(n >= 2);
    loop {
        let mut rows = vec![vec![0.0; n]; n];
        for row in rows.iter_mut() {
            let mut w: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
                .collect();
            w[0] = 0.0;
            let s: f64 = w.iter().sum();
            if s == 0.0 {
                w[1 + rng.random_range(0..n - 1)] = 1.0;
            }
            let s: f64 = w.iter().sum();
            for (j, v) in w.iter().enumerate() {
                row[j] = (1.0 - leak) * v / s;
            }
            row[0] += leak;
        }
        let killing_sets: Vec<Vec<usize>> = (0..gamma)
            .map(|_| {
                let mut set = vec![0];
                set.extend((1..n).filter(|_| rng.random::<f64>() < 0.25));
                if set.len() == n {
                    set.pop();
                }
                set
            })
            .collect();
        let alive: Vec<usize> = (1..n).filter(|x| !killing_sets[0].contains(x)).collect();
        let mut initial = vec![0.0; n];
        for &x in &alive {
            initial[x] = 0.1 + rng.random::<f64>();
        }
        let s: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|w| *w /= s);
        let parts = ProblemParts {
            labels: (0..n).map(|i| format!("s{i}")).collect(),
            kernel: nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]),
            killing_sets,
            initial,
        };
        if let Ok(problem) = AbsorbedChainProblem::new(parts) {
            return problem;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
