//! Communicating classes of a substochastic matrix and their periodic
//! Perron–Frobenius data.
//!
//! For an irreducible class with period `T` the states split into cyclic
//! classes `C_0..C_{T-1}` (the anchor, i.e. the smallest state index, lies in
//! `C_0`) and one step maps `C_i` into `C_{i+1 mod T}`. The `T`-step block on
//! `C_0` is primitive, so plain power iteration gives `ρ^T` and the Perron
//! vectors on `C_0`; the other cyclic classes are filled in by propagating one
//! block at a time.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Stopping tolerance (L1 change of the normalized iterate) for power iteration.
pub const PERRON_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 1_000_000;

/// Eigen-residuals above this are reported as non-convergence.
const RESIDUAL_FAIL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PerronResiduals {
    /// `‖νQ − ρν‖∞` on the class.
    pub left: f64,
    /// `‖Qξ − ρξ‖∞` on the class.
    pub right: f64,
    /// `max(|⟨ν,1⟩ − 1|, |⟨ν,ξ⟩ − 1|)`.
    pub normalization: f64,
    pub iterations: usize,
}

/// A communicating class with its period, cyclic classes and Perron data.
///
/// Vectors `nu`, `xi` and `cyclic_index` are aligned with `states`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleClass {
    pub states: Vec<usize>,
    pub period: usize,
    pub cyclic_index: Vec<usize>,
    pub cyclic_classes: Vec<Vec<usize>>,
    pub rho: f64,
    pub nu: Vec<f64>,
    pub xi: Vec<f64>,
    pub residuals: PerronResiduals,
    /// A transient singleton with no self-loop: `ρ = 0`, `ν = ξ = (1)`.
    pub degenerate: bool,
}

impl IrreducibleClass {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, state: usize) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    pub fn contains(&self, state: usize) -> bool {
        self.position(state).is_some()
    }

    pub fn anchor(&self) -> usize {
        self.states[0]
    }

    /// `ν(C_j)`.
    pub fn cyclic_mass(&self, j: usize) -> f64 {
        self.states
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.cyclic_index[i] == j % self.period)
            .map(|(i, _)| self.nu[i])
            .sum()
    }

    /// `Q` restricted to the class, rows and columns in `states` order.
    pub fn restrict(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        q.select_rows(&self.states).select_columns(&self.states)
    }

    /// `Σ_i f(i) ν(i) ξ(i)` over the class, `f` indexed like `Q`.
    pub fn phi(&self, f: &[f64]) -> f64 {
        self.states
            .iter()
            .enumerate()
            .map(|(i, &s)| f[s] * self.nu[i] * self.xi[i])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecomposition {
    pub classes: Vec<IrreducibleClass>,
    /// Class index of each state of `Q`.
    pub class_of: Vec<usize>,
    /// Classes directly reachable in one step, excluding the class itself.
    pub successors: Vec<BTreeSet<usize>>,
}

impl ClassDecomposition {
    /// All classes reachable (in zero or more steps) from `start`.
    pub fn reachable_from(&self, start: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = start.clone();
        let mut stack: Vec<usize> = start.iter().copied().collect();
        while let Some(c) = stack.pop() {
            for &d in &self.successors[c] {
                if seen.insert(d) {
                    stack.push(d);
                }
            }
        }
        seen
    }

    pub fn spectral_radius(&self) -> f64 {
        self.classes.iter().map(|c| c.rho).fold(0.0, f64::max)
    }

    /// Index of the class containing `state`.
    pub fn class_index(&self, state: usize) -> usize {
        self.class_of[state]
    }
}

/// Strongly connected components of the support digraph, each sorted, ordered
/// by smallest member.
pub fn communicating_classes(q: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = q.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if q[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|ix| ix.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

pub fn decompose_classes(q: &DMatrix<f64>) -> Result<ClassDecomposition> {
    check_substochastic(q)?;
    let sets = communicating_classes(q);
    let mut class_of = vec![0; q.nrows()];
    for (c, set) in sets.iter().enumerate() {
        for &s in set {
            class_of[s] = c;
        }
    }
    let mut successors = vec![BTreeSet::new(); sets.len()];
    for i in 0..q.nrows() {
        for j in 0..q.ncols() {
            if q[(i, j)] > 0.0 && class_of[i] != class_of[j] {
                successors[class_of[i]].insert(class_of[j]);
            }
        }
    }
    let classes = sets
        .iter()
        .map(|s| perron_data(q, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassDecomposition {
        classes,
        class_of,
        successors,
    })
}

/// Spectral radius of a substochastic matrix: the largest per-class Perron root.
pub fn spectral_radius(q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(decompose_classes(q)?.spectral_radius())
}

fn check_substochastic(q: &DMatrix<f64>) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    for (i, row) in q.row_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("row {i} has a negative or non-finite entry")));
        }
        if row.sum() > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("row {i} sums above 1")));
        }
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// BFS levels from `states[0]` inside the class; `None` for unreached states.
fn bfs_levels(q: &DMatrix<f64>, states: &[usize], forward: bool) -> Vec<Option<usize>> {
    let mut level = vec![None; states.len()];
    level[0] = Some(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for (v, &sv) in states.iter().enumerate() {
            let w = if forward { q[(states[u], sv)] } else { q[(sv, states[u])] };
            if w > 0.0 && level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

/// Period, cyclic classes and Perron data of the class `states` under `q`.
pub fn perron_data(q: &DMatrix<f64>, states: &[usize]) -> Result<IrreducibleClass> {
    let mut states = states.to_vec();
    states.sort_unstable();
    states.dedup();
    if states.is_empty() {
        return Err(Error::InvalidArgument("empty class".into()));
    }
    let fwd = bfs_levels(q, &states, true);
    let bwd = bfs_levels(q, &states, false);
    if fwd.iter().chain(&bwd).any(Option::is_none) {
        return Err(Error::NotIrreducible);
    }
    let level: Vec<usize> = fwd.into_iter().map(Option::unwrap).collect();

    let mut period = 0;
    for (u, &su) in states.iter().enumerate() {
        for (v, &sv) in states.iter().enumerate() {
            if q[(su, sv)] > 0.0 {
                period = gcd(period, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    if period == 0 {
        // singleton without self-loop
        return Ok(IrreducibleClass {
            cyclic_classes: vec![states.clone()],
            states,
            period: 1,
            cyclic_index: vec![0],
            rho: 0.0,
            nu: vec![1.0],
            xi: vec![1.0],
            residuals: PerronResiduals::default(),
            degenerate: true,
        });
    }

    let cyclic_index: Vec<usize> = level.iter().map(|l| l % period).collect();
    let members: Vec<Vec<usize>> = (0..period)
        .map(|j| (0..states.len()).filter(|&i| cyclic_index[i] == j).collect())
        .collect();
    let cyclic_classes: Vec<Vec<usize>> = members
        .iter()
        .map(|m| m.iter().map(|&i| states[i]).collect())
        .collect();
    let block = |j: usize| -> DMatrix<f64> {
        q.select_rows(&cyclic_classes[j])
            .select_columns(&cyclic_classes[(j + 1) % period])
    };
    let blocks: Vec<DMatrix<f64>> = (0..period).map(block).collect();
    let mut m = blocks[0].clone();
    for b in &blocks[1..] {
        m = &m * b;
    }

    let (left0, theta_l, it_l) = power_iterate(&m.transpose())?;
    let (right0, _theta_r, it_r) = power_iterate(&m)?;
    let theta = theta_l;
    if theta <= 0.0 {
        return Err(Error::Numerical("T-step block has zero spectral radius".into()));
    }
    let rho = theta.powf(1.0 / period as f64);

    let mut nu_parts: Vec<DVector<f64>> = vec![left0];
    for b in blocks.iter().take(period - 1) {
        let next = (b.transpose() * nu_parts.last().unwrap()) / rho;
        nu_parts.push(next);
    }
    let mut xi_parts: Vec<DVector<f64>> = vec![DVector::zeros(0); period];
    xi_parts[0] = right0;
    for j in (1..period).rev() {
        let next = &xi_parts[(j + 1) % period];
        xi_parts[j] = (&blocks[j] * next) / rho;
    }

    let mut nu = vec![0.0; states.len()];
    let mut xi = vec![0.0; states.len()];
    for j in 0..period {
        for (k, &i) in members[j].iter().enumerate() {
            nu[i] = nu_parts[j][k];
            xi[i] = xi_parts[j][k];
        }
    }
    let s: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|v| *v /= s);
    let dot: f64 = nu.iter().zip(&xi).map(|(a, b)| a * b).sum();
    xi.iter_mut().for_each(|v| *v /= dot);

    let qc = q.select_rows(&states).select_columns(&states);
    let nu_v = DVector::from_column_slice(&nu);
    let xi_v = DVector::from_column_slice(&xi);
    let left = (qc.transpose() * &nu_v - &nu_v * rho).amax();
    let right = (&qc * &xi_v - &xi_v * rho).amax();
    let normalization = (nu.iter().sum::<f64>() - 1.0)
        .abs()
        .max((nu_v.dot(&xi_v) - 1.0).abs());
    let residuals = PerronResiduals {
        left,
        right,
        normalization,
        iterations: it_l.max(it_r),
    };
    if left.max(right) > RESIDUAL_FAIL * rho.max(1e-300) || !left.is_finite() || !right.is_finite() {
        return Err(Error::NonConvergence {
            what: "Perron eigenvectors".into(),
            iterations: residuals.iterations,
            residual: left.max(right),
        });
    }

    Ok(IrreducibleClass {
        states,
        period,
        cyclic_index,
        cyclic_classes,
        rho,
        nu,
        xi,
        residuals,
        degenerate: false,
    })
}

/// Power iteration `x ← Mx / Σ(Mx)` for a primitive nonnegative matrix,
/// followed by two inverse-iteration refinements.
fn power_iterate(m: &DMatrix<f64>) -> Result<(DVector<f64>, f64, usize)> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut theta = 0.0;
    let mut iterations = 0;
    let mut diff = f64::INFINITY;
    while iterations < PERRON_MAX_ITER {
        iterations += 1;
        let y = m * &x;
        let s = y.sum();
        if s <= 0.0 {
            return Err(Error::Numerical("power iterate vanished".into()));
        }
        theta = s / x.sum();
        let y = y / s;
        diff = (&y - &x).lp_norm(1);
        x = y;
        if diff < PERRON_TOL {
            break;
        }
    }
    if diff >= PERRON_TOL {
        return Err(Error::NonConvergence {
            what: "power iteration".into(),
            iterations,
            residual: diff,
        });
    }

    let residual = |v: &DVector<f64>, t: f64| (m * v - v * t).amax();
    for _ in 0..2 {
        let shifted = m - DMatrix::identity(n, n) * theta;
        let Some(z) = shifted.lu().solve(&x) else { break };
        let s = z.sum();
        if !s.is_finite() || s == 0.0 {
            break;
        }
        let z = z / s;
        if z.iter().any(|v| *v < -1e-12) {
            break;
        }
        let z = z.map(|v| v.max(0.0));
        let t = (m * &z).sum() / z.sum();
        if residual(&z, t) <= residual(&x, theta) {
            x = z;
            theta = t;
        } else {
            break;
        }
    }
    Ok((x, theta, iterations))
}

/// Peripheral eigenvalues `λ_k = ρ e^{2πik/T}` and the phase-twisted vectors
/// `v_k = e^{−2πijk/T} ν`, `w_k = e^{2πijk/T} ξ` on `C_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeripheralSystem {
    pub lambdas: Vec<Complex64>,
    pub left: Vec<Vec<Complex64>>,
    pub right: Vec<Vec<Complex64>>,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

pub fn peripheral_system(class: &IrreducibleClass) -> PeripheralSystem {
    let t = class.period;
    let angle = |a: usize, b: usize| 2.0 * PI * ((a * b) % t) as f64 / t as f64;
    let lambdas = (0..t).map(|k| unit(angle(k, 1)) * class.rho).collect();
    let left = (0..t)
        .map(|k| {
            (0..class.len())
                .map(|i| unit(-angle(class.cyclic_index[i], k)) * class.nu[i])
                .collect()
        })
        .collect();
    let right = (0..t)
        .map(|k| {
            (0..class.len())
                .map(|i| unit(angle(class.cyclic_index[i], k)) * class.xi[i])
                .collect()
        })
        .collect();
    PeripheralSystem {
        lambdas,
        left,
        right,
    }
}

impl PeripheralSystem {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `max_k (‖v_k Q − λ_k v_k‖∞, ‖Q w_k − λ_k w_k‖∞)` with `Q` restricted to the class.
    pub fn residuals(&self, q: &DMatrix<f64>, class: &IrreducibleClass) -> (f64, f64) {
        let qc = class.restrict(q).map(|v| Complex64::new(v, 0.0));
        let mut worst = (0.0f64, 0.0f64);
        for k in 0..self.len() {
            let v = DVector::from_column_slice(&self.left[k]);
            let w = DVector::from_column_slice(&self.right[k]);
            let l = self.lambdas[k];
            let lv = (qc.transpose() * &v - &v * l).iter().map(|c| c.norm()).fold(0.0, f64::max);
            let rw = (&qc * &w - &w * l).iter().map(|c| c.norm()).fold(0.0, f64::max);
            worst = (worst.0.max(lv), worst.1.max(rw));
        }
        worst
    }

    /// `Σ_l (λ_l/ρ)^n w_l(x) ⟨v_l, 1⟩`, the coefficient of `ρ^n` in `P_x(τ > n)`.
    pub fn survival_expansion(&self, class: &IrreducibleClass, x: usize, n: usize) -> Result<Complex64> {
        let pos = class
            .position(x)
            .ok_or_else(|| Error::NotInClass(x.to_string()))?;
        let t = self.len();
        let mut total = Complex64::new(0.0, 0.0);
        for l in 0..t {
            let phase = unit(2.0 * PI * ((n % t) * l % t) as f64 / t as f64);
            let mass: Complex64 = self.left[l].iter().sum();
            total += phase * self.right[l][pos] * mass;
        }
        Ok(total)
    }
}

/// `c_n(x) = T ξ(x) ν(C_{(n+k) mod T})` for `x ∈ C_k`, so that
/// `P_x(τ > n) = c_n(x) ρ^n + o(ρ^n)` on a closed class.
pub fn survival_coefficient(class: &IrreducibleClass, x: usize, n: usize) -> Result<f64> {
    let pos = class
        .position(x)
        .ok_or_else(|| Error::NotInClass(x.to_string()))?;
    if class.degenerate {
        return Err(Error::InvalidArgument(
            "survival coefficient is undefined for a class with rho = 0".into(),
        ));
    }
    let t = class.period;
    let k = class.cyclic_index[pos];
    Ok(t as f64 * class.xi[pos] * class.cyclic_mass((n + k) % t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenprojectionReport {
    /// Coefficients of `δ_x` on `v_0..v_{T-1}` with the remainder in the
    /// invariant complement (pairing against the right eigenvectors).
    pub alpha: Vec<Complex64>,
    /// `max_k |α_k(x) − w_k(x)|`.
    pub residual: f64,
    /// Coefficients with the remainder Hermitian-orthogonal to `span(v_k)`.
    pub alpha_hermitian: Vec<Complex64>,
    pub residual_hermitian: f64,
}

fn solve_complex(a: DMatrix<Complex64>, b: DVector<Complex64>) -> Result<Vec<Complex64>> {
    a.lu()
        .solve(&b)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("singular Gram matrix".into()))
}

/// Solves the Gram systems for the peripheral coefficients of `δ_x` and
/// compares them with `w_k(x)`.
pub fn verify_eigenprojection(
    class: &IrreducibleClass,
    system: &PeripheralSystem,
    x: usize,
) -> Result<EigenprojectionReport> {
    let pos = class
        .position(x)
        .ok_or_else(|| Error::NotInClass(x.to_string()))?;
    let t = system.len();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
    let herm = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(u, v)| u * v.conj()).sum()
    };

    // ⟨δ_x, w̄_m⟩ = Σ_k α_k ⟨v_k, w̄_m⟩
    let a = DMatrix::from_fn(t, t, |m, k| dot(&system.left[k], &system.right[m]));
    let b = DVector::from_fn(t, |m, _| system.right[m][pos]);
    let alpha = solve_complex(a, b)?;

    // ⟨δ_x, v_m⟩ = Σ_k α_k ⟨v_k, v_m⟩
    let g = DMatrix::from_fn(t, t, |m, k| herm(&system.left[k], &system.left[m]));
    let bh = DVector::from_fn(t, |m, _| system.left[m][pos].conj());
    let alpha_hermitian = solve_complex(g, bh)?;

    let deviation = |al: &[Complex64]| {
        al.iter()
            .enumerate()
            .map(|(k, a)| (a - system.right[k][pos]).norm())
            .fold(0.0, f64::max)
    };
    Ok(EigenprojectionReport {
        residual: deviation(&alpha),
        residual_hermitian: deviation(&alpha_hermitian),
        alpha,
        alpha_hermitian,
    })
}

/// Checks that one step maps `C_i` into `C_{i+1 mod T}` for every in-class edge.
pub fn cyclic_structure_holds(q: &DMatrix<f64>, class: &IrreducibleClass) -> bool {
    let t = class.period;
    for (u, &su) in class.states.iter().enumerate() {
        for (v, &sv) in class.states.iter().enumerate() {
            if q[(su, sv)] > 0.0 && class.cyclic_index[v] != (class.cyclic_index[u] + 1) % t {
                return false;
            }
        }
    }
    true
}
