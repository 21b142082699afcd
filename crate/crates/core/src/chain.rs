//! Absorbed-chain problems with a γ-periodic killing schedule.
//!
//! A problem is a kernel `P` on a finite labeled state space, killing sets
//! `A_0..A_{γ-1}` (the process is stopped at the first `n` with
//! `X_n ∈ A_{n mod γ}`) and an initial law supported on `E_0`. Lifting to
//! `Y_n = (X_n, n mod γ)` turns the moving boundary into the static set
//! `∂ = {(x, k) : x ∈ A_k}`.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral;

/// Absolute per-row tolerance for stochastic rows and probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Spectral radius of the lifted survivor matrix must stay below `1 - ABSORPTION_TOL`.
pub const ABSORPTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument("state space is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate state label {l:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// States labeled `"0"`, `"1"`, ...
    pub fn indexed(n: usize) -> Self {
        Self::new((0..n.max(1)).map(|i| i.to_string())).expect("distinct labels")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    matrix: DMatrix<f64>,
}

impl TransitionKernel {
    /// Rows within [`STOCHASTIC_TOL`] of 1 are renormalized; anything else is rejected.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let violations = kernel_violations(&matrix);
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(ValidationReport { violations }));
        }
        let mut matrix = matrix;
        for mut row in matrix.row_iter_mut() {
            let s: f64 = row.iter().sum();
            row /= s;
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::InvalidArgument(format!(
            "row {i} has {} entries, expected {m}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn kernel_violations(matrix: &DMatrix<f64>) -> Vec<Violation> {
    let mut out = Vec::new();
    if matrix.nrows() != matrix.ncols() {
        out.push(Violation::KernelShape {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
        return out;
    }
    for (i, row) in matrix.row_iter().enumerate() {
        let mut bad_entry = false;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                out.push(Violation::EntryOutOfRange { row: i, col: j, value: v });
                bad_entry = true;
            }
        }
        let sum: f64 = row.iter().sum();
        if !bad_entry && (sum - 1.0).abs() > STOCHASTIC_TOL {
            out.push(Violation::RowNotStochastic { row: i, sum });
        }
    }
    out
}

/// γ-periodic killing schedule `A_0..A_{γ-1}` over `n_states` states.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingBoundary {
    n_states: usize,
    killed: Vec<Vec<bool>>,
}

impl MovingBoundary {
    pub fn new(n_states: usize, killing_sets: &[Vec<usize>]) -> Result<Self> {
        if killing_sets.is_empty() {
            return Err(Error::InvalidArgument("gamma must be at least 1".into()));
        }
        let mut killed = vec![vec![false; n_states]; killing_sets.len()];
        for (phase, set) in killing_sets.iter().enumerate() {
            for &x in set {
                if x >= n_states {
                    return Err(Error::InvalidArgument(format!(
                        "killing set {phase} names state index {x} outside 0..{n_states}"
                    )));
                }
                killed[phase][x] = true;
            }
            if killed[phase].iter().all(|&k| k) {
                return Err(Error::InvalidArgument(format!("empty survival set at phase {phase}")));
            }
        }
        Ok(Self { n_states, killed })
    }

    /// The same killing set at every time step.
    pub fn fixed(n_states: usize, killing_set: &[usize]) -> Result<Self> {
        Self::new(n_states, &[killing_set.to_vec()])
    }

    pub fn gamma(&self) -> usize {
        self.killed.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// `x ∈ A_{phase mod γ}`.
    pub fn is_killed(&self, phase: usize, x: usize) -> bool {
        self.killed[phase % self.gamma()][x]
    }

    pub fn killing_mask(&self, phase: usize) -> &[bool] {
        &self.killed[phase % self.gamma()]
    }

    pub fn killing_set(&self, phase: usize) -> Vec<usize> {
        (0..self.n_states).filter(|&x| self.is_killed(phase, x)).collect()
    }

    pub fn survival_set(&self, phase: usize) -> Vec<usize> {
        (0..self.n_states).filter(|&x| !self.is_killed(phase, x)).collect()
    }

    /// True when all killing sets coincide.
    pub fn is_static(&self) -> bool {
        self.killed.iter().all(|k| k == &self.killed[0])
    }
}

/// Probability vector over a dense state index.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Accepts weights summing to 1 within [`STOCHASTIC_TOL`] and renormalizes them.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("distribution has a negative or non-finite weight".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidArgument(format!("distribution sums to {s}, not 1")));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / s).collect(),
        })
    }

    /// Normalizes an arbitrary nonnegative mass vector; zero total mass is a null event.
    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        if mass.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Numerical("mass vector has a negative or non-finite entry".into()));
        }
        let s: f64 = mass.iter().sum();
        if s <= 0.0 {
            return Err(Error::NullEvent("conditioning event has probability zero".into()));
        }
        Ok(Self {
            weights: mass.into_iter().map(|w| w / s).collect(),
        })
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn uniform_on(n: usize, support: &[usize]) -> Result<Self> {
        let mut mass = vec![0.0; n];
        for &i in support {
            mass[i] = 1.0;
        }
        Self::from_mass(mass)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Total-variation distance `½ Σ |μ(x) − ν(x)|`.
    pub fn tv(&self, other: &Distribution) -> f64 {
        assert_eq!(self.len(), other.len(), "distributions over different spaces");
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn labeled<'a>(&'a self, space: &'a StateSpace) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.weights.iter().enumerate().map(|(i, &w)| (space.label(i), w))
    }
}

/// A single invariant violation found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyStateSpace,
    DuplicateLabel(String),
    KernelShape { rows: usize, cols: usize },
    KernelSizeMismatch { states: usize, kernel: usize },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    RowNotStochastic { row: usize, sum: f64 },
    NoPhases,
    KillingStateOutOfRange { phase: usize, state: usize },
    EmptySurvivalSet { phase: usize },
    InitialLength { expected: usize, found: usize },
    InitialInvalidWeight { state: usize, weight: f64 },
    InitialNotNormalized { sum: f64 },
    InitialOffSurvivors { state: usize },
    AbsorptionNotCertain { rho: f64 },
    SpectralFailure(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyStateSpace => write!(f, "empty state space"),
            DuplicateLabel(l) => write!(f, "duplicate state label {l:?}"),
            KernelShape { rows, cols } => write!(f, "kernel is {rows}x{cols}, not square"),
            KernelSizeMismatch { states, kernel } => {
                write!(f, "kernel has {kernel} rows but there are {states} states")
            }
            EntryOutOfRange { row, col, value } => {
                write!(f, "kernel entry ({row},{col}) = {value} outside [0,1]")
            }
            RowNotStochastic { row, sum } => {
                write!(f, "kernel row not stochastic: row {row} sums to {sum}")
            }
            NoPhases => write!(f, "gamma must be at least 1"),
            KillingStateOutOfRange { phase, state } => {
                write!(f, "killing set {phase} names unknown state index {state}")
            }
            EmptySurvivalSet { phase } => write!(f, "empty survival set at phase {phase}"),
            InitialLength { expected, found } => {
                write!(f, "initial law has {found} weights, expected {expected}")
            }
            InitialInvalidWeight { state, weight } => {
                write!(f, "initial weight of state {state} is {weight}")
            }
            InitialNotNormalized { sum } => write!(f, "initial law sums to {sum}"),
            InitialOffSurvivors { state } => {
                write!(f, "initial law charges state {state}, which is killed at phase 0")
            }
            AbsorptionNotCertain { rho } => write!(
                f,
                "absorption is not almost sure: lifted survivor spectral radius {rho}"
            ),
            SpectralFailure(msg) => write!(f, "spectral radius check failed: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        write!(f, "{}", self.messages().join("; "))
    }
}

/// Unvalidated problem data, as read from a file or assembled by hand.
#[derive(Debug, Clone)]
pub struct ProblemParts {
    pub labels: Vec<String>,
    pub kernel: DMatrix<f64>,
    /// `killing_sets[k]` is `A_k` as state indices; γ is the number of sets.
    pub killing_sets: Vec<Vec<usize>>,
    pub initial: Vec<f64>,
}

impl ProblemParts {
    /// Labeled convenience constructor; unknown labels are an error.
    pub fn labeled(
        labels: &[&str],
        rows: &[Vec<f64>],
        killing_sets: &[Vec<&str>],
        initial: &[(&str, f64)],
    ) -> Result<Self> {
        let lookup = |l: &str| {
            labels
                .iter()
                .position(|x| *x == l)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown state label {l:?}")))
        };
        let killing_sets = killing_sets
            .iter()
            .map(|set| set.iter().map(|l| lookup(l)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut init = vec![0.0; labels.len()];
        for (l, w) in initial {
            init[lookup(l)?] += w;
        }
        Ok(Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            kernel: matrix_from_rows(rows)?,
            killing_sets,
            initial: init,
        })
    }
}

/// Every violated invariant of `parts`; an empty report means the problem is valid.
pub fn validate_problem(parts: &ProblemParts) -> ValidationReport {
    let mut v = Vec::new();
    let n = parts.labels.len();
    if n == 0 {
        v.push(Violation::EmptyStateSpace);
    }
    let mut seen = HashMap::new();
    for l in &parts.labels {
        if seen.insert(l.as_str(), ()).is_some() {
            v.push(Violation::DuplicateLabel(l.clone()));
        }
    }

    let kv = kernel_violations(&parts.kernel);
    let kernel_ok = kv.is_empty() && parts.kernel.nrows() == n;
    v.extend(kv);
    if parts.kernel.nrows() == parts.kernel.ncols() && parts.kernel.nrows() != n {
        v.push(Violation::KernelSizeMismatch {
            states: n,
            kernel: parts.kernel.nrows(),
        });
    }

    let mut boundary_ok = true;
    if parts.killing_sets.is_empty() {
        v.push(Violation::NoPhases);
        boundary_ok = false;
    }
    for (phase, set) in parts.killing_sets.iter().enumerate() {
        let mut killed = vec![false; n];
        for &x in set {
            if x >= n {
                v.push(Violation::KillingStateOutOfRange { phase, state: x });
                boundary_ok = false;
            } else {
                killed[x] = true;
            }
        }
        if killed.iter().all(|&k| k) {
            v.push(Violation::EmptySurvivalSet { phase });
            boundary_ok = false;
        }
    }

    if parts.initial.len() != n {
        v.push(Violation::InitialLength {
            expected: n,
            found: parts.initial.len(),
        });
    } else {
        let mut weights_ok = true;
        for (i, &w) in parts.initial.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                v.push(Violation::InitialInvalidWeight { state: i, weight: w });
                weights_ok = false;
            }
        }
        let sum: f64 = parts.initial.iter().sum();
        if weights_ok && (sum - 1.0).abs() > STOCHASTIC_TOL {
            v.push(Violation::InitialNotNormalized { sum });
        }
        if let Some(a0) = parts.killing_sets.first() {
            for &x in a0 {
                if x < n && parts.initial[x] > 0.0 {
                    v.push(Violation::InitialOffSurvivors { state: x });
                }
            }
        }
    }

    if kernel_ok && boundary_ok && n > 0 {
        let boundary = MovingBoundary::new(n, &parts.killing_sets).expect("checked above");
        let q = lifted_survivor_matrix(&parts.kernel, &boundary).1;
        match spectral::spectral_radius(&q) {
            Ok(rho) if rho >= 1.0 - ABSORPTION_TOL => {
                v.push(Violation::AbsorptionNotCertain { rho })
            }
            Ok(_) => {}
            Err(e) => v.push(Violation::SpectralFailure(e.to_string())),
        }
    }
    ValidationReport { violations: v }
}

/// A validated problem. All fields are immutable after construction.
#[derive(Debug, Clone)]
pub struct AbsorbedChainProblem {
    space: StateSpace,
    kernel: TransitionKernel,
    boundary: MovingBoundary,
    initial: Distribution,
}

impl AbsorbedChainProblem {
    pub fn new(parts: ProblemParts) -> Result<Self> {
        let report = validate_problem(&parts);
        if !report.is_valid() {
            return Err(Error::InvalidProblem(report));
        }
        let n = parts.labels.len();
        Ok(Self {
            space: StateSpace::new(parts.labels)?,
            kernel: TransitionKernel::new(parts.kernel)?,
            boundary: MovingBoundary::new(n, &parts.killing_sets)?,
            initial: Distribution::new(parts.initial)?,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn boundary(&self) -> &MovingBoundary {
        &self.boundary
    }

    pub fn initial(&self) -> &Distribution {
        &self.initial
    }

    pub fn gamma(&self) -> usize {
        self.boundary.gamma()
    }

    pub fn n_states(&self) -> usize {
        self.space.len()
    }

    /// Same chain and boundary with a different initial law (must live on `E_0`).
    pub fn with_initial(&self, initial: Distribution) -> Result<Self> {
        if initial.len() != self.n_states() {
            return Err(Error::InvalidArgument("initial law has the wrong length".into()));
        }
        if let Some(x) = initial.support().into_iter().find(|&x| self.boundary.is_killed(0, x)) {
            return Err(Error::InvalidArgument(format!(
                "initial law charges {}, which is killed at phase 0",
                self.space.label(x)
            )));
        }
        Ok(Self {
            initial,
            ..self.clone()
        })
    }

    pub fn to_parts(&self) -> ProblemParts {
        ProblemParts {
            labels: self.space.labels().to_vec(),
            kernel: self.kernel.matrix().clone(),
            killing_sets: (0..self.gamma()).map(|k| self.boundary.killing_set(k)).collect(),
            initial: self.initial.weights().to_vec(),
        }
    }
}

/// Survivor block of a kernel for a static killing set.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorMatrix {
    /// Survivor state indices, ascending.
    pub survivors: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl SurvivorMatrix {
    /// One-step killing probability of each survivor, `1 − Σ_y Q(x, y)`.
    pub fn deficiencies(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| 1.0 - r.iter().sum::<f64>()).collect()
    }
}

/// `Q(x, y) = P(x, y)` for `x, y` outside the killing set.
pub fn survivor_restriction(kernel: &DMatrix<f64>, killed: &[bool]) -> Result<SurvivorMatrix> {
    let survivors: Vec<usize> = (0..kernel.nrows()).filter(|&i| !killed[i]).collect();
    if survivors.is_empty() {
        return Err(Error::InvalidArgument("survivor set is empty".into()));
    }
    let matrix = kernel.select_rows(&survivors).select_columns(&survivors);
    Ok(SurvivorMatrix { survivors, matrix })
}

fn lifted_survivor_matrix(kernel: &DMatrix<f64>, boundary: &MovingBoundary) -> (Vec<bool>, DMatrix<f64>) {
    let n = kernel.nrows();
    let gamma = boundary.gamma();
    let size = n * gamma;
    let lifted = DMatrix::from_fn(size, size, |a, b| {
        let (x, k) = (a % n, a / n);
        let (y, l) = (b % n, b / n);
        if l == (k + 1) % gamma {
            kernel[(x, y)]
        } else {
            0.0
        }
    });
    let killed: Vec<bool> = (0..size).map(|a| boundary.is_killed(a / n, a % n)).collect();
    let q = survivor_restriction(&lifted, &killed)
        .map(|s| s.matrix)
        .unwrap_or_else(|_| DMatrix::zeros(0, 0));
    (killed, q)
}

/// The chain `Y_n = (X_n, n mod γ)` with static killing set `∂`.
///
/// Lifted state `(x, k)` has index `k·|E| + x`; survivors keep that order.
#[derive(Debug, Clone)]
pub struct LiftedChain {
    n_base: usize,
    gamma: usize,
    kernel: DMatrix<f64>,
    killed: Vec<bool>,
    survivors: Vec<usize>,
    survivor_pos: Vec<Option<usize>>,
    survivor_matrix: DMatrix<f64>,
}

pub fn lift_chain(problem: &AbsorbedChainProblem) -> LiftedChain {
    let p = problem.kernel().matrix();
    let n = p.nrows();
    let gamma = problem.gamma();
    let size = n * gamma;
    let kernel = DMatrix::from_fn(size, size, |a, b| {
        if b / n == (a / n + 1) % gamma {
            p[(a % n, b % n)]
        } else {
            0.0
        }
    });
    let killed: Vec<bool> = (0..size)
        .map(|a| problem.boundary().is_killed(a / n, a % n))
        .collect();
    let restriction =
        survivor_restriction(&kernel, &killed).expect("valid problems have survivors at every phase");
    let mut survivor_pos = vec![None; size];
    for (i, &a) in restriction.survivors.iter().enumerate() {
        survivor_pos[a] = Some(i);
    }
    LiftedChain {
        n_base: n,
        gamma,
        kernel,
        killed,
        survivors: restriction.survivors,
        survivor_pos,
        survivor_matrix: restriction.matrix,
    }
}

impl LiftedChain {
    pub fn n_base(&self) -> usize {
        self.n_base
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn size(&self) -> usize {
        self.n_base * self.gamma
    }

    pub fn index(&self, x: usize, phase: usize) -> usize {
        (phase % self.gamma) * self.n_base + x
    }

    /// `(x, phase)` of a lifted index.
    pub fn state(&self, lifted: usize) -> (usize, usize) {
        (lifted % self.n_base, lifted / self.n_base)
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn is_killed(&self, lifted: usize) -> bool {
        self.killed[lifted]
    }

    /// Lifted indices of `∂`.
    pub fn killing_set(&self) -> Vec<usize> {
        (0..self.size()).filter(|&a| self.killed[a]).collect()
    }

    /// Lifted indices of the survivors, ascending.
    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    pub fn n_survivors(&self) -> usize {
        self.survivors.len()
    }

    /// Position of `(x, phase)` among the survivors.
    pub fn survivor_position(&self, x: usize, phase: usize) -> Option<usize> {
        self.survivor_pos[self.index(x, phase)]
    }

    /// `(x, phase)` of the survivor at position `i`.
    pub fn survivor_state(&self, i: usize) -> (usize, usize) {
        self.state(self.survivors[i])
    }

    pub fn survivor_matrix(&self) -> &DMatrix<f64> {
        &self.survivor_matrix
    }

    /// `μ ⊗ δ_0` as a vector over the survivors.
    pub fn embed_initial(&self, mu: &Distribution) -> Vec<f64> {
        (0..self.n_survivors())
            .map(|i| {
                let (x, k) = self.survivor_state(i);
                if k == 0 {
                    mu.get(x)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Marginal of a survivor vector on the base states.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_base];
        for (i, &w) in v.iter().enumerate() {
            out[self.survivor_state(i).0] += w;
        }
        out
    }

    /// `"x@k"` label of survivor `i`.
    pub fn survivor_label(&self, space: &StateSpace, i: usize) -> String {
        let (x, k) = self.survivor_state(i);
        format!("{}@{}", space.label(x), k)
    }
}
