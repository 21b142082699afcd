//! Seeded Monte Carlo for absorbed trajectories.
//!
//! Trajectory `i` draws from its own ChaCha8 stream, selected by `i` on a
//! generator seeded with the run seed, so a path does not depend on which
//! worker simulates it. Trajectories are grouped in blocks of
//! [`BLOCK_SIZE`]; each block is reduced on its own and block partials are
//! merged in block order. Results are therefore bit-identical for a given
//! seed whatever the number of shards.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{AbsorbedChainProblem, Distribution};
use crate::error::{Error, Result};
use crate::qprocess::QProcessKernel;

pub const BLOCK_SIZE: u64 = 1024;

/// Survivor counts below this are flagged on estimates.
pub const SMALL_SAMPLE: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub trajectories: u64,
    pub horizon: usize,
    pub shards: usize,
}

impl SimConfig {
    pub fn new(seed: u64, trajectories: u64, horizon: usize) -> Self {
        Self {
            seed,
            trajectories,
            horizon,
            shards: 1,
        }
    }

    pub fn with_shards(self, shards: usize) -> Self {
        Self { shards, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub se: f64,
    pub survivors: u64,
    pub small_sample: bool,
}

impl EstimateWithCI {
    /// `|estimate − target| / se`, infinite when `se = 0` and they differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.estimate - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// Streaming mean/variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n as f64;
        self.count = n;
    }

    /// Sample variance (`n − 1` denominator).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// One simulated trajectory, truncated at the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedPath {
    /// `X_0, ..., X_{min(τ, horizon)}`; the last entry is the killed state when absorbed.
    pub path: Vec<usize>,
    /// `Some(τ)` when absorbed by the horizon.
    pub tau: Option<usize>,
}

struct Sampler {
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
}

impl Sampler {
    fn new(problem: &AbsorbedChainProblem) -> Result<Self> {
        let to_err = |e: rand::distr::weighted::Error| Error::Numerical(format!("sampling weights: {e}"));
        let initial = WeightedIndex::new(problem.initial().weights()).map_err(to_err)?;
        let p = problem.kernel().matrix();
        let rows = (0..p.nrows())
            .map(|i| WeightedIndex::new(p.row(i).iter().copied()).map_err(to_err))
            .collect::<Result<_>>()?;
        Ok(Self { initial, rows })
    }
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs trajectory `index`, handing each surviving position `(n, X_n)` to `visit`.
/// Returns `τ` if absorbed by `horizon`.
fn run_one(
    problem: &AbsorbedChainProblem,
    sampler: &Sampler,
    seed: u64,
    index: u64,
    horizon: usize,
    mut visit: impl FnMut(usize, usize),
) -> (Option<usize>, usize) {
    let mut rng = trajectory_rng(seed, index);
    let boundary = problem.boundary();
    let mut x = sampler.initial.sample(&mut rng);
    visit(0, x);
    for n in 1..=horizon {
        x = sampler.rows[x].sample(&mut rng);
        if boundary.is_killed(n, x) {
            return (Some(n), x);
        }
        visit(n, x);
    }
    (None, x)
}

/// Full paths of every trajectory (small runs only: memory is `O(paths × horizon)`).
pub fn simulate_paths(problem: &AbsorbedChainProblem, config: &SimConfig) -> Result<Vec<SimulatedPath>> {
    let sampler = Sampler::new(problem)?;
    let mut out = Vec::with_capacity(config.trajectories as usize);
    for i in 0..config.trajectories {
        let mut path = Vec::new();
        let (tau, last) = run_one(problem, &sampler, config.seed, i, config.horizon, |_, x| path.push(x));
        if tau.is_some() {
            path.push(last);
        }
        out.push(SimulatedPath { path, tau });
    }
    Ok(out)
}

/// Per-time statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub config: SimConfig,
    /// `survivors[n]` = number of trajectories with `τ > n`.
    pub survivors: Vec<u64>,
    /// `law_counts[n][x]` = survivors past `n` with `X_n = x`.
    pub law_counts: Vec<Vec<u64>>,
    /// `mean_ratio[n]`: Welford of `(1/n) Σ_{k<n} (f(X_k) − f_ref)` over survivors past `n`.
    pub mean_ratio: Vec<Welford>,
    /// Centre of the time averages (the value of `f` at the first state).
    pub f_ref: f64,
}

impl SimSummary {
    fn empty(config: SimConfig, n_states: usize, f_ref: f64) -> Self {
        let h = config.horizon + 1;
        Self {
            config,
            survivors: vec![0; h],
            law_counts: vec![vec![0; n_states]; h],
            mean_ratio: vec![Welford::default(); h],
            f_ref,
        }
    }

    fn merge(&mut self, other: &SimSummary) {
        for n in 0..self.survivors.len() {
            self.survivors[n] += other.survivors[n];
            for (a, b) in self.law_counts[n].iter_mut().zip(&other.law_counts[n]) {
                *a += b;
            }
            self.mean_ratio[n].merge(&other.mean_ratio[n]);
        }
    }

    /// `P(τ > n)` with its binomial standard error.
    pub fn survival(&self, n: usize) -> EstimateWithCI {
        let total = self.config.trajectories as f64;
        let s = self.survivors[n];
        let p = s as f64 / total;
        EstimateWithCI {
            estimate: p,
            se: (p * (1.0 - p) / total).sqrt(),
            survivors: s,
            small_sample: s < SMALL_SAMPLE,
        }
    }

    /// Empirical law of `X_n` among survivors past `n`.
    pub fn conditional_law(&self, n: usize) -> Result<Distribution> {
        if self.survivors[n] == 0 {
            return Err(no_survivors(n, self.config.trajectories));
        }
        Distribution::from_mass(self.law_counts[n].iter().map(|&c| c as f64).collect())
    }

    /// Survivor average of `(1/n) Σ_{k<n} f(X_k)`, `n ≥ 1`.
    pub fn mean_ratio(&self, n: usize) -> Result<EstimateWithCI> {
        if n == 0 {
            return Err(Error::InvalidArgument("the mean ratio needs n ≥ 1".into()));
        }
        let w = &self.mean_ratio[n];
        if w.count == 0 {
            return Err(no_survivors(n, self.config.trajectories));
        }
        Ok(EstimateWithCI {
            estimate: self.f_ref + w.mean,
            se: w.standard_error(),
            survivors: w.count,
            small_sample: w.count < SMALL_SAMPLE,
        })
    }
}

fn no_survivors(n: usize, paths: u64) -> Error {
    Error::NullEvent(format!(
        "no trajectory out of {paths} survived to n = {n}; increase --paths or lower the horizon"
    ))
}

fn simulate_block(
    problem: &AbsorbedChainProblem,
    sampler: &Sampler,
    f: &[f64],
    config: &SimConfig,
    block: u64,
) -> SimSummary {
    let mut acc = SimSummary::empty(*config, problem.n_states(), f[0]);
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(config.trajectories);
    let mut running = vec![0.0; config.horizon + 1];
    for i in start..end {
        let mut sum = 0.0;
        let mut last = 0;
        run_one(problem, sampler, config.seed, i, config.horizon, |n, x| {
            acc.survivors[n] += 1;
            acc.law_counts[n][x] += 1;
            // running[n] = Σ_{k<n} (f(X_k) − f_ref), only read for survivors past n
            running[n] = sum;
            sum += f[x] - acc.f_ref;
            last = n;
        });
        for n in 1..=last {
            acc.mean_ratio[n].push(running[n] / n as f64);
        }
    }
    acc
}

/// Simulates `config.trajectories` paths and collects per-time statistics for `f`.
pub fn simulate(problem: &AbsorbedChainProblem, f: &[f64], config: &SimConfig) -> Result<SimSummary> {
    if f.len() != problem.n_states() {
        return Err(Error::InvalidArgument("f must have one value per state".into()));
    }
    if config.trajectories == 0 {
        return Err(Error::InvalidArgument("at least one trajectory is required".into()));
    }
    let sampler = Sampler::new(problem)?;
    let n_blocks = config.trajectories.div_ceil(BLOCK_SIZE);
    let shards = config.shards.clamp(1, n_blocks as usize) as u64;
    let mut partials: Vec<Option<SimSummary>> = vec![None; n_blocks as usize];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..shards)
            .map(|s| {
                let sampler = &sampler;
                scope.spawn(move || {
                    let lo = n_blocks * s / shards;
                    let hi = n_blocks * (s + 1) / shards;
                    (lo..hi)
                        .map(|b| (b, simulate_block(problem, sampler, f, config, b)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (b, part) in h.join().expect("simulation worker panicked") {
                partials[b as usize] = Some(part);
            }
        }
    });
    let mut total = SimSummary::empty(*config, problem.n_states(), f[0]);
    for part in partials.into_iter().flatten() {
        total.merge(&part);
    }
    Ok(total)
}

/// Empirical conditional law of `X_n` and mean ratio at `n = config.horizon`.
pub fn estimate_conditionals(
    problem: &AbsorbedChainProblem,
    f: &[f64],
    config: &SimConfig,
) -> Result<(Distribution, EstimateWithCI)> {
    let summary = simulate(problem, f, config)?;
    let n = config.horizon;
    Ok((summary.conditional_law(n)?, summary.mean_ratio(n.max(1))?))
}

/// `P(τ > horizon)`.
pub fn estimate_survival(problem: &AbsorbedChainProblem, config: &SimConfig) -> Result<EstimateWithCI> {
    let f = vec![0.0; problem.n_states()];
    Ok(simulate(problem, &f, config)?.survival(config.horizon))
}

/// Outcome of a Q-process run.
#[derive(Debug, Clone, PartialEq)]
pub struct QProcessRun {
    pub steps: usize,
    /// Visits per base state.
    pub visits: Vec<u64>,
    /// Steps that landed in a killed state; zero for a correct kernel.
    pub boundary_hits: u64,
}

/// Simulates the Q-process from `x` for `steps` steps with a single seeded stream.
pub fn simulate_qprocess(
    problem: &AbsorbedChainProblem,
    kernel: &QProcessKernel,
    x: usize,
    steps: usize,
    seed: u64,
) -> Result<QProcessRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut visits = vec![0u64; kernel.n_states];
    let mut boundary_hits = 0;
    let mut y = x;
    visits[y] += 1;
    for n in 1..=steps {
        let row = kernel.slice(n).row(y);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = None;
        for (z, &w) in row.iter().enumerate() {
            acc += w;
            if w > 0.0 && u < acc {
                next = Some(z);
                break;
            }
        }
        // round-off can leave u just above the last partial sum
        let z = next
            .or_else(|| row.iter().rposition(|&w| w > 0.0))
            .ok_or_else(|| Error::Numerical(format!("Q-process row {y} at step {n} is empty")))?;
        if problem.boundary().is_killed(n, z) {
            boundary_hits += 1;
        }
        visits[z] += 1;
        y = z;
    }
    Ok(QProcessRun {
        steps,
        visits,
        boundary_hits,
    })
}
