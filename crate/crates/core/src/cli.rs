//! Command-line driver.
//!
//! Every command writes a JSON report (to `--out`, or stdout) and a short
//! human-readable summary on stderr. Tables go to a CSV file next to the
//! report when `--out` is given. Exit status: 0 on success, 2 when the
//! analysis does not apply (tied dominant classes, conditioning on a null
//! event), 1 on malformed input or usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::chain::{lift_chain, validate_problem, AbsorbedChainProblem, Distribution, StateSpace};
use crate::conditioning::{conditional_laws, mean_ratio_series, qld_cycle};
use crate::ergodic::quasi_ergodic_distribution;
use crate::error::{Error, Result};
use crate::io::{csv_table, parse_f, parse_parts, problem_to_json, read_input, Input};
use crate::qprocess::build_qprocess;
use crate::sim::{simulate, SimConfig};
use crate::spectral::{decompose_classes, peripheral_system};
use crate::walk::RandomWalkSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "quasistat", version, about = "Absorbed Markov chains with periodically moving boundaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a problem file and list every violated invariant.
    Validate(InputArgs),
    /// Communicating classes, periods and Perron data of the lifted chain.
    Analyze(InputArgs),
    /// Quasi-ergodic distribution and the limit of conditioned time averages of f.
    Qed(FArgs),
    /// Limit-point cycle of the conditioned laws.
    QldCycle(InputArgs),
    /// Q-process kernel, one matrix per phase.
    Qprocess(QprocessArgs),
    /// Exact conditioned time average of f at horizon n.
    Oracle(OracleArgs),
    /// Monte Carlo estimates.
    Simulate(SimulateArgs),
    /// Emit a problem file for the ±1 random walk.
    Randomwalk(WalkArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Problem file (JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Function file: {"label": value, ...}; missing states are 0.
    #[arg(long)]
    pub f: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QprocessArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Starting state; defaults to the initial law when it is a point mass.
    #[arg(long)]
    pub start: Option<String>,
    /// Report only the slice driving the step into this phase.
    #[arg(long)]
    pub phase: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub f: PathBuf,
    /// Horizon.
    #[arg(long)]
    pub n: usize,
    /// Also compare with the spectral limit and report whether they agree within tol.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub f: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Probability of a downward step.
    #[arg(long)]
    pub p: f64,
    /// Half-width of the moving example (states 0..2N, γ = 2).
    #[arg(long = "N", conflicts_with = "k", required_unless_present = "k")]
    pub n: Option<usize>,
    /// Interior size of the fixed interval (states 0..K+1).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Moving boundary (implied by --N).
    #[arg(long, conflicts_with = "k")]
    pub moving: bool,
    /// Starting state.
    #[arg(long, default_value_t = 1)]
    pub start: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command: the JSON report, a summary line and an optional CSV table.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub summary: String,
    pub csv: Option<String>,
}

fn header(command: &str, digest: Option<&str>, seed: Option<u64>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!("quasistat"));
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(command));
    m.insert("input_digest".into(), json!(digest));
    m.insert("seed".into(), json!(seed));
    m
}

fn load(args: &InputArgs) -> Result<(AbsorbedChainProblem, Input)> {
    let input = read_input(&args.input)?;
    let problem = AbsorbedChainProblem::new(parse_parts(&input.text)?)?;
    Ok((problem, input))
}

fn load_f(path: Option<&Path>, space: &StateSpace) -> Result<Option<Vec<f64>>> {
    path.map(|p| parse_f(&std::fs::read_to_string(p)?, space)).transpose()
}

fn labeled(d: &Distribution, space: &StateSpace) -> Value {
    Value::Object(d.labeled(space).map(|(l, w)| (l.to_string(), json!(w))).collect())
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Validate(_) => "validate",
        Command::Analyze(_) => "analyze",
        Command::Qed(_) => "qed",
        Command::QldCycle(_) => "qld-cycle",
        Command::Qprocess(_) => "qprocess",
        Command::Oracle(_) => "oracle",
        Command::Simulate(_) => "simulate",
        Command::Randomwalk(_) => "randomwalk",
    }
}

/// Runs one command without touching the output files.
pub fn execute(command: &Command) -> Result<Report> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Analyze(a) => analyze(a),
        Command::Qed(a) => qed(a),
        Command::QldCycle(a) => cycle(a),
        Command::Qprocess(a) => qprocess(a),
        Command::Oracle(a) => oracle(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Randomwalk(a) => randomwalk(a),
    }
}

fn validate(a: &InputArgs) -> Result<Report> {
    let input = read_input(&a.input)?;
    let parts = parse_parts(&input.text)?;
    let report = validate_problem(&parts);
    if !report.is_valid() {
        return Err(Error::InvalidProblem(report));
    }
    let mut m = header("validate", Some(&input.digest), None);
    m.insert("valid".into(), json!(true));
    m.insert("violations".into(), json!([]));
    Ok(Report {
        json: Value::Object(m),
        summary: format!("{}: valid", a.input.display()),
        csv: None,
    })
}

fn analyze(a: &InputArgs) -> Result<Report> {
    let (problem, input) = load(a)?;
    let lifted = lift_chain(&problem);
    let q = lifted.survivor_matrix();
    let decomp = decompose_classes(q)?;
    let label = |s: usize| lifted.survivor_label(problem.space(), s);
    let classes: Vec<Value> = decomp
        .classes
        .iter()
        .map(|c| {
            let system = peripheral_system(c);
            let (left, right) = system.residuals(q, c);
            json!({
                "states": c.states.iter().map(|&s| label(s)).collect::<Vec<_>>(),
                "T": c.period,
                "cyclic_classes": c.cyclic_classes.iter()
                    .map(|cc| cc.iter().map(|&s| label(s)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "rho": c.rho,
                "nu": c.nu,
                "xi": c.xi,
                "degenerate": c.degenerate,
                "residuals": {
                    "perron_left": c.residuals.left,
                    "perron_right": c.residuals.right,
                    "normalization": c.residuals.normalization,
                    "peripheral_left": left,
                    "peripheral_right": right,
                    "iterations": c.residuals.iterations,
                },
            })
        })
        .collect();
    let reachable: Vec<Vec<usize>> = decomp.successors.iter().map(|s| s.iter().copied().collect()).collect();
    let mut m = header("analyze", Some(&input.digest), None);
    m.insert("gamma".into(), json!(problem.gamma()));
    m.insert("lifted_states".into(), json!(lifted.size()));
    m.insert(
        "survivors".into(),
        json!((0..lifted.n_survivors()).map(label).collect::<Vec<_>>()),
    );
    m.insert("spectral_radius".into(), json!(decomp.spectral_radius()));
    m.insert("classes".into(), Value::Array(classes));
    m.insert("class_successors".into(), json!(reachable));
    Ok(Report {
        json: Value::Object(m),
        summary: format!(
            "{} lifted survivors, {} classes, spectral radius {:.12}",
            lifted.n_survivors(),
            decomp.classes.len(),
            decomp.spectral_radius()
        ),
        csv: None,
    })
}

fn qed(a: &FArgs) -> Result<Report> {
    let (problem, input) = load(&a.io)?;
    let f = load_f(a.f.as_deref(), problem.space())?;
    let qed = quasi_ergodic_distribution(&problem)?;
    let lifted = lift_chain(&problem);
    let class = qed.selected_class();
    let phi = f.as_ref().map(|f| qed.phi(f));
    let mut m = header("qed", Some(&input.digest), None);
    m.insert(
        "selected_class".into(),
        json!(class.states.iter().map(|&s| lifted.survivor_label(problem.space(), s)).collect::<Vec<_>>()),
    );
    m.insert("rho_max".into(), json!(qed.rho_max()));
    m.insert("eta".into(), labeled(&qed.eta, problem.space()));
    m.insert("phi_of_f".into(), json!(phi));
    m.insert("warnings".into(), json!(qed.selection.warnings));
    let summary = match phi {
        Some(v) => format!("rho_max = {:.12}, phi(f) = {v:.12}", qed.rho_max()),
        None => format!("rho_max = {:.12}", qed.rho_max()),
    };
    Ok(Report {
        json: Value::Object(m),
        summary,
        csv: None,
    })
}

fn cycle(a: &InputArgs) -> Result<Report> {
    let (problem, input) = load(a)?;
    let c = qld_cycle(&problem)?;
    let space = problem.space();
    let mut m = header("qld-cycle", Some(&input.digest), None);
    m.insert(
        "cycle".into(),
        json!(c.cycle.iter().zip(&c.times).map(|(d, t)| json!({"time": t, "law": labeled(d, space)})).collect::<Vec<_>>()),
    );
    m.insert("verdict".into(), json!(c.verdict()));
    m.insert("lifted_period".into(), json!(c.lifted_period));
    m.insert("iterations".into(), json!(c.iterations));
    m.insert("fixed_point_tv".into(), json!(c.fixed_point_tv));
    m.insert("consecutive_tv".into(), json!(c.consecutive_tv));
    m.insert("max_pairwise_tv".into(), json!(c.max_pairwise_tv));
    let horizon = c.times.last().copied().unwrap_or(0).min(200);
    let laws = conditional_laws(&problem, horizon)?;
    let mut head = vec!["n".to_string()];
    head.extend(space.labels().iter().cloned());
    let csv = csv_table(
        &head,
        laws.iter().enumerate().map(|(n, d)| {
            let mut row = vec![n as f64];
            row.extend_from_slice(d.weights());
            row
        }),
    );
    Ok(Report {
        json: Value::Object(m),
        summary: format!("{} limit points: {}", c.cycle.len(), c.verdict()),
        csv: Some(csv),
    })
}

fn qprocess(a: &QprocessArgs) -> Result<Report> {
    let (problem, input) = load(&a.io)?;
    let space = problem.space();
    let x = match &a.start {
        Some(l) => space
            .index_of(l)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state {l:?}")))?,
        None => match problem.initial().support()[..] {
            [x] => x,
            _ => {
                return Err(Error::InvalidArgument(
                    "the initial law is not a point mass; pass --start".into(),
                ))
            }
        },
    };
    let k = build_qprocess(&problem, x)?;
    let phases: Vec<usize> = match a.phase {
        Some(p) if p >= k.gamma => {
            return Err(Error::InvalidArgument(format!("phase {p} outside 0..{}", k.gamma - 1)))
        }
        Some(p) => vec![p],
        None => (0..k.gamma).collect(),
    };
    let slices: Vec<Value> = phases
        .iter()
        .map(|&ph| {
            let rows: Map<String, Value> = (0..k.n_states)
                .filter(|&y| k.rows[ph][y])
                .map(|y| {
                    let row: Map<String, Value> = (0..k.n_states)
                        .filter(|&z| k.slices[ph][(y, z)] > 0.0)
                        .map(|z| (space.label(z).to_string(), json!(k.slices[ph][(y, z)])))
                        .collect();
                    (space.label(y).to_string(), Value::Object(row))
                })
                .collect();
            json!({"phase": ph, "rows": rows})
        })
        .collect();
    let mut m = header("qprocess", Some(&input.digest), None);
    m.insert("start".into(), json!(space.label(x)));
    m.insert("gamma".into(), json!(k.gamma));
    m.insert("rho".into(), json!(k.rho));
    m.insert("slices".into(), Value::Array(slices));
    m.insert("max_row_deviation".into(), json!(k.max_row_deviation()));
    m.insert("renormalization_deviation".into(), json!(k.renormalization_deviation));
    m.insert("warnings".into(), json!(k.warnings));
    Ok(Report {
        json: Value::Object(m),
        summary: format!(
            "Q-process from {}: {} phase slices, rho = {:.12}",
            space.label(x),
            k.gamma,
            k.rho
        ),
        csv: None,
    })
}

fn oracle(a: &OracleArgs) -> Result<Report> {
    let (problem, input) = load(&a.io)?;
    let f = parse_f(&std::fs::read_to_string(&a.f)?, problem.space())?;
    if a.n == 0 {
        return Err(Error::InvalidArgument("the horizon --n must be at least 1".into()));
    }
    let series = mean_ratio_series(&problem, &f, a.n)?;
    let value = *series.last().expect("n ≥ 1");
    let mut m = header("oracle", Some(&input.digest), None);
    m.insert("n".into(), json!(a.n));
    m.insert("mean_ratio".into(), json!(value));
    let mut summary = format!("E[(1/n) Σ f(X_k) | τ > n] at n = {}: {value:.12}", a.n);
    if let Some(tol) = a.tol {
        let phi = quasi_ergodic_distribution(&problem)?.phi(&f);
        let diff = (value - phi).abs();
        m.insert("phi_of_f".into(), json!(phi));
        m.insert("abs_difference".into(), json!(diff));
        m.insert("tol".into(), json!(tol));
        m.insert("within_tol".into(), json!(diff <= tol));
        summary.push_str(&format!(", spectral limit {phi:.12} (|diff| = {diff:.3e})"));
    }
    let csv = csv_table(
        &["n", "mean_ratio"],
        series.iter().enumerate().map(|(i, v)| vec![(i + 1) as f64, *v]),
    );
    Ok(Report {
        json: Value::Object(m),
        summary,
        csv: Some(csv),
    })
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Report> {
    let (problem, input) = load(&a.io)?;
    let f = load_f(a.f.as_deref(), problem.space())?.unwrap_or_else(|| vec![0.0; problem.n_states()]);
    let config = SimConfig {
        seed: a.seed,
        trajectories: a.paths,
        horizon: a.horizon,
        shards: a.shards,
    };
    let s = simulate(&problem, &f, &config)?;
    let n = a.horizon;
    let law = s.conditional_law(n)?;
    let survival = s.survival(n);
    let mut m = header("simulate", Some(&input.digest), Some(a.seed));
    m.insert("paths".into(), json!(a.paths));
    m.insert("horizon".into(), json!(n));
    m.insert("shards".into(), json!(a.shards));
    m.insert(
        "survival".into(),
        json!({"estimate": survival.estimate, "se": survival.se, "survivors": survival.survivors}),
    );
    m.insert("conditional_law".into(), labeled(&law, problem.space()));
    let mut summary = format!(
        "P(τ > {n}) ≈ {:.6} ± {:.1e} ({} survivors)",
        survival.estimate, survival.se, survival.survivors
    );
    if n >= 1 {
        let mr = s.mean_ratio(n)?;
        m.insert(
            "mean_ratio".into(),
            json!({"estimate": mr.estimate, "se": mr.se, "survivors": mr.survivors, "small_sample": mr.small_sample}),
        );
        summary.push_str(&format!(", mean ratio ≈ {:.6} ± {:.1e}", mr.estimate, mr.se));
    }
    let csv = csv_table(
        &["n", "survival", "survival_se", "survivors", "mean_ratio", "mean_ratio_se"],
        (1..=n).map(|t| {
            let sv = s.survival(t);
            let w = &s.mean_ratio[t];
            let (mean, se) = if w.count == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (s.f_ref + w.mean, w.standard_error())
            };
            vec![t as f64, sv.estimate, sv.se, sv.survivors as f64, mean, se]
        }),
    );
    Ok(Report {
        json: Value::Object(m),
        summary,
        csv: Some(csv),
    })
}

fn randomwalk(a: &WalkArgs) -> Result<Report> {
    let spec = match (a.n, a.k) {
        (Some(n), None) => RandomWalkSpec::moving(a.p, n),
        (None, Some(k)) => RandomWalkSpec::fixed(a.p, k),
        _ => return Err(Error::InvalidArgument("give exactly one of --N and --K".into())),
    };
    let problem = spec.problem(a.start)?;
    let text = problem_to_json(&problem);
    Ok(Report {
        json: serde_json::from_str(&text).expect("round trip"),
        summary: format!("walk with {} states, gamma = {}", problem.n_states(), problem.gamma()),
        csv: None,
    })
}

fn write_out(out: Option<&Path>, report: &Report) -> Result<()> {
    let text = serde_json::to_string_pretty(&report.json).expect("reports serialize") + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            if let Some(csv) = &report.csv {
                std::fs::write(path.with_extension("csv"), csv)?;
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn out_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Validate(a) | Command::Analyze(a) | Command::QldCycle(a) => a.out.as_deref(),
        Command::Qed(a) => a.io.out.as_deref(),
        Command::Qprocess(a) => a.io.out.as_deref(),
        Command::Oracle(a) => a.io.out.as_deref(),
        Command::Simulate(a) => a.io.out.as_deref(),
        Command::Randomwalk(a) => a.out.as_deref(),
    }
}

fn error_report(command: &Command, e: &Error) -> Value {
    let mut m = header(name(command), None, None);
    m.insert(
        "status".into(),
        json!(if e.is_inapplicable() { "inapplicable" } else { "error" }),
    );
    m.insert("error".into(), json!(e.to_string()));
    match e {
        Error::HypothesisViolated { classes, rho } => {
            m.insert("tied_classes".into(), json!(classes));
            m.insert("rho".into(), json!(rho));
        }
        Error::InvalidProblem(r) => {
            m.insert("valid".into(), json!(false));
            m.insert("violations".into(), json!(r.messages()));
        }
        _ => {}
    }
    Value::Object(m)
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = out_path(&cli.command);
    match execute(&cli.command) {
        Ok(report) => match write_out(out, &report) {
            Ok(()) => {
                eprintln!("{}", report.summary);
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(e) => {
            let report = Report {
                json: error_report(&cli.command, &e),
                summary: String::new(),
                csv: None,
            };
            let _ = write_out(out, &report);
            eprintln!("error: {e}");
            if e.is_inapplicable() {
                2
            } else {
                1
            }
        }
    }
}
