//! File formats: JSON problem specs, `f` files, CSV tables and input digests.
//!
//! A problem file looks like
//!
//! ```json
//! {"states": ["a", "b", "dead"],
//!  "kernel": [[0.5, 0.3, 0.2], [0.4, 0.4, 0.2], [0, 0, 1]],
//!  "gamma": 1,
//!  "killing_sets": [["dead"]],
//!  "initial": {"a": 1}}
//! ```
//!
//! State labels may be strings or integers. An `f` file maps labels to
//! values; missing labels default to 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::chain::{AbsorbedChainProblem, ProblemParts, StateSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub states: Vec<Value>,
    pub kernel: Vec<Vec<f64>>,
    pub gamma: usize,
    pub killing_sets: Vec<Vec<Value>>,
    pub initial: BTreeMap<String, f64>,
}

fn malformed(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Malformed {
        location: location.into(),
        message: message.into(),
    }
}

fn label_of(v: &Value, location: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        other => Err(malformed(location, format!("expected a string or integer label, found {other}"))),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    malformed(format!("line {}, column {}", e.line(), e.column()), e.to_string())
}

impl ProblemFile {
    pub fn into_parts(self) -> Result<ProblemParts> {
        let labels = self
            .states
            .iter()
            .enumerate()
            .map(|(i, v)| label_of(v, &format!("states[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let n = labels.len();
        if n == 0 {
            return Err(malformed("states", "at least one state is required"));
        }
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        if index.len() != n {
            return Err(malformed("states", "state labels must be distinct"));
        }
        if self.kernel.len() != n {
            return Err(malformed(
                "kernel",
                format!("expected {n} rows, found {}", self.kernel.len()),
            ));
        }
        for (i, row) in self.kernel.iter().enumerate() {
            if row.len() != n {
                return Err(malformed(
                    format!("kernel[{i}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(malformed(format!("kernel[{i}][{j}]"), format!("{v} is not a probability")));
                }
            }
        }
        if self.gamma == 0 {
            return Err(malformed("gamma", "the period must be at least 1"));
        }
        if self.killing_sets.len() != self.gamma {
            return Err(malformed(
                "killing_sets",
                format!("gamma is {} but {} killing sets are given", self.gamma, self.killing_sets.len()),
            ));
        }
        let killing_sets = self
            .killing_sets
            .iter()
            .enumerate()
            .map(|(k, set)| {
                set.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let loc = format!("killing_sets[{k}][{j}]");
                        let l = label_of(v, &loc)?;
                        index
                            .get(l.as_str())
                            .copied()
                            .ok_or_else(|| malformed(loc, format!("unknown state {l:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut initial = vec![0.0; n];
        for (l, &w) in &self.initial {
            let loc = format!("initial.{l}");
            let i = *index
                .get(l.as_str())
                .ok_or_else(|| malformed(&loc, format!("unknown state {l:?}")))?;
            if !w.is_finite() || w < 0.0 {
                return Err(malformed(loc, format!("weight {w} must be nonnegative")));
            }
            initial[i] = w;
        }
        let rows: Vec<f64> = self.kernel.into_iter().flatten().collect();
        Ok(ProblemParts {
            labels,
            kernel: DMatrix::from_row_slice(n, n, &rows),
            killing_sets,
            initial,
        })
    }

    pub fn from_problem(problem: &AbsorbedChainProblem) -> Self {
        let space = problem.space();
        let p = problem.kernel().matrix();
        Self {
            states: space.labels().iter().map(|l| Value::String(l.clone())).collect(),
            kernel: (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect(),
            gamma: problem.gamma(),
            killing_sets: (0..problem.gamma())
                .map(|k| {
                    problem
                        .boundary()
                        .killing_set(k)
                        .into_iter()
                        .map(|x| Value::String(space.label(x).to_string()))
                        .collect()
                })
                .collect(),
            initial: problem
                .initial()
                .labeled(space)
                .filter(|(_, w)| *w > 0.0)
                .map(|(l, w)| (l.to_string(), w))
                .collect(),
        }
    }
}

/// Problem parts from JSON text, before validation.
pub fn parse_parts(text: &str) -> Result<ProblemParts> {
    let file: ProblemFile = serde_json::from_str(text).map_err(json_error)?;
    file.into_parts()
}

/// Parses and validates a problem.
pub fn parse_problem(text: &str) -> Result<AbsorbedChainProblem> {
    AbsorbedChainProblem::new(parse_parts(text)?)
}

pub fn problem_to_json(problem: &AbsorbedChainProblem) -> String {
    serde_json::to_string_pretty(&ProblemFile::from_problem(problem)).expect("problem files serialize")
}

/// An input file read whole, with its SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Input {
    pub text: String,
    pub digest: String,
}

pub fn read_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path)?;
    Ok(Input {
        digest: sha256_hex(text.as_bytes()),
        text,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Values of `f` by state, from a `{label: value}` object.
pub fn parse_f(text: &str, space: &StateSpace) -> Result<Vec<f64>> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text).map_err(json_error)?;
    let mut f = vec![0.0; space.len()];
    for (l, v) in map {
        let i = space
            .index_of(&l)
            .ok_or_else(|| malformed(format!("f.{l}"), format!("unknown state {l:?}")))?;
        f[i] = v;
    }
    Ok(f)
}

/// A CSV table with a header row; numbers use Rust's shortest round-trip form.
pub fn csv_table<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    let head: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    let _ = writeln!(out, "{}", head.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
