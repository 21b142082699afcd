//! Dominant-class selection and quasi-ergodic (mean-ratio) distributions.
//!
//! Among the classes charged by the initial law, the one with the largest
//! Perron root governs the conditioned time averages, provided it is unique.
//! Its quasi-ergodic law is `η(i) = ν(i) ξ(i)`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::chain::{lift_chain, AbsorbedChainProblem, Distribution};
use crate::error::{Error, Result};
use crate::spectral::{decompose_classes, ClassDecomposition};

/// Relative tolerance under which two Perron roots count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSelection {
    /// Classes meeting the support of the initial law.
    pub charged: Vec<usize>,
    pub rho_max: f64,
    /// Charged classes whose Perron root ties with `rho_max`.
    pub maximizers: Vec<usize>,
    pub unique_dominant: bool,
    pub selected: Option<usize>,
    pub warnings: Vec<String>,
}

/// Selection data without enforcing uniqueness of the maximizer.
pub fn classify(decomp: &ClassDecomposition, mu: &[f64]) -> ClassSelection {
    let charged: BTreeSet<usize> = mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, _)| decomp.class_of[i])
        .collect();
    let rho_max = charged
        .iter()
        .map(|&c| decomp.classes[c].rho)
        .fold(0.0, f64::max);
    let maximizers: Vec<usize> = charged
        .iter()
        .copied()
        .filter(|&c| (decomp.classes[c].rho - rho_max).abs() <= TIE_RTOL * rho_max)
        .collect();
    let unique_dominant = maximizers.len() == 1;

    let mut warnings = Vec::new();
    let reachable = decomp.reachable_from(&charged);
    let escaped: Vec<usize> = reachable.difference(&charged).copied().collect();
    if !escaped.is_empty() {
        warnings.push(format!(
            "surviving mass can flow from the charged classes into classes {escaped:?}; \
             the spectral answer may not apply, the exact oracle remains authoritative"
        ));
        let stronger: Vec<usize> = escaped
            .iter()
            .copied()
            .filter(|&c| decomp.classes[c].rho >= rho_max * (1.0 - TIE_RTOL))
            .collect();
        if !stronger.is_empty() {
            warnings.push(format!(
                "reachable classes {stronger:?} have a Perron root at least rho_max = {rho_max}"
            ));
        }
    }
    ClassSelection {
        charged: charged.into_iter().collect(),
        rho_max,
        selected: unique_dominant.then(|| maximizers[0]),
        maximizers,
        unique_dominant,
        warnings,
    }
}

/// [`classify`], failing when the maximizing class is not unique.
pub fn select_dominant(decomp: &ClassDecomposition, mu: &[f64]) -> Result<ClassSelection> {
    if mu.iter().all(|&w| w <= 0.0) {
        return Err(Error::InvalidArgument("initial law has no mass on survivor states".into()));
    }
    let sel = classify(decomp, mu);
    if !sel.unique_dominant {
        return Err(Error::HypothesisViolated {
            classes: sel
                .maximizers
                .iter()
                .map(|&c| decomp.classes[c].states.iter().map(|s| s.to_string()).collect())
                .collect(),
            rho: sel.rho_max,
        });
    }
    if sel.rho_max == 0.0 {
        let charged: BTreeSet<usize> = sel.charged.iter().copied().collect();
        let alive = decomp
            .reachable_from(&charged)
            .iter()
            .any(|&c| decomp.classes[c].rho > 0.0);
        return Err(if alive {
            Error::InvalidArgument(
                "the initial law only charges transient classes with rho = 0".into(),
            )
        } else {
            Error::NullEvent("survival beyond a finite horizon has probability zero".into())
        });
    }
    Ok(sel)
}

/// `η(i) = ν_max(i) ξ_max(i)` over the states of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRatioDistribution {
    pub weights: Vec<f64>,
}

impl MeanRatioDistribution {
    pub fn phi(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

fn eta_of(decomp: &ClassDecomposition, class: usize, n: usize) -> Vec<f64> {
    let c = &decomp.classes[class];
    let mut weights = vec![0.0; n];
    for (i, &s) in c.states.iter().enumerate() {
        weights[s] = c.nu[i] * c.xi[i];
    }
    weights
}

/// Quasi-ergodic law and `φ_max(f)` for a fixed boundary with survivor matrix `q`.
pub fn qed_fixed(q: &DMatrix<f64>, mu: &[f64], f: &[f64]) -> Result<(MeanRatioDistribution, f64)> {
    if mu.len() != q.nrows() || f.len() != q.nrows() {
        return Err(Error::InvalidArgument("mu and f must match the matrix size".into()));
    }
    let decomp = decompose_classes(q)?;
    let sel = select_dominant(&decomp, mu)?;
    let eta = MeanRatioDistribution {
        weights: eta_of(&decomp, sel.selected.unwrap(), q.nrows()),
    };
    let phi = eta.phi(f);
    Ok((eta, phi))
}

/// Quasi-ergodic data of a moving-boundary problem, computed on the lifted chain.
#[derive(Debug, Clone)]
pub struct MovingQed {
    pub selection: ClassSelection,
    pub decomposition: ClassDecomposition,
    /// `η` over the lifted survivors.
    pub lifted_eta: Vec<f64>,
    /// Phase marginal `η_E(x) = Σ_k η(x, k)`.
    pub eta: Distribution,
}

impl MovingQed {
    pub fn phi(&self, f: &[f64]) -> f64 {
        self.eta.expectation(f)
    }

    pub fn rho_max(&self) -> f64 {
        self.selection.rho_max
    }

    pub fn selected_class(&self) -> &crate::spectral::IrreducibleClass {
        &self.decomposition.classes[self.selection.selected.unwrap()]
    }
}

pub fn quasi_ergodic_distribution(problem: &AbsorbedChainProblem) -> Result<MovingQed> {
    let lifted = lift_chain(problem);
    let decomp = decompose_classes(lifted.survivor_matrix())?;
    let mu = lifted.embed_initial(problem.initial());
    let selection = select_dominant(&decomp, &mu).map_err(|e| match e {
        Error::HypothesisViolated { classes, rho } => Error::HypothesisViolated {
            classes: classes
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|s| lifted.survivor_label(problem.space(), s.parse().unwrap()))
                        .collect()
                })
                .collect(),
            rho,
        },
        other => other,
    })?;
    let lifted_eta = eta_of(&decomp, selection.selected.unwrap(), lifted.n_survivors());
    let eta = Distribution::from_mass(lifted.project(&lifted_eta))?;
    Ok(MovingQed {
        selection,
        decomposition: decomp,
        lifted_eta,
        eta,
    })
}

/// `(η_E, Σ_x f(x) η_E(x))` for the problem's initial law.
pub fn qed_moving(problem: &AbsorbedChainProblem, f: &[f64]) -> Result<(MovingQed, f64)> {
    if f.len() != problem.n_states() {
        return Err(Error::InvalidArgument("f must have one value per state".into()));
    }
    let qed = quasi_ergodic_distribution(problem)?;
    let phi = qed.phi(f);
    Ok((qed, phi))
}
