//! Finite-state Markov chains killed by a periodically moving boundary.
//!
//! The crate lifts a chain with a γ-periodic killing schedule onto
//! `E × Z/γZ`, where the boundary becomes static, and then works with the
//! substochastic survivor matrix of the lifted chain:
//!
//! - [`chain`]: problem types, validation, lifting.
//! - [`spectral`]: communicating classes, periods, cyclic classes, Perron data
//!   and the peripheral eigensystem of each class.
//! - [`conditioning`]: conditioned laws, the γ-step collapsed chain,
//!   limit-point cycles of the conditioned laws and the exact mean-ratio oracle.
//! - [`ergodic`]: dominant-class selection and quasi-ergodic distributions.
//! - [`qprocess`]: the periodic Q-process kernel.
//! - [`walk`]: closed forms for the ±1 random walk and its moving example.
//! - [`sim`]: seeded Monte Carlo estimates.
//! - [`io`] and [`cli`]: JSON/CSV file formats and the command-line driver.

pub mod chain;
pub mod cli;
pub mod conditioning;
pub mod ergodic;
pub mod error;
pub mod io;
pub mod qprocess;
pub mod sim;
pub mod spectral;
pub mod walk;

pub use chain::{
    lift_chain, survivor_restriction, validate_problem, AbsorbedChainProblem, Distribution,
    LiftedChain, MovingBoundary, ProblemParts, StateSpace, TransitionKernel, ValidationReport,
    Violation,
};
pub use error::{Error, Result};
