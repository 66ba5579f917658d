//! Extreme scores in round-robin tournaments of equally strong players.
//!
//! Every match awards `X_ij` to player `i` and `1 - X_ij` to player `j`, with
//! `X_ij` drawn from a finite law on `{0, 1/k, ..., 1}` that is symmetric
//! about `1/2`. The crate computes the law of the number of players whose
//! standardized score exceeds the Gumbel threshold `x_n(t) = b_n + a_n t`:
//!
//! * [`asymptotics`]: norming constants and limiting laws,
//! * [`exact`]: exact finite-`n` marginals, indicator covariance and
//!   Poisson-approximation bounds via lattice convolution,
//! * [`sim`]: reproducible Monte Carlo tournaments,
//! * [`oracle`]: brute-force rational enumeration for tiny `n`,
//! * [`verify`]: the oracle-versus-engine verification suite,
//! * [`cli`]: the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod exact;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ModelMoments, OutcomeModel, ValidationOutcome};
