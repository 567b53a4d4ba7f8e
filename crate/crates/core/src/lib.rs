//! Higher-order absolute differences of two-state Markov chains.
//!
//! * [`bitkernel`]: popcount / trailing-ones combinatorics and the binary Pascal triangle.
//! * [`capacity`]: the capacities `C` and `c` of index sets, family unions, density.
//! * [`chain`]: the two-state chain model, its marginals and path sampling.
//! * [`diffkernel`]: the difference operator and the exact law of its output.
//! * [`convergence`]: deviation sweeps along index sets, rate fits, Monte Carlo checks.
//! * [`cli`]: the command-line front end.

pub mod bitkernel;
pub mod capacity;
pub mod chain;
pub mod cli;
pub mod convergence;
pub mod diffkernel;
mod error;

pub use error::{Error, Result};
