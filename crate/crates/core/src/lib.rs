//! Stochastic series expansion with constant energy shifts.
//!
//! The simulator samples configurations `(n, string, alpha)` of the series
//! expansion of `exp(-beta H)` for the antiferromagnetic anisotropic XY chain,
//! where each Hamiltonian term is shifted by a positive constant so that it
//! becomes `|h_b| (M_b - O_b)`. Shifted terms break the no-branching property,
//! so weights are evaluated by dense statevector emulation, with an exact
//! operator-contraction pre-pass that shortens strings before evaluation.
//!
//! Module map:
//!
//! - [`model`]: the chain, its shifted bond terms and the energy offset.
//! - [`statevec`]: basis preparation and shifted-term application.
//! - [`contraction`]: exact rewriting of term products.
//! - [`sampler`]: the Metropolis chain over configurations.
//! - [`estimators`]: sign-reweighted averages with binning and jackknife.
//! - [`ed`]: exact diagonalization reference values.
//! - [`oracle`]: ancilla-circuit weights and exhaustive partition sums.
//! - [`harness`]: run configs, campaigns and CSV/JSON output.

pub mod contraction;
pub mod ed;
mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod statevec;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/statevector.md")]
    mod statevector {}
    #[doc = include_str!("../../../book/src/contraction.md")]
    mod contraction {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
