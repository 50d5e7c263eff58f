//! Continuous extensions of black-box set functions.
//!
//! A set function f : `2^[n]` -> R (with f(∅) = 0) is extended onto
//! continuous domains two ways:
//!
//! - **scalar** extensions on `[0,1]^n`, built from a sparse distribution
//!   p_x over sets whose expected indicator reproduces x; the extension
//!   value is the expected f. Five constructions live in [`scalar`].
//! - **lifted** extensions on PSD matrices, built by eigendecomposing the
//!   input and combining the per-eigenvector scalar distributions into a
//!   pair distribution; see [`neural`].
//!
//! The [`verify`] module certifies the defining feasibility and agreement
//! conditions numerically, [`closure`] computes the exact convex closure
//! by linear programming as an independent reference, [`graphs`] provides
//! clique and independent-set surrogate objectives with exhaustive ground
//! truths, and [`optim`] runs projected-(sub)gradient minimization over the
//! box, the simplex, or a PSD factor using a built-in reverse-mode tape.

pub mod autodiff;
pub mod closure;
pub mod dist;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod neural;
pub mod optim;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod subset;
pub mod verify;

pub use dist::{PairDistribution, SupportedDistribution};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
pub use oracle::{SetFunctionOracle, SetValue};
pub use scalar::{ScalarExtensionKind, SortPermutation};
pub use subset::Subset;
