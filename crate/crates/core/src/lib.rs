//! Sampling of Whittle-Matérn Gaussian random fields on closed multipatch
//! surfaces.
//!
//! The field solves `(κ² − Δ_Γ)^β u = W` for Gaussian white noise `W`. The
//! operator is discretized with continuous tensor-product B-splines pulled back
//! through the patch parametrizations, integer powers are handled by chained
//! solves, fractional powers by sinc quadrature of the Balakrishnan integral,
//! and the noise load `f ~ N(0, M)` is produced with an elliptic-function
//! expansion of `√M`. Linear systems are solved with conjugate gradients and a
//! BPX additive multilevel preconditioner over the dyadic refinement hierarchy.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod fractional;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod reference;
pub mod sampler;
pub mod splines;

pub use error::{Error, Result};
