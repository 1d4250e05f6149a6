//! Sparse kernels, preconditioned conjugate gradients and the BPX additive
//! multilevel preconditioner.

mod bpx;
mod cg;
mod hierarchy;
mod power;
mod sparse;

pub use bpx::{Bpx, BpxVariant};
pub use cg::{cg, CgOptions, Identity, Jacobi, Preconditioner, SolveReport};
pub use hierarchy::Hierarchy;
pub use power::{power_bounds, SpectralBounds};
pub use sparse::{axpy, dot, norm2, CsrMatrix};
