//! White-noise loads and Gaussian random field samples.

mod elliptic;
mod field;
mod noise;
mod sqrt;

pub use elliptic::{complete_elliptic, jacobi_elliptic, EllipticParams};
pub use field::{sample_field, FieldSampler, SampleOptions, SampledField};
pub use noise::NoiseStream;
pub use sqrt::{sqrt_mass_apply, SqrtMass, BOUND_STEPS};
