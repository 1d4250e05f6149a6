//! Glued spline spaces and Galerkin matrices.

mod matrices;
mod space;

pub use matrices::{
    assemble_load, assemble_load_with, assemble_mass, assemble_mass_stiffness,
    assemble_mass_stiffness_with, assemble_stiffness, integrate, l2_error, l2_norm,
};
pub use space::DiscreteSpace;
