//! Multipatch surface descriptions.

mod io;
mod patch;
mod surface;

pub use io::{format_geometry, load_geometry, parse_geometry, save_geometry};
pub use patch::{AnalyticMap, AnalyticPatch, Jet, NurbsPatch, Patch};
pub use surface::{edge_point, Interface, MultipatchSurface};

pub(crate) use patch::checked_metric;
pub(crate) use surface::PointHash;
