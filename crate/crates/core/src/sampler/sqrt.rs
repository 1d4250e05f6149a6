use rayon::prelude::*;

use super::elliptic::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{cg, power_bounds, CgOptions, CsrMatrix, Jacobi, SpectralBounds};

/// Power-iteration steps used when no spectral bounds are supplied.
pub const BOUND_STEPS: usize = 20;

const INNER: CgOptions = CgOptions {
    tol: 1e-13,
    max_iter: 100_000,
};

/// Reusable `y ↦ √M y` for a fixed SPD matrix.
#[derive(Clone, Debug)]
pub struct SqrtMass {
    params: EllipticParams,
    /// `M + w_k² I` with its Jacobi preconditioner, per term.
    shifted: Vec<(CsrMatrix, Jacobi)>,
    mass: CsrMatrix,
}

impl SqrtMass {
    pub fn new(m: &CsrMatrix, terms: usize, bounds: Option<SpectralBounds>) -> Result<Self> {
        let b = match bounds {
            Some(b) => b,
            None => power_bounds(m, BOUND_STEPS)?,
        };
        let params = EllipticParams::new(b.lower, b.upper, terms)?;
        let shifted = params
            .shifts
            .iter()
            .map(|w2| {
                let a = m.add_diagonal(*w2)?;
                let j = Jacobi::new(&a)?;
                Ok((a, j))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            shifted,
            mass: m.clone(),
        })
    }

    pub fn params(&self) -> &EllipticParams {
        &self.params
    }

    /// `(2K′√m/(πK̂)) · M · Σ_k dn/cn² (M + w_k² I)⁻¹ y`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.mass.nrows() {
            return Err(Error::Dimension(format!(
                "vector of length {} for a {}x{} matrix",
                y.len(),
                self.mass.nrows(),
                self.mass.ncols()
            )));
        }
        let parts: Vec<Vec<f64>> = self
            .shifted
            .par_iter()
            .map(|(a, j)| cg(a, y, &INNER, Some(j)).map(|(x, _)| x))
            .collect::<Result<_>>()?;
        let mut s = vec![0.0; y.len()];
        for (x, g) in parts.iter().zip(&self.params.weights) {
            for (a, b) in s.iter_mut().zip(x) {
                *a += g * b;
            }
        }
        let mut f = self.mass.mul_vec(&s);
        for v in &mut f {
            *v *= self.params.prefactor;
        }
        Ok(f)
    }
}

/// `f ≈ √M y` with `terms` expansion terms; bounds default to
/// [`power_bounds`] with [`BOUND_STEPS`] steps.
pub fn sqrt_mass_apply(
    m: &CsrMatrix,
    y: &[f64],
    terms: usize,
    bounds: Option<SpectralBounds>,
) -> Result<Vec<f64>> {
    SqrtMass::new(m, terms, bounds)?.apply(y)
}
