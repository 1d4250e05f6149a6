use super::cg::{cg, CgOptions, Jacobi};
use super::sparse::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Spectral estimates of an SPD matrix and safety-widened bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub lambda_min_est: f64,
    pub lambda_max_est: f64,
    /// `0.9 · λ_min` estimate.
    pub lower: f64,
    /// `1.1 · λ_max` estimate.
    pub upper: f64,
}

impl SpectralBounds {
    /// Condition bound `upper / lower`.
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    // fixed, non-symmetric start to avoid orthogonality to eigenvectors
    let v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0)
        .collect();
    let s = norm2(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// `steps` power iterations for `λ_max` and inverse iterations (inner CG)
/// for `λ_min`.
pub fn power_bounds(m: &CsrMatrix, steps: usize) -> Result<SpectralBounds> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Dimension("power bounds need a square non-empty matrix".into()));
    }
    let steps = steps.max(1);
    let mut x = start_vector(n);
    let mut lmax = 0.0;
    for _ in 0..steps {
        let y = m.mul_vec(&x);
        lmax = dot(&x, &y);
        let s = norm2(&y);
        x = y.into_iter().map(|v| v / s).collect();
    }
    let jac = Jacobi::new(m)?;
    let opts = CgOptions {
        tol: 1e-10,
        max_iter: 10 * n + 100,
    };
    let mut x = start_vector(n);
    let mut lmin = f64::INFINITY;
    for _ in 0..steps {
        let (y, _) = cg(m, &x, &opts, Some(&jac))?;
        let s = norm2(&y);
        x = y.into_iter().map(|v| v / s).collect();
        lmin = dot(&x, &m.mul_vec(&x));
    }
    if !(lmin > 0.0) || !(lmax > 0.0) {
        return Err(Error::IndefiniteOperator {
            iteration: 0,
            curvature: lmin.min(lmax),
        });
    }
    Ok(SpectralBounds {
        lambda_min_est: lmin,
        lambda_max_est: lmax,
        lower: 0.9 * lmin,
        upper: 1.1 * lmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum() {
        let d: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let m = CsrMatrix::diagonal_matrix(&d);
        let b = power_bounds(&m, 200).unwrap();
        assert!((b.lambda_max_est - 50.0).abs() < 0.5);
        assert!((b.lambda_min_est - 1.0).abs() < 1e-6);
        assert!(b.lower < 1.0 && b.upper > 50.0);
    }

    #[test]
    fn bounds_enclose_dense_spectrum() {
        use nalgebra::DMatrix;
        let n = 30;
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = 2.5 + (i as f64).sin();
            if i + 1 < n {
                dense[i][i + 1] = -0.7;
                dense[i + 1][i] = -0.7;
            }
        }
        let m = CsrMatrix::from_dense(&dense);
        let b = power_bounds(&m, 20).unwrap();
        let e = DMatrix::from_fn(n, n, |i, j| dense[i][j]).symmetric_eigen();
        let (lo, hi) = (e.eigenvalues.min(), e.eigenvalues.max());
        assert!(b.lower <= lo && b.upper >= hi, "{b:?} vs [{lo}, {hi}]");
        assert!(b.lambda_min_est >= lo - 1e-12 && b.lambda_max_est <= hi + 1e-12);
    }
}
