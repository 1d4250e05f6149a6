use std::time::Instant;

use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

/// A symmetric positive definite approximation `z = C r` of `A⁻¹ r`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// `C = I`.
#[derive(Clone, Copy, Debug)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling `C = diag(A)⁻¹`.
#[derive(Clone, Debug)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .iter()
            .enumerate()
            .map(|(row, &d)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::DegenerateOperator { level: 0, row })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Target for the relative preconditioned residual
    /// `√(rᵀCr) / √(bᵀCb)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative preconditioned residual.
    pub residual: f64,
    pub wall_seconds: f64,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn cg(
    a: &CsrMatrix,
    b: &[f64],
    opts: &CgOptions,
    precond: Option<&dyn Preconditioner>,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "cg: {}x{} operator with rhs of length {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut x = vec![0.0; n];
    if norm2(b) == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                wall_seconds: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let apply = |r: &[f64], z: &mut [f64]| match precond {
        Some(c) => c.apply(r, z),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    if rz <= 0.0 || !rz.is_finite() {
        return Err(Error::IndefiniteOperator {
            iteration: 0,
            curvature: rz,
        });
    }
    let rz0 = rz;
    let mut ap = vec![0.0; n];
    let mut res = 1.0;
    for it in 1..=opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::IndefiniteOperator {
                iteration: it,
                curvature: pap,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        if rz_new < 0.0 || !rz_new.is_finite() {
            return Err(Error::IndefiniteOperator {
                iteration: it,
                curvature: rz_new,
            });
        }
        res = (rz_new / rz0).sqrt();
        if res <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    residual: res,
                    wall_seconds: start.elapsed().as_secs_f64(),
                },
            ));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iter,
        residual: res,
    })
}
