use super::cg::Preconditioner;
use super::hierarchy::Hierarchy;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Level smoother used inside the additive multilevel preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpxVariant {
    /// Inverse of the diagonal.
    Diag,
    /// One symmetric Gauss–Seidel sweep.
    Ssor,
}

impl std::str::FromStr for BpxVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" => Ok(BpxVariant::Diag),
            "ssor" => Ok(BpxVariant::Ssor),
            _ => Err(Error::Config(format!("unknown preconditioner variant '{s}'"))),
        }
    }
}

impl std::fmt::Display for BpxVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BpxVariant::Diag => "diag",
            BpxVariant::Ssor => "ssor",
        })
    }
}

enum Smoother {
    Diag(Vec<f64>),
    Ssor { a: CsrMatrix, diag: Vec<f64> },
}

impl Smoother {
    fn new(a: CsrMatrix, level: usize, variant: BpxVariant) -> Result<Self> {
        let diag = a.diagonal();
        if let Some(row) = diag.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::DegenerateOperator { level, row });
        }
        Ok(match variant {
            BpxVariant::Diag => Smoother::Diag(diag.iter().map(|d| 1.0 / d).collect()),
            BpxVariant::Ssor => Smoother::Ssor { a, diag },
        })
    }

    /// `z += G r`.
    fn apply_add(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Smoother::Diag(inv) => {
                for i in 0..r.len() {
                    z[i] += inv[i] * r[i];
                }
            }
            Smoother::Ssor { a, diag } => {
                let n = r.len();
                let mut y = vec![0.0; n];
                for i in 0..n {
                    let (cols, vals) = a.row(i);
                    let mut s = r[i];
                    for (c, v) in cols.iter().zip(vals) {
                        if *c < i {
                            s -= v * y[*c];
                        }
                    }
                    y[i] = s / diag[i];
                }
                for i in 0..n {
                    y[i] *= diag[i];
                }
                let mut w = vec![0.0; n];
                for i in (0..n).rev() {
                    let (cols, vals) = a.row(i);
                    let mut s = y[i];
                    for (c, v) in cols.iter().zip(vals) {
                        if *c > i {
                            s -= v * w[*c];
                        }
                    }
                    w[i] = s / diag[i];
                }
                for i in 0..n {
                    z[i] += w[i];
                }
            }
        }
    }
}

/// Additive multilevel preconditioner `Σ_ℓ P_{ℓ,J} G_ℓ P_{ℓ,J}ᵀ`.
pub struct Bpx<'h> {
    hierarchy: &'h Hierarchy,
    smoothers: Vec<Smoother>,
}

impl<'h> Bpx<'h> {
    /// `levels[ℓ]` is the operator on level `ℓ`, coarsest first (see
    /// [`Hierarchy::galerkin_levels`]).
    pub fn new(hierarchy: &'h Hierarchy, levels: Vec<CsrMatrix>, variant: BpxVariant) -> Result<Self> {
        if levels.len() != hierarchy.num_levels() {
            return Err(Error::Dimension(format!(
                "{} level operators for {} levels",
                levels.len(),
                hierarchy.num_levels()
            )));
        }
        let smoothers = levels
            .into_iter()
            .enumerate()
            .map(|(l, a)| {
                if a.nrows() != hierarchy.space(l).num_dofs() {
                    return Err(Error::Dimension(format!("level {l} operator has wrong size")));
                }
                Smoother::new(a, l, variant)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hierarchy,
            smoothers,
        })
    }
}

impl Preconditioner for Bpx<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let nl = self.smoothers.len();
        let mut res: Vec<Vec<f64>> = Vec::with_capacity(nl);
        res.push(r.to_vec());
        for l in (0..nl - 1).rev() {
            let next = self.hierarchy.restriction(l).mul_vec(res.last().unwrap());
            res.push(next);
        }
        res.reverse();
        let mut cur = vec![0.0; res[0].len()];
        self.smoothers[0].apply_add(&res[0], &mut cur);
        for l in 1..nl {
            let mut up = self.hierarchy.prolongation(l - 1).mul_vec(&cur);
            self.smoothers[l].apply_add(&res[l], &mut up);
            cur = up;
        }
        z.copy_from_slice(&cur);
    }
}
