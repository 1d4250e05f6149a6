use std::sync::Arc;

use super::sparse::CsrMatrix;
use crate::assembly::DiscreteSpace;
use crate::error::{Error, Result};
use crate::geometry::MultipatchSurface;

/// Nested glued spaces `V_0 ⊂ … ⊂ V_J` with their transfer operators.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    spaces: Vec<DiscreteSpace>,
    /// `prolong[ℓ]` maps level `ℓ` to level `ℓ + 1`.
    prolong: Vec<CsrMatrix>,
    restrict: Vec<CsrMatrix>,
}

impl Hierarchy {
    /// Levels `0..=level` of degree `degree` on `surface`.
    pub fn new(surface: Arc<MultipatchSurface>, level: usize, degree: usize) -> Result<Self> {
        let spaces = (0..=level)
            .map(|l| DiscreteSpace::new(surface.clone(), l, degree))
            .collect::<Result<Vec<_>>>()?;
        Self::from_spaces(spaces)
    }

    /// Wraps an existing chain of consecutive levels.
    pub fn from_spaces(spaces: Vec<DiscreteSpace>) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::Config("hierarchy needs at least one level".into()));
        }
        let prolong = spaces
            .windows(2)
            .map(|w| w[1].prolongation_from(&w[0]))
            .collect::<Result<Vec<_>>>()?;
        let restrict = prolong.iter().map(CsrMatrix::transpose).collect();
        Ok(Self {
            spaces,
            prolong,
            restrict,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.spaces.len()
    }

    pub fn space(&self, level: usize) -> &DiscreteSpace {
        &self.spaces[level]
    }

    pub fn finest(&self) -> &DiscreteSpace {
        self.spaces.last().expect("non-empty")
    }

    /// Prolongation from `level` to `level + 1`.
    pub fn prolongation(&self, level: usize) -> &CsrMatrix {
        &self.prolong[level]
    }

    /// Transpose of [`Hierarchy::prolongation`].
    pub fn restriction(&self, level: usize) -> &CsrMatrix {
        &self.restrict[level]
    }

    /// Galerkin operators `A_ℓ = P_ℓᵀ A_{ℓ+1} P_ℓ` for every level, finest
    /// last. Operators that share a pattern on the finest level share it
    /// on all levels.
    pub fn galerkin_levels(&self, fine: &CsrMatrix) -> Result<Vec<CsrMatrix>> {
        let n = self.finest().num_dofs();
        if fine.nrows() != n || fine.ncols() != n {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, finest level has {n} dofs",
                fine.nrows(),
                fine.ncols()
            )));
        }
        let mut out = vec![fine.clone()];
        for l in (0..self.prolong.len()).rev() {
            let next = CsrMatrix::galerkin(out.last().unwrap(), &self.prolong[l], &self.restrict[l])?;
            out.push(next);
        }
        out.reverse();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_mass_stiffness_with, DiscreteSpace};

    #[test]
    fn galerkin_mass_matches_direct_assembly_on_flat_cube() {
        // flat patches: quadrature is exact, so PᵀMP equals the coarse mass
        let s = Arc::new(MultipatchSurface::builtin("cube").unwrap());
        let h = Hierarchy::new(s.clone(), 2, 2).unwrap();
        let (mf, sf) = assemble_mass_stiffness_with(h.finest(), 4).unwrap();
        let ml = h.galerkin_levels(&mf).unwrap();
        let sl = h.galerkin_levels(&sf).unwrap();
        assert_eq!(ml.len(), 3);
        for l in 0..3 {
            assert!(ml[l].same_pattern(&sl[l]));
            let (mc, sc) = assemble_mass_stiffness_with(&DiscreteSpace::new(s.clone(), l, 2).unwrap(), 4).unwrap();
            let (a, b) = (ml[l].to_dense(), mc.to_dense());
            let (c, d) = (sl[l].to_dense(), sc.to_dense());
            for i in 0..a.len() {
                for j in 0..a.len() {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-12);
                    assert!((c[i][j] - d[i][j]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn rejects_wrong_size() {
        let s = Arc::new(MultipatchSurface::builtin("sphere").unwrap());
        let h = Hierarchy::new(s, 1, 1).unwrap();
        assert!(h.galerkin_levels(&CsrMatrix::identity(3)).is_err());
        assert_eq!(h.restriction(0).nrows(), h.space(0).num_dofs());
    }
}
