use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{MultipatchSurface, PointHash};
use crate::linalg::CsrMatrix;
use crate::splines::{basis_ders_into, prolongation_1d, DyadicKnots, KnotVector};

/// Greville images closer than this are identified.
const MATCH_TOL: f64 = 1e-9;

/// Continuous tensor-product spline space of level `j` and degree `p`
/// on every patch, glued across interfaces.
#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    surface: Arc<MultipatchSurface>,
    level: usize,
    degree: usize,
    knots: KnotVector,
    dof_map: Vec<usize>,
    ndofs: usize,
}

impl DiscreteSpace {
    pub fn new(surface: Arc<MultipatchSurface>, level: usize, degree: usize) -> Result<Self> {
        if !(1..=5).contains(&degree) {
            return Err(Error::Config(format!("degree {degree} outside 1..=5")));
        }
        if level > 12 {
            return Err(Error::Config(format!("level {level} is too fine")));
        }
        let knots = DyadicKnots::new(level, degree).knot_vector();
        let n1 = knots.num_basis();
        let g = knots.greville();
        let np = surface.num_patches();
        let mut dof_map = vec![usize::MAX; np * n1 * n1];
        let mut hash = PointHash::new(MATCH_TOL);
        let mut next = 0usize;
        // number of boundary local functions carrying each boundary id
        let mut mult: Vec<u32> = Vec::new();
        let mut corner: Vec<bool> = Vec::new();
        for (m, patch) in surface.patches().iter().enumerate() {
            for l1 in 0..n1 {
                for l2 in 0..n1 {
                    let on1 = l1 == 0 || l1 == n1 - 1;
                    let on2 = l2 == 0 || l2 == n1 - 1;
                    let idx = (m * n1 + l1) * n1 + l2;
                    if !on1 && !on2 {
                        dof_map[idx] = next;
                        next += 1;
                        mult.push(0);
                        corner.push(false);
                        continue;
                    }
                    let pt = patch.eval_unchecked(g[l1], g[l2]).point;
                    let id = match hash.find(&pt) {
                        Some(id) => {
                            let local = &dof_map[m * n1 * n1..idx];
                            if local.contains(&id) {
                                return Err(Error::IncompatibleInterface(format!(
                                    "two functions of patch {m} map to the same point"
                                )));
                            }
                            id
                        }
                        None => {
                            let id = next;
                            next += 1;
                            mult.push(0);
                            corner.push(on1 && on2);
                            hash.insert(id, pt);
                            id
                        }
                    };
                    if corner[id] != (on1 && on2) {
                        return Err(Error::IncompatibleInterface(format!(
                            "patch {m}: corner and edge functions coincide"
                        )));
                    }
                    mult[id] += 1;
                    dof_map[idx] = id;
                }
            }
        }
        for id in 0..next {
            let bad = if corner[id] {
                mult[id] == 1
            } else {
                mult[id] != 0 && mult[id] != 2
            };
            if bad {
                return Err(Error::IncompatibleInterface(format!(
                    "boundary function {id} is shared by {} patches; \
                     interface parametrizations do not match",
                    mult[id]
                )));
            }
        }
        Ok(Self {
            surface,
            level,
            degree,
            knots,
            dof_map,
            ndofs: next,
        })
    }

    pub fn surface(&self) -> &Arc<MultipatchSurface> {
        &self.surface
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    /// Univariate basis functions per patch direction.
    pub fn basis_per_dir(&self) -> usize {
        self.knots.num_basis()
    }

    pub fn num_dofs(&self) -> usize {
        self.ndofs
    }

    /// Global index of local function `(ℓ₁, ℓ₂)` on patch `m`.
    pub fn dof(&self, m: usize, l1: usize, l2: usize) -> usize {
        let n1 = self.basis_per_dir();
        self.dof_map[(m * n1 + l1) * n1 + l2]
    }

    /// Local-to-global map of patch `m`, index `ℓ₁·n + ℓ₂`.
    pub fn patch_dofs(&self, m: usize) -> &[usize] {
        let n = self.basis_per_dir() * self.basis_per_dir();
        &self.dof_map[m * n..(m + 1) * n]
    }

    /// Value of the discrete function with coefficients `coeffs` at
    /// parameter `(x, y)` of patch `m`.
    pub fn eval(&self, coeffs: &[f64], m: usize, x: f64, y: f64) -> Result<f64> {
        if coeffs.len() != self.ndofs {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} dofs",
                coeffs.len(),
                self.ndofs
            )));
        }
        if m >= self.surface.num_patches() {
            return Err(Error::Domain(format!("patch index {m} out of range")));
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("({x}, {y}) outside the unit square")));
        }
        let p = self.degree;
        let (s1, s2) = (self.knots.span_unchecked(x), self.knots.span_unchecked(y));
        let mut b1 = [0.0; 8];
        let mut b2 = [0.0; 8];
        basis_ders_into(self.knots.knots(), p, s1, x, 0, &mut b1);
        basis_ders_into(self.knots.knots(), p, s2, y, 0, &mut b2);
        let mut v = 0.0;
        for a in 0..=p {
            for b in 0..=p {
                v += b1[a] * b2[b] * coeffs[self.dof(m, s1 - p + a, s2 - p + b)];
            }
        }
        Ok(v)
    }

    /// Glued prolongation from `coarse` (level `j`) to `self` (level
    /// `j + 1`), built from the per-patch tensor two-scale relation.
    pub fn prolongation_from(&self, coarse: &DiscreteSpace) -> Result<CsrMatrix> {
        if !Arc::ptr_eq(&self.surface, &coarse.surface)
            || self.degree != coarse.degree
            || self.level != coarse.level + 1
        {
            return Err(Error::Config(
                "prolongation needs consecutive levels on one surface".into(),
            ));
        }
        let p1 = prolongation_1d(self.degree, coarse.level);
        let nf = self.basis_per_dir();
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        for m in 0..self.surface.num_patches() {
            for i1 in 0..nf {
                let (c1, v1) = p1.row(i1);
                for i2 in 0..nf {
                    let (c2, v2) = p1.row(i2);
                    let row = self.dof(m, i1, i2);
                    for (k1, a) in c1.iter().zip(v1) {
                        for (k2, b) in c2.iter().zip(v2) {
                            trip.push((row, coarse.dof(m, *k1, *k2), a * b));
                        }
                    }
                }
            }
        }
        trip.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut uniq: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len());
        for t in trip {
            match uniq.last() {
                Some(u) if u.0 == t.0 && u.1 == t.1 => {
                    if (u.2 - t.2).abs() > 1e-12 * u.2.abs().max(1.0) {
                        return Err(Error::IncompatibleInterface(format!(
                            "inconsistent prolongation entry ({}, {}): {} vs {}",
                            t.0, t.1, u.2, t.2
                        )));
                    }
                }
                _ => uniq.push(t),
            }
        }
        Ok(CsrMatrix::from_sorted_triplets(
            self.ndofs,
            coarse.ndofs,
            &uniq,
        ))
    }
}
