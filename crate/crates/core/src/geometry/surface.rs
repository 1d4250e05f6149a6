use std::collections::HashMap;

use super::patch::{checked_metric, dist3, AnalyticMap, AnalyticPatch, Patch};
use crate::error::{Error, Result};
use crate::splines::KnotVector;

/// Patch edges: 0 is `y = 0`, 1 is `x = 1`, 2 is `y = 1`, 3 is `x = 0`.
/// Each is parametrized by the free coordinate in increasing order.
pub fn edge_point(edge: usize, s: f64) -> (f64, f64) {
    match edge {
        0 => (s, 0.0),
        1 => (1.0, s),
        2 => (s, 1.0),
        3 => (0.0, s),
        _ => panic!("edge index {edge} out of range"),
    }
}

/// A shared edge between two patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interface {
    pub patch_a: usize,
    pub edge_a: usize,
    pub patch_b: usize,
    pub edge_b: usize,
    /// Whether the edge parameters run in opposite directions.
    pub reversed: bool,
}

/// Samples per edge when matching interfaces.
const EDGE_SAMPLES: usize = 17;
const EDGE_TOL: f64 = 1e-10;

/// Closed, watertight union of patches glued along full edges.
#[derive(Clone, Debug)]
pub struct MultipatchSurface {
    patches: Vec<Patch>,
    interfaces: Vec<Interface>,
    euler: i64,
}

impl MultipatchSurface {
    /// Assembles a surface and infers its interfaces. Fails unless every
    /// patch edge coincides with exactly one other edge.
    pub fn new(patches: Vec<Patch>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::OpenSurface("no patches".into()));
        }
        let samples: Vec<[Vec<[f64; 3]>; 4]> = patches
            .iter()
            .map(|p| {
                std::array::from_fn(|e| {
                    (0..EDGE_SAMPLES)
                        .map(|i| {
                            let (x, y) = edge_point(e, i as f64 / (EDGE_SAMPLES - 1) as f64);
                            p.eval_unchecked(x, y).point
                        })
                        .collect()
                })
            })
            .collect();
        for (m, s) in samples.iter().enumerate() {
            for (e, pts) in s.iter().enumerate() {
                if dist3(&pts[0], &pts[EDGE_SAMPLES - 1]) < EDGE_TOL
                    && dist3(&pts[0], &pts[EDGE_SAMPLES / 2]) < EDGE_TOL
                {
                    return Err(Error::InvalidPatch(format!(
                        "patch {m} edge {e} is collapsed to a point"
                    )));
                }
            }
        }
        let matches = |a: &[[f64; 3]], b: &[[f64; 3]], rev: bool| {
            (0..EDGE_SAMPLES).all(|i| {
                let j = if rev { EDGE_SAMPLES - 1 - i } else { i };
                dist3(&a[i], &b[j]) <= EDGE_TOL
            })
        };
        let n = patches.len();
        let mut partner: Vec<[Option<usize>; 4]> = vec![[None; 4]; n];
        let mut interfaces = Vec::new();
        for ma in 0..n {
            for ea in 0..4 {
                for mb in ma..n {
                    for eb in 0..4 {
                        if (mb, eb) <= (ma, ea) {
                            continue;
                        }
                        let (a, b) = (&samples[ma][ea], &samples[mb][eb]);
                        let rev = if matches(a, b, false) {
                            false
                        } else if matches(a, b, true) {
                            true
                        } else {
                            continue;
                        };
                        if partner[ma][ea].is_some() || partner[mb][eb].is_some() {
                            return Err(Error::IncompatibleInterface(format!(
                                "edge {ea} of patch {ma} or edge {eb} of patch {mb} \
                                 is shared by more than two patches"
                            )));
                        }
                        let k = interfaces.len();
                        partner[ma][ea] = Some(k);
                        partner[mb][eb] = Some(k);
                        interfaces.push(Interface {
                            patch_a: ma,
                            edge_a: ea,
                            patch_b: mb,
                            edge_b: eb,
                            reversed: rev,
                        });
                    }
                }
            }
        }
        for (m, p) in partner.iter().enumerate() {
            if let Some(e) = p.iter().position(|x| x.is_none()) {
                return Err(Error::OpenSurface(format!(
                    "edge {e} of patch {m} has no neighbour"
                )));
            }
        }
        for itf in &interfaces {
            check_knots(&patches, itf)?;
        }
        // vertices: distinct corner images
        let mut corners: Vec<[f64; 3]> = Vec::new();
        for s in &samples {
            for c in s.iter().flat_map(|e| [e[0], e[EDGE_SAMPLES - 1]]) {
                if !corners.iter().any(|q| dist3(q, &c) <= EDGE_TOL) {
                    corners.push(c);
                }
            }
        }
        let euler = corners.len() as i64 - interfaces.len() as i64 + n as i64;
        Ok(Self {
            patches,
            interfaces,
            euler,
        })
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    /// `V − E + F` of the patch complex.
    pub fn euler_characteristic(&self) -> i64 {
        self.euler
    }

    /// Builtin surfaces: `"sphere"` (six cube-projected patches),
    /// `"torus"` (4×4 patches, radii 2 and 1) and `"cube"` (six flat
    /// bilinear patches on `[-1,1]³`).
    pub fn builtin(name: &str) -> Result<Self> {
        let patches: Vec<Patch> = match name {
            "sphere" => (0..6)
                .map(|face| {
                    AnalyticPatch::new(AnalyticMap::CubeSphere { face, radius: 1.0 }).map(Patch::from)
                })
                .collect::<Result<_>>()?,
            "torus" => {
                let mut v = Vec::new();
                for i in 0..4 {
                    for k in 0..4 {
                        let u = [i as f64 / 4.0, (i + 1) as f64 / 4.0];
                        let w = [k as f64 / 4.0, (k + 1) as f64 / 4.0];
                        v.push(
                            AnalyticPatch::new(AnalyticMap::Torus {
                                major: 2.0,
                                minor: 1.0,
                                u,
                                v: w,
                            })?
                            .into(),
                        );
                    }
                }
                v
            }
            "cube" => cube_patches()?,
            _ => return Err(Error::Config(format!("unknown builtin geometry '{name}'"))),
        };
        Self::new(patches)
    }

    /// Surface point of patch `m` at `(x, y)`.
    pub fn eval_patch(&self, m: usize, x: f64, y: f64) -> Result<[f64; 3]> {
        Ok(self.patch(m)?.eval(x, y)?.point)
    }

    /// First fundamental tensor of patch `m`.
    pub fn first_fundamental(&self, m: usize, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
        let jet = self.patch(m)?.eval(x, y)?;
        checked_metric(&jet, m, x, y)
    }

    /// `√det K_m(x, y)`.
    pub fn surface_measure(&self, m: usize, x: f64, y: f64) -> Result<f64> {
        let k = self.first_fundamental(m, x, y)?;
        Ok((k[0][0] * k[1][1] - k[0][1] * k[0][1]).sqrt())
    }

    fn patch(&self, m: usize) -> Result<&Patch> {
        self.patches
            .get(m)
            .ok_or_else(|| Error::Domain(format!("patch index {m} out of range")))
    }
}

fn edge_knots(p: &Patch, edge: usize) -> Option<&KnotVector> {
    match p {
        Patch::Nurbs(n) => Some(&n.knots()[if edge % 2 == 0 { 0 } else { 1 }]),
        Patch::Analytic(_) => None,
    }
}

fn check_knots(patches: &[Patch], itf: &Interface) -> Result<()> {
    let (Some(ka), Some(kb)) = (
        edge_knots(&patches[itf.patch_a], itf.edge_a),
        edge_knots(&patches[itf.patch_b], itf.edge_b),
    ) else {
        return Ok(());
    };
    let mirrored: Vec<f64>;
    let kb_knots = if itf.reversed {
        mirrored = kb.knots().iter().rev().map(|t| 1.0 - t).collect();
        &mirrored[..]
    } else {
        kb.knots()
    };
    let same = ka.degree() == kb.degree()
        && ka.knots().len() == kb_knots.len()
        && ka
            .knots()
            .iter()
            .zip(kb_knots)
            .all(|(a, b)| (a - b).abs() <= 1e-12);
    if same {
        Ok(())
    } else {
        Err(Error::IncompatibleInterface(format!(
            "knot vectors differ across the edge between patch {} and patch {}",
            itf.patch_a, itf.patch_b
        )))
    }
}

fn cube_patches() -> Result<Vec<Patch>> {
    use super::patch::NurbsPatch;
    let lin = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0])?;
    // outward frames as for the cube-sphere
    let faces: [([f64; 3], [f64; 3], [f64; 3]); 6] = [
        ([1., 0., 0.], [0., 1., 0.], [0., 0., 1.]),
        ([-1., 0., 0.], [0., 0., 1.], [0., 1., 0.]),
        ([0., 1., 0.], [0., 0., 1.], [1., 0., 0.]),
        ([0., -1., 0.], [1., 0., 0.], [0., 0., 1.]),
        ([0., 0., 1.], [1., 0., 0.], [0., 1., 0.]),
        ([0., 0., -1.], [0., 1., 0.], [1., 0., 0.]),
    ];
    faces
        .iter()
        .map(|(c, a, b)| {
            let mut cp = Vec::with_capacity(4);
            for s in [-1.0, 1.0] {
                for t in [-1.0, 1.0] {
                    cp.push([
                        c[0] + s * a[0] + t * b[0],
                        c[1] + s * a[1] + t * b[1],
                        c[2] + s * a[2] + t * b[2],
                    ]);
                }
            }
            NurbsPatch::polynomial([lin.clone(), lin.clone()], cp).map(Patch::from)
        })
        .collect()
}

/// Grid hash for merging nearly coincident points.
pub(crate) struct PointHash {
    cell: f64,
    tol: f64,
    map: HashMap<[i64; 3], Vec<(usize, [f64; 3])>>,
}

impl PointHash {
    pub(crate) fn new(tol: f64) -> Self {
        Self {
            cell: (tol * 1e3).max(1e-6),
            tol,
            map: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64; 3]) -> [i64; 3] {
        [
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        ]
    }

    /// Id of the first stored point within tolerance of `p`.
    pub(crate) fn find(&self, p: &[f64; 3]) -> Option<usize> {
        let k = self.key(p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.map.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for (id, q) in v {
                            if dist3(p, q) <= self.tol {
                                best = Some(best.map_or(*id, |b| b.min(*id)));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    pub(crate) fn insert(&mut self, id: usize, p: [f64; 3]) {
        let k = self.key(&p);
        self.map.entry(k).or_default().push((id, p));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NurbsPatch;

    #[test]
    fn sphere_is_closed_with_euler_two() {
        let s = MultipatchSurface::builtin("sphere").unwrap();
        assert_eq!(s.num_patches(), 6);
        assert_eq!(s.interfaces().len(), 12);
        assert_eq!(s.euler_characteristic(), 2);
    }

    #[test]
    fn torus_euler_zero() {
        let s = MultipatchSurface::builtin("torus").unwrap();
        assert_eq!(s.num_patches(), 16);
        assert_eq!(s.interfaces().len(), 32);
        assert_eq!(s.euler_characteristic(), 0);
    }

    #[test]
    fn cube_euler_two() {
        let s = MultipatchSurface::builtin("cube").unwrap();
        assert_eq!(s.euler_characteristic(), 2);
        assert!(MultipatchSurface::builtin("klein").is_err());
    }

    #[test]
    fn missing_face_is_open() {
        let s = MultipatchSurface::builtin("sphere").unwrap();
        let five = s.patches()[..5].to_vec();
        assert!(matches!(MultipatchSurface::new(five), Err(Error::OpenSurface(_))));
    }

    #[test]
    fn mismatched_knots_rejected() {
        let s = MultipatchSurface::builtin("cube").unwrap();
        let mut patches = s.patches().to_vec();
        // refine one face in one direction only
        if let Patch::Nurbs(p) = &patches[0] {
            let k = KnotVector::new(1, vec![0.0, 0.0, 0.5, 1.0, 1.0]).unwrap();
            let cp = p.control_points();
            let mid = |a: [f64; 3], b: [f64; 3]| {
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
            };
            let new_cp = vec![cp[0], cp[1], mid(cp[0], cp[2]), mid(cp[1], cp[3]), cp[2], cp[3]];
            patches[0] = NurbsPatch::polynomial([k, p.knots()[1].clone()], new_cp)
                .unwrap()
                .into();
        }
        assert!(matches!(
            MultipatchSurface::new(patches),
            Err(Error::IncompatibleInterface(_))
        ));
    }

    #[test]
    fn surface_level_queries() {
        let s = MultipatchSurface::builtin("sphere").unwrap();
        let p = s.eval_patch(0, 0.5, 0.5).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        // at the face centre the tangents are orthogonal with length 2
        let k = s.first_fundamental(0, 0.5, 0.5).unwrap();
        assert!((k[0][0] - 4.0).abs() < 1e-14 && k[0][1].abs() < 1e-14);
        assert!((s.surface_measure(0, 0.5, 0.5).unwrap() - 4.0).abs() < 1e-14);
        assert!(s.eval_patch(7, 0.5, 0.5).is_err());
    }

    #[test]
    fn point_hash_merges_within_tolerance() {
        let mut h = PointHash::new(1e-9);
        h.insert(0, [1.0, 2.0, 3.0]);
        h.insert(1, [1.0, 2.0, 3.1]);
        assert_eq!(h.find(&[1.0 + 5e-10, 2.0, 3.0]), Some(0));
        assert_eq!(h.find(&[1.0 + 5e-9, 2.0, 3.0]), None);
        assert_eq!(h.find(&[1.0, 2.0, 3.1]), Some(1));
    }
}
