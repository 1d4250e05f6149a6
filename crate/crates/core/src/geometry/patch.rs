use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::splines::{basis_ders_into, KnotVector};

/// Point on a patch together with the two parametric tangents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub point: [f64; 3],
    pub dx: [f64; 3],
    pub dy: [f64; 3],
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl Jet {
    /// The 3×2 Jacobian `[∂_x F, ∂_y F]`, row-major.
    pub fn jacobian(&self) -> [[f64; 2]; 3] {
        [
            [self.dx[0], self.dy[0]],
            [self.dx[1], self.dy[1]],
            [self.dx[2], self.dy[2]],
        ]
    }

    /// First fundamental tensor `(∂F)ᵀ ∂F`, without a rank check.
    pub fn metric(&self) -> [[f64; 2]; 2] {
        let g11 = dot3(&self.dx, &self.dx);
        let g12 = dot3(&self.dx, &self.dy);
        let g22 = dot3(&self.dy, &self.dy);
        [[g11, g12], [g12, g22]]
    }

    /// `‖∂_x F × ∂_y F‖₂`.
    pub fn area_element(&self) -> f64 {
        let n = cross3(&self.dx, &self.dy);
        dot3(&n, &n).sqrt()
    }
}

/// Relative threshold below which `det K` counts as rank deficient.
const RANK_TOL: f64 = 1e-14;

pub(crate) fn checked_metric(jet: &Jet, patch: usize, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
    let k = jet.metric();
    let det = k[0][0] * k[1][1] - k[0][1] * k[0][1];
    let scale = k[0][0] * k[1][1];
    if !(det > RANK_TOL * scale) || !det.is_finite() {
        return Err(Error::SingularGeometry { patch, x, y });
    }
    Ok(k)
}

/// Rational tensor-product B-spline patch.
#[derive(Clone, Debug, PartialEq)]
pub struct NurbsPatch {
    knots: [KnotVector; 2],
    /// Control points, index `ℓ₁·k₂ + ℓ₂`.
    control: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl NurbsPatch {
    pub fn new(
        knots: [KnotVector; 2],
        control: Vec<[f64; 3]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let (k1, k2) = (knots[0].num_basis(), knots[1].num_basis());
        if control.len() != k1 * k2 || weights.len() != k1 * k2 {
            return Err(Error::InvalidPatch(format!(
                "control net has {} points and {} weights, expected {k1}x{k2}",
                control.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidPatch(format!("non-positive weight {w}")));
        }
        if control.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPatch("non-finite control point".into()));
        }
        Ok(Self {
            knots,
            control,
            weights,
        })
    }

    /// Polynomial patch (all weights one).
    pub fn polynomial(knots: [KnotVector; 2], control: Vec<[f64; 3]>) -> Result<Self> {
        let n = control.len();
        Self::new(knots, control, vec![1.0; n])
    }

    pub fn knots(&self) -> &[KnotVector; 2] {
        &self.knots
    }

    pub fn degrees(&self) -> [usize; 2] {
        [self.knots[0].degree(), self.knots[1].degree()]
    }

    pub fn control_points(&self) -> &[[f64; 3]] {
        &self.control
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn eval(&self, x: f64, y: f64) -> Jet {
        let [kx, ky] = &self.knots;
        let (p1, p2) = (kx.degree(), ky.degree());
        let (s1, s2) = (kx.span_unchecked(x), ky.span_unchecked(y));
        let mut bx = [0.0; 16];
        let mut by = [0.0; 16];
        basis_ders_into(kx.knots(), p1, s1, x, 1.min(p1), &mut bx);
        basis_ders_into(ky.knots(), p2, s2, y, 1.min(p2), &mut by);
        let k2 = ky.num_basis();
        // homogeneous sums: value, d/dx, d/dy of Σ w c B and Σ w B
        let mut num = [[0.0; 3]; 3];
        let mut den = [0.0; 3];
        for a in 0..=p1 {
            let (b1, d1) = (bx[a], if p1 > 0 { bx[p1 + 1 + a] } else { 0.0 });
            for b in 0..=p2 {
                let (b2, d2) = (by[b], if p2 > 0 { by[p2 + 1 + b] } else { 0.0 });
                let idx = (s1 - p1 + a) * k2 + (s2 - p2 + b);
                let w = self.weights[idx];
                let c = &self.control[idx];
                let f = [b1 * b2 * w, d1 * b2 * w, b1 * d2 * w];
                for k in 0..3 {
                    den[k] += f[k];
                    for i in 0..3 {
                        num[k][i] += f[k] * c[i];
                    }
                }
            }
        }
        let mut jet = Jet {
            point: [0.0; 3],
            dx: [0.0; 3],
            dy: [0.0; 3],
        };
        for i in 0..3 {
            let v = num[0][i] / den[0];
            jet.point[i] = v;
            jet.dx[i] = (num[1][i] - v * den[1]) / den[0];
            jet.dy[i] = (num[2][i] - v * den[2]) / den[0];
        }
        jet
    }
}

/// Closed-form patch maps.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticMap {
    /// Cube face `face ∈ 0..6` projected radially onto the sphere of the
    /// given radius.
    CubeSphere { face: usize, radius: f64 },
    /// Torus sector; `u` and `v` are fractions of a full turn around the
    /// major and minor circle.
    Torus {
        major: f64,
        minor: f64,
        u: [f64; 2],
        v: [f64; 2],
    },
    /// Cylinder sector around the z axis, angles in radians.
    Cylinder {
        radius: f64,
        height: f64,
        theta: [f64; 2],
    },
    /// Flat parallelogram `origin + x·e1 + y·e2`.
    Affine {
        origin: [f64; 3],
        e1: [f64; 3],
        e2: [f64; 3],
    },
}

/// Outward cube-face frames `(normal, a, b)` with `a × b = normal`.
const CUBE_FACES: [([f64; 3], [f64; 3], [f64; 3]); 6] = [
    ([1., 0., 0.], [0., 1., 0.], [0., 0., 1.]),
    ([-1., 0., 0.], [0., 0., 1.], [0., 1., 0.]),
    ([0., 1., 0.], [0., 0., 1.], [1., 0., 0.]),
    ([0., -1., 0.], [1., 0., 0.], [0., 0., 1.]),
    ([0., 0., 1.], [1., 0., 0.], [0., 1., 0.]),
    ([0., 0., -1.], [0., 1., 0.], [1., 0., 0.]),
];

impl AnalyticMap {
    fn eval(&self, x: f64, y: f64) -> Jet {
        match *self {
            AnalyticMap::CubeSphere { face, radius } => {
                let (c, a, b) = CUBE_FACES[face];
                let (s, t) = (2.0 * x - 1.0, 2.0 * y - 1.0);
                let p = [
                    c[0] + s * a[0] + t * b[0],
                    c[1] + s * a[1] + t * b[1],
                    c[2] + s * a[2] + t * b[2],
                ];
                let r2 = dot3(&p, &p);
                let r = r2.sqrt();
                let tangent = |d: [f64; 3]| {
                    // derivative of radius·P/|P| along P' = 2d
                    let pd = dot3(&p, &d);
                    let mut out = [0.0; 3];
                    for i in 0..3 {
                        out[i] = radius * 2.0 * (d[i] * r2 - p[i] * pd) / (r2 * r);
                    }
                    out
                };
                Jet {
                    point: [radius * p[0] / r, radius * p[1] / r, radius * p[2] / r],
                    dx: tangent(a),
                    dy: tangent(b),
                }
            }
            AnalyticMap::Torus { major, minor, u, v } => {
                let du = 2.0 * PI * (u[1] - u[0]);
                let dv = 2.0 * PI * (v[1] - v[0]);
                let th = 2.0 * PI * u[0] + x * du;
                let ph = 2.0 * PI * v[0] + y * dv;
                let (st, ct) = th.sin_cos();
                let (sp, cp) = ph.sin_cos();
                let rr = major + minor * cp;
                Jet {
                    point: [rr * ct, rr * st, minor * sp],
                    dx: [-rr * st * du, rr * ct * du, 0.0],
                    dy: [-minor * sp * ct * dv, -minor * sp * st * dv, minor * cp * dv],
                }
            }
            AnalyticMap::Cylinder {
                radius,
                height,
                theta,
            } => {
                let dt = theta[1] - theta[0];
                let th = theta[0] + x * dt;
                let (s, c) = th.sin_cos();
                Jet {
                    point: [radius * c, radius * s, y * height],
                    dx: [-radius * s * dt, radius * c * dt, 0.0],
                    dy: [0.0, 0.0, height],
                }
            }
            AnalyticMap::Affine { origin, e1, e2 } => Jet {
                point: [
                    origin[0] + x * e1[0] + y * e2[0],
                    origin[1] + x * e1[1] + y * e2[1],
                    origin[2] + x * e1[2] + y * e2[2],
                ],
                dx: e1,
                dy: e2,
            },
        }
    }
}

/// A closed-form patch whose derivatives were checked against central
/// differences on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticPatch {
    map: AnalyticMap,
}

impl AnalyticPatch {
    pub fn new(map: AnalyticMap) -> Result<Self> {
        if let AnalyticMap::CubeSphere { face, radius } = map {
            if face >= 6 || !(radius > 0.0) {
                return Err(Error::InvalidPatch(format!(
                    "cube-sphere face {face} with radius {radius}"
                )));
            }
        }
        let h = 1e-6;
        let n = 5;
        for i in 0..n {
            for j in 0..n {
                let x = 0.1 + 0.8 * i as f64 / (n - 1) as f64;
                let y = 0.1 + 0.8 * j as f64 / (n - 1) as f64;
                let jet = map.eval(x, y);
                let (xp, xm) = (map.eval(x + h, y), map.eval(x - h, y));
                let (yp, ym) = (map.eval(x, y + h), map.eval(x, y - h));
                for k in 0..3 {
                    let fdx = (xp.point[k] - xm.point[k]) / (2.0 * h);
                    let fdy = (yp.point[k] - ym.point[k]) / (2.0 * h);
                    let scale = 1.0f64.max(jet.dx[k].abs()).max(jet.dy[k].abs());
                    if (fdx - jet.dx[k]).abs() > 1e-6 * scale
                        || (fdy - jet.dy[k]).abs() > 1e-6 * scale
                    {
                        return Err(Error::InvalidPatch(format!(
                            "derivatives inconsistent with map at ({x}, {y})"
                        )));
                    }
                }
            }
        }
        Ok(Self { map })
    }

    pub fn map(&self) -> &AnalyticMap {
        &self.map
    }
}

/// One patch `F_m: [0,1]² → Γ_m`.
#[derive(Clone, Debug, PartialEq)]
pub enum Patch {
    Nurbs(NurbsPatch),
    Analytic(AnalyticPatch),
}

impl From<NurbsPatch> for Patch {
    fn from(p: NurbsPatch) -> Self {
        Patch::Nurbs(p)
    }
}

impl From<AnalyticPatch> for Patch {
    fn from(p: AnalyticPatch) -> Self {
        Patch::Analytic(p)
    }
}

impl Patch {
    /// Point and tangents at `(x, y) ∈ [0,1]²`.
    pub fn eval(&self, x: f64, y: f64) -> Result<Jet> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("({x}, {y}) outside the unit square")));
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> Jet {
        match self {
            Patch::Nurbs(p) => p.eval(x, y),
            Patch::Analytic(p) => p.map.eval(x, y),
        }
    }

    /// First fundamental tensor `K_m(x̂)`.
    pub fn first_fundamental(&self, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
        let jet = self.eval(x, y)?;
        checked_metric(&jet, 0, x, y)
    }

    /// Surface measure `a_m(x̂) = √det K_m(x̂)`.
    pub fn surface_measure(&self, x: f64, y: f64) -> Result<f64> {
        let k = self.first_fundamental(x, y)?;
        Ok((k[0][0] * k[1][1] - k[0][1] * k[0][1]).sqrt())
    }
}
