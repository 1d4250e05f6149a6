//! Closed-form solutions on the unit sphere and Matérn parameter links.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Degree and order of a real spherical harmonic, `|m| ≤ ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SphericalHarmonicIndex {
    degree: u32,
    order: i32,
}

impl SphericalHarmonicIndex {
    pub fn new(degree: u32, order: i32) -> Result<Self> {
        if order.unsigned_abs() > degree {
            return Err(Error::Domain(format!("order {order} exceeds degree {degree}")));
        }
        Ok(Self { degree, order })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Eigenvalue `ℓ(ℓ + 1)` of `−Δ` on the unit sphere.
    pub fn eigenvalue(&self) -> f64 {
        let l = self.degree as f64;
        l * (l + 1.0)
    }
}

/// `Y_{1,-1}`, the right-hand side of the standard sphere benchmark.
pub const Y1M1: SphericalHarmonicIndex = SphericalHarmonicIndex {
    degree: 1,
    order: -1,
};

/// Real spherical harmonic with unit `L²(S²)` norm, no Condon–Shortley
/// phase: `Y_{1,-1} = √(3/4π)·y`, `Y_{1,0} = √(3/4π)·z`,
/// `Y_{1,1} = √(3/4π)·x`.
pub fn spherical_harmonic(idx: SphericalHarmonicIndex, point: [f64; 3]) -> Result<f64> {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if (r - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("point at radius {r} is not on the unit sphere")));
    }
    Ok(harmonic_unchecked(idx, point))
}

/// As [`spherical_harmonic`] after radial projection of a nonzero point.
pub fn spherical_harmonic_projected(idx: SphericalHarmonicIndex, point: [f64; 3]) -> f64 {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    harmonic_unchecked(idx, [point[0] / r, point[1] / r, point[2] / r])
}

fn harmonic_unchecked(idx: SphericalHarmonicIndex, p: [f64; 3]) -> f64 {
    let l = idx.degree as usize;
    let m = idx.order.unsigned_abs() as usize;
    let z = p[2].clamp(-1.0, 1.0);
    // normalized associated Legendre: N_ℓ^m P_ℓ^m(z) / sin^m θ, with
    // sin^m θ · (cos mφ, sin mφ) = Re/Im (x + i y)^m
    let mut pmm = 1.0 / (4.0 * PI);
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    let mut pmm = ((2 * m + 1) as f64 * pmm).sqrt();
    if l > m {
        let mut prev = pmm;
        let mut cur = z * ((2 * m + 3) as f64).sqrt() * pmm;
        for ll in m + 2..=l {
            let a = |k: usize| {
                let (k, mm) = (k as f64, m as f64);
                ((4.0 * k * k - 1.0) / (k * k - mm * mm)).sqrt()
            };
            let next = a(ll) * (z * cur - prev / a(ll - 1));
            prev = cur;
            cur = next;
        }
        pmm = cur;
    }
    if m == 0 {
        return pmm;
    }
    // (x + i y)^m
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..m {
        let t = re * p[0] - im * p[1];
        im = re * p[1] + im * p[0];
        re = t;
    }
    let trig = if idx.order > 0 { re } else { im };
    std::f64::consts::SQRT_2 * pmm * trig
}

/// Multiplier `(ℓ(ℓ+1) + κ²)^{−β}` such that `(κ² − Δ)^{−β} Y_{ℓ,m}`
/// equals it times `Y_{ℓ,m}`.
pub fn exact_sphere_solution(beta: f64, kappa: f64, idx: SphericalHarmonicIndex) -> f64 {
    (idx.eigenvalue() + kappa * kappa).powf(-beta)
}

/// Matérn smoothness and marginal variance of the field solving
/// `(κ² − Δ)^β u = W` in two dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaternParams {
    pub nu: f64,
    pub sigma2: f64,
}

/// `ν = 2β − 1`, `σ² = Γ(ν) / (Γ(ν + 1)·4π·κ^{2ν})`.
pub fn matern_link(beta: f64, kappa: f64) -> Result<MaternParams> {
    let nu = 2.0 * beta - 1.0;
    if !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "beta = {beta} gives smoothness {nu}; need beta > 1/2"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa = {kappa} must be positive")));
    }
    let sigma2 = gamma(nu) / (gamma(nu + 1.0) * 4.0 * PI * kappa.powf(2.0 * nu));
    Ok(MaternParams { nu, sigma2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn idx(l: u32, m: i32) -> SphericalHarmonicIndex {
        SphericalHarmonicIndex::new(l, m).unwrap()
    }

    fn sph(theta: f64, phi: f64) -> [f64; 3] {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }

    #[test]
    fn low_degree_closed_forms() {
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        let p = sph(0.7, 2.1);
        assert!((spherical_harmonic(idx(0, 0), p).unwrap() - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((spherical_harmonic(Y1M1, p).unwrap() - c1 * p[1]).abs() < 1e-15);
        assert!((spherical_harmonic(idx(1, 0), p).unwrap() - c1 * p[2]).abs() < 1e-15);
        assert!((spherical_harmonic(idx(1, 1), p).unwrap() - c1 * p[0]).abs() < 1e-15);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        let y20 = c20 * (3.0 * p[2] * p[2] - 1.0);
        assert!((spherical_harmonic(idx(2, 0), p).unwrap() - y20).abs() < 1e-14);
        let c22 = (15.0 / (16.0 * PI)).sqrt();
        let y22 = c22 * (p[0] * p[0] - p[1] * p[1]);
        assert!((spherical_harmonic(idx(2, 2), p).unwrap() - y22).abs() < 1e-14);
        assert!(spherical_harmonic(Y1M1, [0.0, 2.0, 0.0]).is_err());
        assert!(SphericalHarmonicIndex::new(1, -2).is_err());
    }

    #[test]
    fn orthonormal_up_to_degree_three() {
        // Gauss-Legendre in cos θ times trapezoid in φ: exact for degree ≤ 6
        let (x, w) = gauss_legendre(10);
        let nphi = 16;
        let mut all = Vec::new();
        for l in 0..=3u32 {
            for m in -(l as i32)..=(l as i32) {
                all.push(idx(l, m));
            }
        }
        for a in &all {
            for b in &all {
                let mut s = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    let z = 2.0 * xi - 1.0;
                    let theta = z.acos();
                    for k in 0..nphi {
                        let phi = 2.0 * PI * k as f64 / nphi as f64;
                        let p = sph(theta, phi);
                        s += 2.0 * wi * 2.0 * PI / nphi as f64
                            * spherical_harmonic(*a, p).unwrap()
                            * spherical_harmonic(*b, p).unwrap();
                    }
                }
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12, "{a:?} {b:?} {s}");
            }
        }
    }

    #[test]
    fn laplace_beltrami_eigenfunction_by_finite_differences() {
        // spherical-coordinate Laplacian
        let h = 1e-4;
        for &(l, m) in &[(1u32, -1i32), (2, 1), (3, -2)] {
            let f = |t: f64, p: f64| spherical_harmonic(idx(l, m), sph(t, p)).unwrap();
            for &(t, p) in &[(0.9, 0.3), (1.7, 4.0), (2.3, 1.1)] {
                let ft = (f(t + h, p) - f(t - h, p)) / (2.0 * h);
                let ftt = (f(t + h, p) - 2.0 * f(t, p) + f(t - h, p)) / (h * h);
                let fpp = (f(t, p + h) - 2.0 * f(t, p) + f(t, p - h)) / (h * h);
                let lap = ftt + t.cos() / t.sin() * ft + fpp / (t.sin() * t.sin());
                let ev = idx(l, m).eigenvalue();
                assert!((-lap - ev * f(t, p)).abs() < 1e-4, "l={l} m={m}");
            }
        }
    }

    #[test]
    fn exact_multipliers() {
        assert!((exact_sphere_solution(1.0, 1.0, Y1M1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(exact_sphere_solution(0.0, 3.0, idx(4, 2)), 1.0);
        assert!((exact_sphere_solution(0.5, 0.0, idx(2, 0)) - 6f64.powf(-0.5)).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let v = exact_sphere_solution(0.1 * k as f64, 1.0, Y1M1);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn matern_links() {
        let a = matern_link(1.0, 1.0).unwrap();
        assert_eq!(a.nu, 1.0);
        assert!((a.sigma2 - 1.0 / (4.0 * PI)).abs() < 1e-14);
        let b = matern_link(1.0, 2.0).unwrap();
        assert!((b.sigma2 - 1.0 / (16.0 * PI)).abs() < 1e-14);
        assert_eq!(matern_link(1.5, 1.0).unwrap().nu, 2.0);
        assert!(matern_link(0.5, 1.0).is_err());
        // Γ(ν)/Γ(ν+1) = 1/ν
        let c = matern_link(1.3, 1.0).unwrap();
        assert!((c.sigma2 - 1.0 / (c.nu * 4.0 * PI)).abs() < 1e-13);
    }
}
