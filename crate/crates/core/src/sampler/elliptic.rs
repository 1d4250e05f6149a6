use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Complete elliptic integrals `(K(m), E(m))` in the parameter convention
/// `m = k²`, by the arithmetic-geometric mean.
pub fn complete_elliptic(m: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("elliptic parameter {m} outside [0, 1)")));
    }
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    let mut c = m.sqrt();
    // Σ 2^{n-1} c_n², starting at n = 0
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    // c_{n+1} = c_n² / (4 a_{n+1}) avoids the cancellation in (a − b)/2
    while c > f64::EPSILON * a {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = c * c / (4.0 * an);
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = PI / (2.0 * a);
    Ok((k, k * (1.0 - sum)))
}

/// Jacobi elliptic functions `(sn, cn, dn)(u | m)` by the descending
/// Landen (AGM) scheme.
pub fn jacobi_elliptic(u: f64, m: f64) -> (f64, f64, f64) {
    if m == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = vec![1.0f64];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    loop {
        let (an, cn) = (*a.last().unwrap(), *c.last().unwrap());
        if cn <= f64::EPSILON * an {
            break;
        }
        let next = 0.5 * (an + b);
        a.push(next);
        c.push(cn * cn / (4.0 * next));
        b = (an * b).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn > 0 for m < 1
    (sn, cn, (1.0 - m * sn * sn).sqrt())
}

/// Nodes and weights of the elliptic-function expansion of `√M` for a
/// spectrum inside `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticParams {
    pub lower: f64,
    pub upper: f64,
    /// `upper / lower`.
    pub ratio: f64,
    pub terms: usize,
    /// `K(1 − 1/ratio)`.
    pub k_complement: f64,
    /// `t_k = (k − ½) K(1 − 1/ratio) / K̂`.
    pub nodes: Vec<f64>,
    /// Shifts `w_k² = lower · sn²/cn²`.
    pub shifts: Vec<f64>,
    /// `dn / cn²` at each node.
    pub weights: Vec<f64>,
    /// `2 K(1 − 1/ratio) √lower / (π K̂)`.
    pub prefactor: f64,
}

impl EllipticParams {
    pub fn new(lower: f64, upper: f64, terms: usize) -> Result<Self> {
        if !(lower > 0.0) || !(upper > lower) || !upper.is_finite() {
            return Err(Error::Domain(format!(
                "spectral bracket [{lower}, {upper}] is not a positive interval"
            )));
        }
        if terms == 0 {
            return Err(Error::Domain("expansion needs at least one term".into()));
        }
        let ratio = upper / lower;
        let mp = 1.0 - 1.0 / ratio;
        let (kc, _) = complete_elliptic(mp)?;
        let mut nodes = Vec::with_capacity(terms);
        let mut shifts = Vec::with_capacity(terms);
        let mut weights = Vec::with_capacity(terms);
        for k in 1..=terms {
            let t = (k as f64 - 0.5) * kc / terms as f64;
            let (sn, cn, dn) = jacobi_elliptic(t, mp);
            nodes.push(t);
            shifts.push(lower * sn * sn / (cn * cn));
            weights.push(dn / (cn * cn));
        }
        Ok(Self {
            lower,
            upper,
            ratio,
            terms,
            k_complement: kc,
            nodes,
            shifts,
            weights,
            prefactor: 2.0 * kc * lower.sqrt() / (PI * terms as f64),
        })
    }

    /// The expansion applied to a scalar `λ`; approximates `√λ`.
    pub fn scalar(&self, lambda: f64) -> f64 {
        let s: f64 = self
            .shifts
            .iter()
            .zip(&self.weights)
            .map(|(w2, g)| g / (lambda + w2))
            .sum();
        self.prefactor * lambda * s
    }
}
