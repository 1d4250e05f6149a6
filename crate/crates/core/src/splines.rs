//! Univariate B-spline bases on p-open knot vectors.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 7;

/// A p-open knot vector with simple interior knots.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
    theta: f64,
}

impl KnotVector {
    /// Validates and wraps a knot sequence. The first and last `degree + 1`
    /// knots must equal 0 and 1, interior knots must be strictly increasing.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let p = degree;
        if p > MAX_DEGREE {
            return Err(Error::InvalidKnots(format!(
                "degree {p} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        if knots.len() < 2 * (p + 1) {
            return Err(Error::InvalidKnots(format!(
                "degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        let m = knots.len();
        if knots[..=p].iter().any(|&k| k != 0.0) || knots[m - p - 1..].iter().any(|&k| k != 1.0) {
            return Err(Error::InvalidKnots(format!(
                "knot vector is not {p}-open on [0, 1]"
            )));
        }
        // interior: knots[p..=m-p-1] must be strictly increasing
        let inner = &knots[p..m - p];
        if inner.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots(
                "interior knots must be simple and increasing".into(),
            ));
        }
        let widths: Vec<f64> = inner.windows(2).map(|w| w[1] - w[0]).collect();
        let h = widths.iter().cloned().fold(0.0, f64::max);
        let hmin = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            degree,
            knots,
            theta: hmin / h,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `k`.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Number of non-empty knot spans (elements).
    pub fn num_spans(&self) -> usize {
        self.num_basis() - self.degree
    }

    /// Bounds of the `e`-th non-empty span.
    pub fn span_bounds(&self, e: usize) -> (f64, f64) {
        let l = self.degree + e;
        (self.knots[l], self.knots[l + 1])
    }

    /// Largest knot distance `h`.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_spans())
            .map(|e| {
                let (a, b) = self.span_bounds(e);
                b - a
            })
            .fold(0.0, f64::max)
    }

    /// Quasi-uniformity constant `min h_ℓ / h`.
    pub fn quasi_uniformity(&self) -> f64 {
        self.theta
    }

    /// Knot index `ℓ` with `ξ_ℓ ≤ x < ξ_{ℓ+1}`; `x = 1` maps to the last
    /// non-empty span.
    pub fn find_span(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("parameter {x} outside [0, 1]")));
        }
        Ok(self.span_unchecked(x))
    }

    pub(crate) fn span_unchecked(&self, x: f64) -> usize {
        let p = self.degree;
        let n = self.num_basis();
        if x >= self.knots[n] {
            return n - 1;
        }
        // largest l in [p, n-1] with knots[l] <= x
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Values and derivatives up to order `d` of the `p + 1` basis functions
    /// that are nonzero at `x`.
    pub fn eval_basis(&self, x: f64, d: usize) -> Result<BasisValues> {
        if d > self.degree {
            return Err(Error::Domain(format!(
                "derivative order {d} exceeds degree {}",
                self.degree
            )));
        }
        let span = self.find_span(x)?;
        let p = self.degree;
        let mut buf = vec![0.0; (d + 1) * (p + 1)];
        basis_ders_into(&self.knots, p, span, x, d, &mut buf);
        Ok(BasisValues {
            first: span - p,
            values: buf.chunks(p + 1).map(|c| c.to_vec()).collect(),
        })
    }

    /// Greville abscissae, one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|l| {
                if p == 0 {
                    0.5 * (self.knots[l] + self.knots[l + 1])
                } else {
                    self.knots[l + 1..=l + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Evaluates the spline `Σ c_ℓ b_ℓ(x)`.
    pub fn eval_spline(&self, coeffs: &[f64], x: f64) -> Result<f64> {
        if coeffs.len() != self.num_basis() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} basis functions",
                coeffs.len(),
                self.num_basis()
            )));
        }
        let b = self.eval_basis(x, 0)?;
        Ok(b.values[0]
            .iter()
            .enumerate()
            .map(|(i, v)| v * coeffs[b.first + i])
            .sum())
    }
}

/// Nonzero basis functions at a point: `values[k][i]` is the `k`-th
/// derivative of basis function `first + i`.
#[derive(Clone, Debug)]
pub struct BasisValues {
    pub first: usize,
    pub values: Vec<Vec<f64>>,
}

/// Uniform dyadic knot vector `Ξ_{j,p}` with `2^j` elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicKnots {
    pub level: usize,
    pub degree: usize,
}

impl DyadicKnots {
    pub fn new(level: usize, degree: usize) -> Self {
        Self { level, degree }
    }

    pub fn num_elements(&self) -> usize {
        1 << self.level
    }

    pub fn num_basis(&self) -> usize {
        self.num_elements() + self.degree
    }

    pub fn knot_vector(&self) -> KnotVector {
        let p = self.degree;
        let ne = self.num_elements();
        let mut knots = vec![0.0; p + 1];
        knots.extend((1..ne).map(|i| i as f64 / ne as f64));
        knots.extend(std::iter::repeat(1.0).take(p + 1));
        KnotVector::new(p, knots).expect("dyadic knots are valid")
    }
}

/// Cox–de Boor evaluation of basis values and derivatives on knot span
/// `span`. Writes `(nd + 1) * (p + 1)` entries row-major into `out`.
pub(crate) fn basis_ders_into(
    knots: &[f64],
    p: usize,
    span: usize,
    x: f64,
    nd: usize,
    out: &mut [f64],
) {
    const MAXP: usize = 8;
    debug_assert!(p < MAXP);
    let mut ndu = [[0.0f64; MAXP]; MAXP];
    let mut left = [0.0f64; MAXP];
    let mut right = [0.0f64; MAXP];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            // lower triangle holds knot differences
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = if ndu[j][r] != 0.0 {
                ndu[r][j - 1] / ndu[j][r]
            } else {
                0.0
            };
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        out[j] = ndu[j][p];
    }
    if nd == 0 {
        return;
    }
    let mut a = [[0.0f64; MAXP]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = if ndu[pk + 1][rk] != 0.0 {
                    a[s1][0] / ndu[pk + 1][rk]
                } else {
                    0.0
                };
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = if ndu[pk + 1][idx] != 0.0 {
                    (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx]
                } else {
                    0.0
                };
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = if ndu[pk + 1][r] != 0.0 {
                    -a[s1][k - 1] / ndu[pk + 1][r]
                } else {
                    0.0
                };
                d += a[s2][k] * ndu[r][pk];
            }
            out[k * (p + 1) + r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd {
        for j in 0..=p {
            out[k * (p + 1) + j] *= fac;
        }
        fac *= (p - k) as f64;
    }
}

/// Two-scale relation between `Ξ_{j,p}` and `Ξ_{j+1,p}`: a sparse
/// `(2^{j+1} + p) × (2^j + p)` matrix `P` such that the spline with
/// coefficients `c` equals the fine spline with coefficients `P c`.
pub fn prolongation_1d(p: usize, j: usize) -> CsrMatrix {
    let coarse = DyadicKnots::new(j, p).knot_vector();
    let nc = coarse.num_basis();
    let ne = 1usize << j;
    // Each row of `rows` is a fine coefficient expressed in coarse ones.
    let mut rows: Vec<Vec<f64>> = (0..nc)
        .map(|i| {
            let mut r = vec![0.0; nc];
            r[i] = 1.0;
            r
        })
        .collect();
    let mut knots = coarse.knots().to_vec();
    for e in 0..ne {
        // insert the midpoint of coarse element e (Boehm)
        let x = (2 * e + 1) as f64 / (2 * ne) as f64;
        let s = {
            let mut s = p;
            while knots[s + 1] <= x {
                s += 1;
            }
            s
        };
        let mut new_rows = Vec::with_capacity(rows.len() + 1);
        for i in 0..=rows.len() {
            if i + p <= s {
                new_rows.push(rows[i].clone());
            } else if i > s {
                new_rows.push(rows[i - 1].clone());
            } else {
                let alpha = (x - knots[i]) / (knots[i + p] - knots[i]);
                let r: Vec<f64> = rows[i]
                    .iter()
                    .zip(&rows[i - 1])
                    .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                    .collect();
                new_rows.push(r);
            }
        }
        knots.insert(s + 1, x);
        rows = new_rows;
    }
    let mut trip = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (k, &v) in r.iter().enumerate() {
            if v != 0.0 {
                trip.push((i, k, v));
            }
        }
    }
    CsrMatrix::from_sorted_triplets(rows.len(), nc, &trip)
}
