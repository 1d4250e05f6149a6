use rayon::prelude::*;

use super::space::DiscreteSpace;
use crate::error::{Error, Result};
use crate::geometry::{Jet, Patch};
use crate::linalg::CsrMatrix;
use crate::quadrature::gauss_legendre;
use crate::splines::basis_ders_into;

/// Basis values and derivatives at the quadrature points of every element
/// of a dyadic knot vector.
pub(crate) struct Tables {
    pub p: usize,
    pub q: usize,
    pub ne: usize,
    /// Quadrature point `(e, i)` at `e * q + i`.
    pub x: Vec<f64>,
    /// Weight already scaled by the element width.
    pub w: Vec<f64>,
    /// `(e * q + i) * (p + 1) + a`; first function on element `e` is `e`.
    pub val: Vec<f64>,
    pub der: Vec<f64>,
}

impl Tables {
    pub fn new(space: &DiscreteSpace, q: usize) -> Self {
        let kv = space.knots();
        let p = kv.degree();
        let ne = kv.num_spans();
        let (gx, gw) = gauss_legendre(q);
        let mut t = Tables {
            p,
            q,
            ne,
            x: Vec::with_capacity(ne * q),
            w: Vec::with_capacity(ne * q),
            val: Vec::with_capacity(ne * q * (p + 1)),
            der: Vec::with_capacity(ne * q * (p + 1)),
        };
        let mut buf = [0.0; 16];
        for e in 0..ne {
            let (a, b) = kv.span_bounds(e);
            for i in 0..q {
                let x = a + (b - a) * gx[i];
                t.x.push(x);
                t.w.push((b - a) * gw[i]);
                basis_ders_into(kv.knots(), p, e + p, x, 1, &mut buf);
                t.val.extend_from_slice(&buf[..=p]);
                t.der.extend_from_slice(&buf[p + 1..2 * p + 2]);
            }
        }
        t
    }

    fn vals(&self, e: usize, i: usize) -> &[f64] {
        let k = (e * self.q + i) * (self.p + 1);
        &self.val[k..k + self.p + 1]
    }

    fn ders(&self, e: usize, i: usize) -> &[f64] {
        let k = (e * self.q + i) * (self.p + 1);
        &self.der[k..k + self.p + 1]
    }
}

fn metric_inverse(jet: &Jet, m: usize, x: f64, y: f64) -> Result<([[f64; 2]; 2], f64)> {
    let k = crate::geometry::checked_metric(jet, m, x, y)?;
    let det = k[0][0] * k[1][1] - k[0][1] * k[0][1];
    let inv = [
        [k[1][1] / det, -k[0][1] / det],
        [-k[0][1] / det, k[0][0] / det],
    ];
    Ok((inv, det.sqrt()))
}

/// Per-patch band storage: `(2p+1)²` couplings per local function.
struct PatchBands {
    mass: Vec<f64>,
    stiff: Vec<f64>,
}

fn band_width(p: usize) -> usize {
    2 * p + 1
}

fn assemble_patch(
    patch: &Patch,
    m: usize,
    t: &Tables,
    n1: usize,
    want_stiff: bool,
) -> Result<PatchBands> {
    let p = t.p;
    let nb = p + 1;
    let bw = band_width(p);
    let bw2 = bw * bw;
    let nloc = nb * nb;
    let mut mass = vec![0.0; n1 * n1 * bw2];
    let mut stiff = if want_stiff {
        vec![0.0; n1 * n1 * bw2]
    } else {
        Vec::new()
    };
    let mut phi = vec![0.0; nloc];
    let mut gx = vec![0.0; nloc];
    let mut gy = vec![0.0; nloc];
    let mut em = vec![0.0; nloc * nloc];
    let mut es = vec![0.0; nloc * nloc];
    for e1 in 0..t.ne {
        for e2 in 0..t.ne {
            em.iter_mut().for_each(|v| *v = 0.0);
            es.iter_mut().for_each(|v| *v = 0.0);
            for i1 in 0..t.q {
                let (x, w1) = (t.x[e1 * t.q + i1], t.w[e1 * t.q + i1]);
                let (v1, d1) = (t.vals(e1, i1), t.ders(e1, i1));
                for i2 in 0..t.q {
                    let (y, w2) = (t.x[e2 * t.q + i2], t.w[e2 * t.q + i2]);
                    let (v2, d2) = (t.vals(e2, i2), t.ders(e2, i2));
                    let jet = patch.eval_unchecked(x, y);
                    let (kinv, area) = metric_inverse(&jet, m, x, y)?;
                    let wt = w1 * w2 * area;
                    for a1 in 0..nb {
                        for a2 in 0..nb {
                            let k = a1 * nb + a2;
                            phi[k] = v1[a1] * v2[a2];
                            gx[k] = d1[a1] * v2[a2];
                            gy[k] = v1[a1] * d2[a2];
                        }
                    }
                    for a in 0..nloc {
                        let wa = wt * phi[a];
                        for b in a..nloc {
                            em[a * nloc + b] += wa * phi[b];
                        }
                    }
                    if want_stiff {
                        for a in 0..nloc {
                            let ka = [
                                wt * (kinv[0][0] * gx[a] + kinv[0][1] * gy[a]),
                                wt * (kinv[1][0] * gx[a] + kinv[1][1] * gy[a]),
                            ];
                            for b in a..nloc {
                                es[a * nloc + b] += ka[0] * gx[b] + ka[1] * gy[b];
                            }
                        }
                    }
                }
            }
            for a in 0..nloc {
                let (a1, a2) = (a / nb, a % nb);
                let row = (e1 + a1) * n1 + (e2 + a2);
                for b in 0..nloc {
                    let (b1, b2) = (b / nb, b % nb);
                    let off = (b1 + p - a1) * bw + (b2 + p - a2);
                    let k = if a <= b { a * nloc + b } else { b * nloc + a };
                    mass[row * bw2 + off] += em[k];
                    if want_stiff {
                        stiff[row * bw2 + off] += es[k];
                    }
                }
            }
        }
    }
    Ok(PatchBands { mass, stiff })
}

/// Visits every valid band entry `(local row, band slot, local col)`.
fn for_band(n1: usize, p: usize, mut f: impl FnMut(usize, usize, usize)) {
    let bw = band_width(p);
    for l1 in 0..n1 {
        for l2 in 0..n1 {
            let row = l1 * n1 + l2;
            for d1 in 0..bw {
                let c1 = (l1 + d1).wrapping_sub(p);
                if c1 >= n1 {
                    continue;
                }
                for d2 in 0..bw {
                    let c2 = (l2 + d2).wrapping_sub(p);
                    if c2 >= n1 {
                        continue;
                    }
                    f(row, d1 * bw + d2, c1 * n1 + c2);
                }
            }
        }
    }
}

fn global_pattern(space: &DiscreteSpace) -> CsrMatrix {
    let n = space.num_dofs();
    let n1 = space.basis_per_dir();
    let mut keys: Vec<u64> = Vec::new();
    for m in 0..space.surface().num_patches() {
        let map = space.patch_dofs(m);
        for_band(n1, space.degree(), |r, _, c| {
            keys.push(map[r] as u64 * n as u64 + map[c] as u64);
        });
    }
    keys.par_sort_unstable();
    keys.dedup();
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::with_capacity(keys.len());
    for k in &keys {
        row_ptr[(k / n as u64) as usize + 1] += 1;
        col_idx.push((k % n as u64) as usize);
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let nnz = col_idx.len();
    CsrMatrix::from_parts(n, n, row_ptr, col_idx, vec![0.0; nnz]).expect("valid pattern")
}

/// Mass and (optionally) stiffness matrix with `q` Gauss points per
/// element direction; both share one sparsity pattern.
fn assemble(space: &DiscreteSpace, q: usize, want_stiff: bool) -> Result<(CsrMatrix, CsrMatrix)> {
    if q == 0 {
        return Err(Error::Config("quadrature needs at least one point".into()));
    }
    let t = Tables::new(space, q);
    let n1 = space.basis_per_dir();
    let p = space.degree();
    let bw2 = band_width(p) * band_width(p);
    let mut mass = global_pattern(space);
    let mut stiff = if want_stiff { mass.clone() } else { CsrMatrix::identity(0) };
    let patches = space.surface().patches();
    // bounded batches keep the per-patch band storage in check
    let batch = rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < patches.len() {
        let end = (start + batch).min(patches.len());
        let bands: Vec<PatchBands> = (start..end)
            .into_par_iter()
            .map(|m| assemble_patch(&patches[m], m, &t, n1, want_stiff))
            .collect::<Result<_>>()?;
        for (k, b) in bands.iter().enumerate() {
            let map = space.patch_dofs(start + k);
            for_band(n1, p, |r, slot, c| {
                let (gr, gc) = (map[r], map[c]);
                let pos = mass.position(gr, gc).expect("entry in pattern");
                mass.values_mut()[pos] += b.mass[r * bw2 + slot];
                if want_stiff {
                    stiff.values_mut()[pos] += b.stiff[r * bw2 + slot];
                }
            });
        }
        start = end;
    }
    Ok((mass, stiff))
}

/// Mass matrix `M_ij = ∫ φ_i φ_j dS` with `p + 1` Gauss points per
/// element direction.
pub fn assemble_mass(space: &DiscreteSpace) -> Result<CsrMatrix> {
    Ok(assemble(space, space.degree() + 1, false)?.0)
}

/// Stiffness matrix `S_ij = ∫ ∇_Γ φ_i · ∇_Γ φ_j dS`.
pub fn assemble_stiffness(space: &DiscreteSpace) -> Result<CsrMatrix> {
    Ok(assemble(space, space.degree() + 1, true)?.1)
}

/// Mass and stiffness in one sweep, sharing a sparsity pattern.
pub fn assemble_mass_stiffness(space: &DiscreteSpace) -> Result<(CsrMatrix, CsrMatrix)> {
    assemble(space, space.degree() + 1, true)
}

/// As [`assemble_mass_stiffness`] with an explicit number of Gauss points.
pub fn assemble_mass_stiffness_with(
    space: &DiscreteSpace,
    q: usize,
) -> Result<(CsrMatrix, CsrMatrix)> {
    assemble(space, q, true)
}

struct QuadPoint {
    e: [usize; 2],
    i: [usize; 2],
    point: [f64; 3],
    weight: f64,
}

/// Calls `g` on every quadrature point of patch `m`.
fn visit_patch(patch: &Patch, m: usize, t: &Tables, mut g: impl FnMut(QuadPoint)) -> Result<()> {
    for e1 in 0..t.ne {
        for e2 in 0..t.ne {
            for i1 in 0..t.q {
                for i2 in 0..t.q {
                    let (x, y) = (t.x[e1 * t.q + i1], t.x[e2 * t.q + i2]);
                    let jet = patch.eval_unchecked(x, y);
                    let (_, area) = metric_inverse(&jet, m, x, y)?;
                    g(QuadPoint {
                        e: [e1, e2],
                        i: [i1, i2],
                        point: jet.point,
                        weight: t.w[e1 * t.q + i1] * t.w[e2 * t.q + i2] * area,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Maps every patch in parallel; results come back in patch order.
fn per_patch<T, F>(space: &DiscreteSpace, q: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Patch, &Tables) -> Result<T> + Sync,
{
    let t = Tables::new(space, q);
    let patches = space.surface().patches();
    (0..patches.len())
        .into_par_iter()
        .map(|m| f(m, &patches[m], &t))
        .collect()
}

/// Load vector `f_i = ∫ f φ_i dS` for a source given on the embedded
/// surface, with `p + 1` Gauss points per element direction.
pub fn assemble_load<F>(space: &DiscreteSpace, f: F) -> Result<Vec<f64>>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    assemble_load_with(space, f, space.degree() + 1)
}

pub fn assemble_load_with<F>(space: &DiscreteSpace, f: F, q: usize) -> Result<Vec<f64>>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    let n1 = space.basis_per_dir();
    let p = space.degree();
    let locals = per_patch(space, q, |m, patch, t| {
        let mut loc = vec![0.0; n1 * n1];
        visit_patch(patch, m, t, |qp| {
            let fw = f(qp.point) * qp.weight;
            let (v1, v2) = (t.vals(qp.e[0], qp.i[0]), t.vals(qp.e[1], qp.i[1]));
            for a1 in 0..=p {
                for a2 in 0..=p {
                    loc[(qp.e[0] + a1) * n1 + qp.e[1] + a2] += fw * v1[a1] * v2[a2];
                }
            }
        })?;
        Ok(loc)
    })?;
    let mut out = vec![0.0; space.num_dofs()];
    for (m, loc) in locals.iter().enumerate() {
        for (g, v) in space.patch_dofs(m).iter().zip(loc) {
            out[*g] += v;
        }
    }
    Ok(out)
}

/// `‖u_h − u‖_{L²(Γ)}` with `p + 3` Gauss points per element direction.
pub fn l2_error<F>(space: &DiscreteSpace, coeffs: &[f64], exact: F) -> Result<f64>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    integrate_squared(space, coeffs, exact, space.degree() + 3)
}

/// `‖u_h‖_{L²(Γ)}`.
pub fn l2_norm(space: &DiscreteSpace, coeffs: &[f64]) -> Result<f64> {
    integrate_squared(space, coeffs, |_| 0.0, space.degree() + 3)
}

fn integrate_squared<F>(space: &DiscreteSpace, coeffs: &[f64], exact: F, q: usize) -> Result<f64>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    if coeffs.len() != space.num_dofs() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} dofs",
            coeffs.len(),
            space.num_dofs()
        )));
    }
    let n1 = space.basis_per_dir();
    let p = space.degree();
    let parts = per_patch(space, q, |m, patch, t| {
        let map = space.patch_dofs(m);
        let mut acc = 0.0;
        visit_patch(patch, m, t, |qp| {
            let (v1, v2) = (t.vals(qp.e[0], qp.i[0]), t.vals(qp.e[1], qp.i[1]));
            let mut uh = 0.0;
            for a1 in 0..=p {
                for a2 in 0..=p {
                    uh += v1[a1] * v2[a2] * coeffs[map[(qp.e[0] + a1) * n1 + qp.e[1] + a2]];
                }
            }
            let d = uh - exact(qp.point);
            acc += d * d * qp.weight;
        })?;
        Ok(acc)
    })?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// `∫_Γ g dS` by Gauss quadrature with `q` points per element direction.
pub fn integrate<F>(space: &DiscreteSpace, g: F, q: usize) -> Result<f64>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    let parts = per_patch(space, q, |m, patch, t| {
        let mut acc = 0.0;
        visit_patch(patch, m, t, |qp| acc += g(qp.point) * qp.weight)?;
        Ok(acc)
    })?;
    Ok(parts.iter().sum())
}
