use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel task; also fixes the reduction tree of [`dot`].
const BLOCK: usize = 4096;

/// Compressed sparse row matrix.
///
/// Column indices within a row are sorted and unique. Products keep
/// structural zeros so that matrices built from the same pattern keep the
/// same pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1
            || col_idx.len() != values.len()
            || row_ptr[nrows] != col_idx.len()
        {
            return Err(Error::Dimension("inconsistent CSR arrays".into()));
        }
        for r in 0..nrows {
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[1] <= w[0]) || cols.iter().any(|&c| c >= ncols) {
                return Err(Error::Dimension(format!("row {r} has invalid columns")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from triplets sorted by `(row, col)`; duplicates are summed in
    /// the given order.
    pub fn from_sorted_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in trip {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            debug_assert!(last.map_or(true, |l| l < (r, c)), "triplets not sorted");
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from unsorted triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order of duplicates
        trip.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted_triplets(nrows, ncols, &trip)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let trip: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_sorted_triplets(nrows, ncols, &trip)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_sorted_triplets(n, n, &trip)
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        let trip: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_sorted_triplets(d.len(), d.len(), &trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    /// Position of `(r, c)` in the value array, if structurally present.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `a·X + b·Y` for matrices sharing one sparsity pattern.
    pub fn linear_combination(a: f64, x: &CsrMatrix, b: f64, y: &CsrMatrix) -> Result<CsrMatrix> {
        if !x.same_pattern(y) {
            return Err(Error::Dimension(
                "linear combination needs a shared sparsity pattern".into(),
            ));
        }
        let values = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(CsrMatrix {
            values,
            ..x.clone()
        })
    }

    /// Copies of `x` and `y` on the union of their patterns, padded with
    /// explicit zeros.
    pub fn unify_patterns(x: &CsrMatrix, y: &CsrMatrix) -> Result<(CsrMatrix, CsrMatrix)> {
        if x.nrows != y.nrows || x.ncols != y.ncols {
            return Err(Error::Dimension(format!(
                "{}x{} and {}x{} matrices",
                x.nrows, x.ncols, y.nrows, y.ncols
            )));
        }
        if x.same_pattern(y) {
            return Ok((x.clone(), y.clone()));
        }
        let pad = |a: &CsrMatrix, b: &CsrMatrix| {
            let mut trip = Vec::with_capacity(a.nnz() + b.nnz());
            for r in 0..a.nrows {
                let (ca, va) = a.row(r);
                trip.extend(ca.iter().zip(va).map(|(c, v)| (r, *c, *v)));
                let (cb, _) = b.row(r);
                trip.extend(cb.iter().map(|c| (r, *c, 0.0)));
            }
            CsrMatrix::from_triplets(a.nrows, a.ncols, trip)
        };
        Ok((pad(x, y), pad(y, x)))
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|v| s * v).collect(),
            ..self.clone()
        }
    }

    /// `self + s·I`; the diagonal must be structurally present.
    pub fn add_diagonal(&self, s: f64) -> Result<CsrMatrix> {
        let mut out = self.clone();
        for r in 0..self.nrows {
            let k = self
                .position(r, r)
                .ok_or_else(|| Error::Dimension(format!("row {r} has no diagonal entry")))?;
            out.values[k] += s;
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let tol = rel_tol * self.max_abs();
        (0..self.nrows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .all(|(&c, &v)| (v - self.get(c, r)).abs() <= tol)
        })
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "spmv input length");
        assert_eq!(y.len(), self.nrows, "spmv output length");
        let kernel = |r0: usize, ys: &mut [f64]| {
            for (i, yi) in ys.iter_mut().enumerate() {
                let r = r0 + i;
                let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
                let mut s = 0.0;
                for k in a..b {
                    s += self.values[k] * x[self.col_idx[k]];
                }
                *yi = s;
            }
        };
        if self.nrows <= BLOCK {
            kernel(0, y);
        } else {
            y.par_chunks_mut(BLOCK)
                .enumerate()
                .for_each(|(b, ys)| kernel(b * BLOCK, ys));
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_idx[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self · other` (Gustavson, structural).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Dimension(format!(
                "matmul {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let n = other.ncols;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows)
            .collect::<Vec<_>>()
            .par_chunks(BLOCK)
            .flat_map_iter(|chunk| {
                let mut acc = vec![0.0f64; n];
                let mut mark = vec![usize::MAX; n];
                let mut out = Vec::with_capacity(chunk.len());
                for &r in chunk {
                    let mut cols = Vec::new();
                    let (ac, av) = self.row(r);
                    for (&k, &a) in ac.iter().zip(av) {
                        let (bc, bv) = other.row(k);
                        for (&c, &b) in bc.iter().zip(bv) {
                            if mark[c] != r {
                                mark[c] = r;
                                acc[c] = 0.0;
                                cols.push(c);
                            }
                            acc[c] += a * b;
                        }
                    }
                    cols.sort_unstable();
                    let vals = cols.iter().map(|&c| acc[c]).collect();
                    out.push((cols, vals));
                }
                out.into_iter()
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let total: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut col_idx = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for (c, v) in rows {
            col_idx.extend(c);
            values.extend(v);
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Galerkin triple product `Pᵀ A P`, given `P` and its transpose.
    pub fn galerkin(a: &CsrMatrix, p: &CsrMatrix, pt: &CsrMatrix) -> Result<CsrMatrix> {
        pt.matmul(&a.matmul(p)?)
    }
}

/// Dot product with a fixed reduction order independent of thread count.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() <= BLOCK {
        return x.iter().zip(y).map(|(a, b)| a * b).sum();
    }
    let partial: Vec<f64> = x
        .par_chunks(BLOCK)
        .zip(y.par_chunks(BLOCK))
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u * v).sum())
        .collect();
    partial.iter().sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
