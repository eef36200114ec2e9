//! Compressed sparse row storage for real matrices.
//!
//! Every matrix in the library (field, circuit and coupled system blocks) is
//! held in this format. Entries are kept sorted by column within a row and
//! duplicates are summed on construction; exact zeros are dropped.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` entries, summing duplicates.
    ///
    /// Panics when an index is out of bounds; callers validating untrusted
    /// input must check indices first.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        for &(i, j, _) in &t {
            assert!(
                i < nrows && j < ncols,
                "entry ({i}, {j}) out of bounds for {nrows}x{ncols} matrix"
            );
        }
        // Stable sort keeps duplicate summation order deterministic.
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (i, j, _) = t[k];
            let mut sum = 0.0;
            while k < t.len() && t[k].0 == i && t[k].1 == j {
                sum += t[k].2;
                k += 1;
            }
            if sum != 0.0 {
                indices.push(j);
                values.push(sum);
                indptr[i + 1] += 1;
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        SparseMat {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = f(i, j);
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, t)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    /// Single-column matrix.
    pub fn column(v: &[f64]) -> Self {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.indptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Nonzero entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        if a == 0.0 {
            return Self::zeros(self.nrows, self.ncols);
        }
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &SparseMat, b: f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in linear combination");
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets()
                .map(|(i, j, v)| (i, j, a * v))
                .chain(other.triplets().map(|(i, j, v)| (i, j, b * v))),
        )
    }

    pub fn add(&self, other: &SparseMat) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SparseMat) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn matmul(&self, other: &SparseMat) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimension mismatch in product");
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![false; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y += alpha * self * x`
    pub fn mul_vec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        assert_eq!(y.len(), self.nrows, "vector length mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi += alpha * s;
        }
    }

    /// `selfᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "vector length mismatch");
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// `xᵀ self x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert!(self.is_square());
        assert_eq!(x.len(), self.nrows, "vector length mismatch");
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    /// Extracts the submatrix with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &old_i) in rows.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if col_map[j] != usize::MAX {
                    t.push((new_i, col_map[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }

    /// Embeds `self` into a larger zero matrix at the given row/col positions.
    pub fn scatter(&self, nrows: usize, ncols: usize, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), self.nrows);
        assert_eq!(cols.len(), self.ncols);
        Self::from_triplets(nrows, ncols, self.triplets().map(|(i, j, v)| (rows[i], cols[j], v)))
    }

    /// Assembles a block matrix. `blocks[i][j] == None` is a zero block;
    /// `row_sizes`/`col_sizes` fix the block dimensions.
    pub fn block(blocks: &[Vec<Option<&SparseMat>>], row_sizes: &[usize], col_sizes: &[usize]) -> Self {
        let nrows: usize = row_sizes.iter().sum();
        let ncols: usize = col_sizes.iter().sum();
        let mut t = Vec::new();
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    assert_eq!(
                        m.shape(),
                        (row_sizes[bi], col_sizes[bj]),
                        "block ({bi}, {bj}) has wrong shape"
                    );
                    t.extend(m.triplets().map(|(i, j, v)| (r0 + i, c0 + j, v)));
                }
                c0 += col_sizes[bj];
            }
            r0 += row_sizes[bi];
        }
        Self::from_triplets(nrows, ncols, t)
    }

    pub fn block_diag(parts: &[&SparseMat]) -> Self {
        let nrows = parts.iter().map(|m| m.nrows).sum();
        let ncols = parts.iter().map(|m| m.ncols).sum();
        let mut t = Vec::new();
        let (mut r0, mut c0) = (0, 0);
        for m in parts {
            t.extend(m.triplets().map(|(i, j, v)| (r0 + i, c0 + j, v)));
            r0 += m.nrows;
            c0 += m.ncols;
        }
        Self::from_triplets(nrows, ncols, t)
    }

    /// `coeffs ⊗ self` for a small dense coefficient matrix.
    pub fn kron_left(coeffs: &[Vec<f64>], m: &SparseMat) -> Self {
        let s = coeffs.len();
        let mut t = Vec::new();
        for (a, row) in coeffs.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    t.extend(m.triplets().map(|(i, j, v)| (a * m.nrows + i, b * m.ncols + j, c * v)));
                }
            }
        }
        Self::from_triplets(s * m.nrows, s * m.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entry of `|self + sign * selfᵀ|`.
    fn transpose_defect(&self, sign: f64) -> f64 {
        assert!(self.is_square());
        self.lin_comb(1.0, &self.transpose(), sign).max_abs()
    }

    /// max |A + Aᵀ|
    pub fn skew_defect(&self) -> f64 {
        self.transpose_defect(1.0)
    }

    /// max |A − Aᵀ|
    pub fn sym_defect(&self) -> f64 {
        self.transpose_defect(-1.0)
    }

    /// ½(A + Aᵀ)
    pub fn symmetric_part(&self) -> Self {
        self.lin_comb(0.5, &self.transpose(), 0.5)
    }

    /// Indices of rows or columns holding at least one nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.nrows.max(self.ncols)];
        for (i, j, _) in self.triplets() {
            used[i] = true;
            used[j] = true;
        }
        used.iter().enumerate().filter(|(_, &u)| u).map(|(k, _)| k).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            rows[i][j] = v;
        }
        rows
    }

    pub fn from_faer_dense(m: &Mat<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub(crate) fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets always convert")
    }
}
