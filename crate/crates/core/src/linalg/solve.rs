//! Direct factorizations of square systems.
//!
//! Systems below [`DENSE_LIMIT`] unknowns use a dense partially pivoted LU;
//! larger ones use faer's sparse LU. Both are applied to a row/column
//! equilibrated copy of the matrix, and regularity is confirmed with a probe
//! solve because the sparse LU does not report numerically zero pivots.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use super::SparseMat;
use crate::error::{Error, Result};

/// Dimension below which the dense factorization is used.
pub const DENSE_LIMIT: usize = 64;

/// Relative forward error of the probe solve above which the matrix is
/// declared numerically singular.
const PROBE_TOL: f64 = 1e-4;

enum Inner {
    Dense(PartialPivLu<f64>),
    Sparse(Lu<usize, f64>),
}

pub struct Factorization {
    inner: Inner,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.inner {
            Inner::Dense(_) => "dense",
            Inner::Sparse(_) => "sparse",
        };
        write!(f, "Factorization({kind}, n = {})", self.row_scale.len())
    }
}

impl Factorization {
    /// Factorizes `a`. `context` names the system in the error message.
    pub fn new(a: &SparseMat, context: &str) -> Result<Self> {
        let singular = || Error::Singular {
            context: context.to_string(),
            step: None,
        };
        if !a.is_square() {
            return Err(Error::dim(context, "square matrix", format!("{}x{}", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        if n == 0 {
            return Ok(Factorization {
                inner: Inner::Dense(Mat::<f64>::zeros(0, 0).partial_piv_lu()),
                row_scale: Vec::new(),
                col_scale: Vec::new(),
            });
        }

        let mut row_scale = vec![0.0f64; n];
        for (i, _, v) in a.triplets() {
            row_scale[i] = row_scale[i].max(v.abs());
        }
        if row_scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(singular());
        }
        row_scale.iter_mut().for_each(|s| *s = 1.0 / *s);
        let mut col_scale = vec![0.0f64; n];
        for (i, j, v) in a.triplets() {
            col_scale[j] = col_scale[j].max((v * row_scale[i]).abs());
        }
        if col_scale.iter().any(|&s| s == 0.0) {
            return Err(singular());
        }
        col_scale.iter_mut().for_each(|s| *s = 1.0 / *s);

        let scaled = SparseMat::from_triplets(
            n,
            n,
            a.triplets().map(|(i, j, v)| (i, j, v * row_scale[i] * col_scale[j])),
        );

        let inner = if n < DENSE_LIMIT {
            let lu = scaled.to_dense().partial_piv_lu();
            let u = lu.U();
            let max = (0..n).map(|k| u[(k, k)].abs()).fold(0.0, f64::max);
            let min = (0..n).map(|k| u[(k, k)].abs()).fold(f64::INFINITY, f64::min);
            if !(min > (n as f64) * f64::EPSILON * max) {
                return Err(singular());
            }
            Inner::Dense(lu)
        } else {
            Inner::Sparse(scaled.to_faer().sp_lu().map_err(|_| singular())?)
        };
        let f = Factorization {
            inner,
            row_scale,
            col_scale,
        };

        // Probe: solve for a known vector through the scaled operator.
        let probe: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
        let rhs = scaled.mul_vec(&probe);
        let x = f.solve_scaled(rhs);
        let err = x
            .iter()
            .zip(&probe)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, |m: f64, e| if e.is_nan() { f64::INFINITY } else { m.max(e) });
        if !(err <= PROBE_TOL * 2.0) {
            return Err(singular());
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.row_scale.len()
    }

    fn solve_scaled(&self, b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        match &self.inner {
            Inner::Dense(lu) => lu.solve_in_place(rhs.as_mut()),
            Inner::Sparse(lu) => lu.solve_in_place(rhs.as_mut()),
        }
        (0..n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim(), "right-hand side length mismatch");
        let scaled: Vec<f64> = b.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect();
        let mut x = self.solve_scaled(scaled);
        x.iter_mut().zip(&self.col_scale).for_each(|(v, s)| *v *= s);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_and_large_systems() {
        for n in [3, 150] {
            let a = SparseMat::from_triplets(
                n,
                n,
                (0..n).flat_map(|i| {
                    let mut v = vec![(i, i, 4.0 + i as f64)];
                    if i + 1 < n {
                        v.push((i, i + 1, -1.0));
                        v.push((i + 1, i, -2.0));
                    }
                    v
                }),
            );
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let b = a.mul_vec(&x_true);
            let x = Factorization::new(&a, "test").unwrap().solve(&b);
            for (u, v) in x.iter().zip(&x_true) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detects_singular_matrices() {
        let a = SparseMat::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(Factorization::new(&a, "s"), Err(Error::Singular { .. })));
        let z = SparseMat::from_diag(&[1.0, 0.0]);
        assert!(Factorization::new(&z, "s").is_err());
        // Larger sparse matrix with two identical rows.
        let n = 100;
        let mut t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        t.push((1, 0, 1.0));
        t.push((0, 1, 1.0));
        let s = SparseMat::from_triplets(n, n, t);
        assert!(Factorization::new(&s, "s").is_err());
    }
}
