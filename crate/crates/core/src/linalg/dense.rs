use faer::{Mat, Side};

use super::SparseMat;
use crate::error::{Error, Result};

/// Largest support size for which PSD checks use a full eigendecomposition.
pub const PSD_DENSE_LIMIT: usize = 2000;

/// Eigenvalues (ascending) and eigenvectors of the symmetric part of `m`.
pub fn sym_eigen(m: &SparseMat) -> Result<(Vec<f64>, Mat<f64>)> {
    let d = m.symmetric_part().to_dense();
    let evd = d
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

/// Smallest eigenvalue of ½(R + Rᵀ) restricted to the rows/columns where it
/// has entries. Zero rows contribute eigenvalue 0, which never decides a PSD
/// check, so they are skipped.
///
/// Above [`PSD_DENSE_LIMIT`] a sparse Cholesky of the shifted matrix
/// `R + shift·I` is attempted instead and the returned value is the certified
/// lower bound `−shift` (or `−2·shift` if the factorization fails).
pub fn min_sym_eig_on_support(r: &SparseMat, shift: f64) -> Result<f64> {
    let sym = r.symmetric_part();
    let support = sym.support();
    if support.is_empty() {
        return Ok(0.0);
    }
    let sub = sym.select(&support, &support);
    if support.len() <= PSD_DENSE_LIMIT {
        let vals = sub
            .to_dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?;
        let lo = vals[0];
        return Ok(if support.len() < r.nrows() { lo.min(0.0) } else { lo });
    }
    let n = sub.nrows();
    let shifted = sub.add(&SparseMat::identity(n).scale(shift));
    match shifted.to_faer().sp_cholesky(Side::Lower) {
        Ok(_) => Ok(-shift),
        Err(_) => Ok(-2.0 * shift),
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its eigenvalues.
pub fn sym_pinv(m: &SparseMat) -> Result<Mat<f64>> {
    let (vals, u) = sym_eigen(m)?;
    let n = vals.len();
    let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = top * (n.max(1) as f64) * f64::EPSILON * 10.0;
    let mut out = Mat::<f64>::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam.abs() <= cut {
            continue;
        }
        for j in 0..n {
            let s = u[(j, k)] / lam;
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                out[(i, j)] += u[(i, k)] * s;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eig_of_gram_matrix_is_nonnegative() {
        let x = SparseMat::from_dense(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0]]);
        let g = x.transpose().matmul(&x);
        let e = min_sym_eig_on_support(&g, 1e-10).unwrap();
        assert!(e > -1e-12);
        let ind = SparseMat::from_diag(&[1.0, -3.0]);
        assert!((min_sym_eig_on_support(&ind, 1e-10).unwrap() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_deficient_diag() {
        let m = SparseMat::from_diag(&[2.0, 0.0, 4.0]);
        let p = sym_pinv(&m).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
        assert!((p[(2, 2)] - 0.25).abs() < 1e-15);
    }
}
