//! Sparse storage, direct solvers and small dense helpers.

mod dense;
mod solve;
mod sparse;

pub use dense::{min_sym_eig_on_support, sym_eigen, sym_pinv, PSD_DENSE_LIMIT};
pub use solve::{Factorization, DENSE_LIMIT};
pub use sparse::SparseMat;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
