//! Power-preserving and dissipative interconnection of two systems.
//!
//! The ports are closed by `u = (F_skew − F_sym) y + ũ`, which turns the
//! direct sum into a system with `J' = J + B F_skew Bᵀ` and
//! `R' = R + B F_sym Bᵀ`. States are reordered class by class:
//! `[z1A; z1B; z2A; z2B; z3A; z3B]`.

use crate::error::{Error, Result};
use crate::linalg::{min_sym_eig_on_support, SparseMat};
use crate::system::{Blocks, EnergySystem, Partition, DEFAULT_TOL};

#[derive(Clone, Debug)]
pub struct InterconnectionSpec {
    f_skew: SparseMat,
    f_sym: SparseMat,
}

impl InterconnectionSpec {
    /// Checks that `f_skew` is skew and `f_sym` symmetric PSD at `tol`
    /// relative to their Frobenius norms.
    pub fn with_tolerance(f_skew: SparseMat, f_sym: SparseMat, tol: f64) -> Result<Self> {
        if !f_skew.is_square() {
            return Err(Error::dim("F_skew", "square matrix", format!("{}x{}", f_skew.nrows(), f_skew.ncols())));
        }
        if f_sym.shape() != f_skew.shape() {
            return Err(Error::dim(
                "F_sym",
                format!("{}x{}", f_skew.nrows(), f_skew.ncols()),
                format!("{}x{}", f_sym.nrows(), f_sym.ncols()),
            ));
        }
        let d = f_skew.skew_defect();
        let t = tol * f_skew.fro_norm();
        if !(d <= t) {
            return Err(Error::Structure {
                what: "F_skew (skew symmetry)".into(),
                defect: d,
                tolerance: t,
            });
        }
        let norm = f_sym.fro_norm();
        let d = f_sym.sym_defect();
        if !(d <= tol * norm) {
            return Err(Error::Structure {
                what: "F_sym (symmetry)".into(),
                defect: d,
                tolerance: tol * norm,
            });
        }
        let lo = min_sym_eig_on_support(&f_sym, 0.5 * tol * norm)?;
        if !(-lo <= tol * norm) {
            return Err(Error::Structure {
                what: "F_sym (positive semi-definiteness)".into(),
                defect: -lo,
                tolerance: tol * norm,
            });
        }
        Ok(InterconnectionSpec { f_skew, f_sym })
    }

    pub fn new(f_skew: SparseMat, f_sym: SparseMat) -> Result<Self> {
        Self::with_tolerance(f_skew, f_sym, DEFAULT_TOL)
    }

    /// Purely skew (power-preserving) coupling.
    pub fn skew(f_skew: SparseMat) -> Result<Self> {
        let n = f_skew.nrows();
        Self::new(f_skew, SparseMat::zeros(n, n))
    }

    /// No coupling at all: the result is the direct sum.
    pub fn none(m: usize) -> Self {
        InterconnectionSpec {
            f_skew: SparseMat::zeros(m, m),
            f_sym: SparseMat::zeros(m, m),
        }
    }

    pub fn f_skew(&self) -> &SparseMat {
        &self.f_skew
    }

    pub fn f_sym(&self) -> &SparseMat {
        &self.f_sym
    }

    /// Dimension of the residual input ũ.
    pub fn residual_input_dim(&self) -> usize {
        self.f_skew.nrows()
    }
}

/// `perm[new] = old` for the concatenated raw state `[z_A; z_B]`.
pub fn permute_to_partition_order(a: Partition, b: Partition) -> Vec<usize> {
    let na = a.n();
    let mut perm = Vec::with_capacity(na + b.n());
    perm.extend(a.z1());
    perm.extend(b.z1().map(|k| k + na));
    perm.extend(a.z2());
    perm.extend(b.z2().map(|k| k + na));
    perm.extend(a.z3());
    perm.extend(b.z3().map(|k| k + na));
    perm
}

/// Inverse of a permutation given as `perm[new] = old`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

pub fn interconnect(a: &EnergySystem, b: &EnergySystem, spec: &InterconnectionSpec) -> Result<EnergySystem> {
    let (pa, pb) = (a.partition(), b.partition());
    let m = pa.m + pb.m;
    if spec.residual_input_dim() != m {
        return Err(Error::dim("interconnection matrices", format!("{m}x{m}"), spec.residual_input_dim()));
    }
    let p = Partition::new(pa.n1 + pb.n1, pa.n2 + pb.n2, pa.n3 + pb.n3, m);
    let n = p.n();
    let perm = permute_to_partition_order(pa, pb);
    let inv = invert_permutation(&perm);

    let direct = |x: &SparseMat, y: &SparseMat| SparseMat::block_diag(&[x, y]).scatter(n, n, &inv, &inv);
    let b_raw = SparseMat::block_diag(&[a.b(), b.b()]);
    let b_new = b_raw.scatter(n, m, &inv, &(0..m).collect::<Vec<_>>());

    let bt = b_new.transpose();
    let j = direct(a.j(), b.j()).add(&b_new.matmul(spec.f_skew()).matmul(&bt));
    let r = direct(a.r(), b.r()).add(&b_new.matmul(spec.f_sym()).matmul(&bt));

    let sys = EnergySystem::new(
        p,
        Blocks {
            e: SparseMat::block_diag(&[a.e(), b.e()]),
            j,
            r,
            b: b_new,
            m1: SparseMat::block_diag(&[a.m1(), b.m1()]),
            m2: SparseMat::block_diag(&[a.m2(), b.m2()]),
            s: SparseMat::block_diag(&[a.s(), b.s()]),
        },
    )?;
    let raw_labels: Vec<&String> = a.state_labels().iter().chain(b.state_labels()).collect();
    let states = perm.iter().map(|&old| raw_labels[old].clone()).collect();
    let ports = a.port_labels().iter().chain(b.port_labels()).cloned().collect();
    sys.with_labels(states, ports)
}

/// Splits an interleaved state of `interconnect(a, b, _)` into `(z_A, z_B)`.
pub fn split_state(a: Partition, b: Partition, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let perm = permute_to_partition_order(a, b);
    let mut raw = vec![0.0; z.len()];
    for (new, &old) in perm.iter().enumerate() {
        raw[old] = z[new];
    }
    let zb = raw.split_off(a.n());
    (raw, zb)
}

/// Inverse of [`split_state`].
pub fn join_state(a: Partition, b: Partition, za: &[f64], zb: &[f64]) -> Vec<f64> {
    let perm = permute_to_partition_order(a, b);
    let raw: Vec<f64> = za.iter().chain(zb).copied().collect();
    perm.iter().map(|&old| raw[old]).collect()
}
