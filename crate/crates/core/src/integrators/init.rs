use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Factorization};
use crate::system::EnergySystem;

use super::to_linear_dae;

/// Initial state with some components prescribed (`Some`) and the rest left
/// to be determined (`None`).
pub type PartialState = Vec<Option<f64>>;

fn block_name(sys: &EnergySystem, row: usize) -> &'static str {
    let p = sys.partition();
    if row < p.n1 {
        "z1 rows"
    } else if row < p.n1 + p.n2 {
        "z2 rows"
    } else {
        "z3 rows"
    }
}

/// Completes `given` so that the algebraic equations hold at t0 with input
/// `u0`. Prescribed components are kept. Unknown components that appear in
/// no algebraic equation are set to zero.
pub fn consistent_init(sys: &EnergySystem, given: &[Option<f64>], u0: &[f64]) -> Result<Vec<f64>> {
    let p = sys.partition();
    let n = p.n();
    if given.len() != n {
        return Err(Error::dim("initial state", n, given.len()));
    }
    if u0.len() != p.m {
        return Err(Error::dim("initial input", p.m, u0.len()));
    }
    let dae = to_linear_dae(sys);
    let rows = dae.algebraic_rows();
    let mut x: Vec<f64> = given.iter().map(|v| v.unwrap_or(0.0)).collect();
    if rows.is_empty() {
        return Ok(x);
    }

    let all: Vec<usize> = (0..n).collect();
    let a_alg = dae.a.select(&rows, &all);
    let b_alg = dae.b.select(&rows, &(0..p.m).collect::<Vec<_>>());

    // Right-hand side from the prescribed part: A_free x_free = −B u0 − A_fixed x_fixed.
    let mut rhs = b_alg.mul_vec(u0);
    a_alg.mul_vec_acc(1.0, &x, &mut rhs);
    rhs.iter_mut().for_each(|v| *v = -*v);
    let scale = a_alg.max_abs() * norm_inf(&x).max(1.0) + b_alg.max_abs() * norm_inf(u0);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);

    let mut used = vec![false; n];
    for (_, j, _) in a_alg.triplets() {
        used[j] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&j| given[j].is_none() && used[j]).collect();
    let a_free = a_alg.select(&(0..rows.len()).collect::<Vec<_>>(), &free);

    // Equations without unknowns must already be satisfied.
    let mut active = Vec::new();
    for (k, &row) in rows.iter().enumerate() {
        if a_free.row(k).next().is_none() {
            if rhs[k].abs() > tol {
                return Err(Error::Inconsistent {
                    block: block_name(sys, row).to_string(),
                    residual: rhs[k].abs(),
                });
            }
        } else {
            active.push(k);
        }
    }
    if free.is_empty() {
        return Ok(x);
    }
    let a = a_free.select(&active, &(0..free.len()).collect::<Vec<_>>());
    let b: Vec<f64> = active.iter().map(|&k| rhs[k]).collect();
    let rank_err = |e: Error| match e {
        Error::Singular { .. } => Error::Singular {
            context: "algebraic block of the initial value problem (check regularity of the matrix pencil)".into(),
            step: None,
        },
        other => other,
    };
    let sol = if a.nrows() == a.ncols() {
        Factorization::new(&a, "").map_err(rank_err)?.solve(&b)
    } else if a.nrows() < a.ncols() {
        // Minimum-norm solution x = Aᵀ (A Aᵀ)⁻¹ b.
        let aat = a.matmul(&a.transpose());
        let y = Factorization::new(&aat, "").map_err(rank_err)?.solve(&b);
        a.tr_mul_vec(&y)
    } else {
        let ata = a.transpose().matmul(&a);
        Factorization::new(&ata, "").map_err(rank_err)?.solve(&a.tr_mul_vec(&b))
    };
    for (k, &j) in free.iter().enumerate() {
        x[j] = sol[k];
    }

    let mut res = b_alg.mul_vec(u0);
    a_alg.mul_vec_acc(1.0, &x, &mut res);
    let scale = a_alg.max_abs() * norm_inf(&x).max(1.0) + b_alg.max_abs() * norm_inf(u0);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    if let Some((k, r)) = res
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.abs()))
        .find(|(_, r)| !(*r <= tol))
    {
        return Err(Error::Inconsistent {
            block: block_name(sys, rows[k]).to_string(),
            residual: r,
        });
    }
    Ok(x)
}
