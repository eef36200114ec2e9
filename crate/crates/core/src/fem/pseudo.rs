use crate::error::{Error, Result};
use crate::linalg::{sym_pinv, Factorization, SparseMat};

/// `Y = M⁺ X` for symmetric PSD `M` whose column space contains the columns
/// of `X`. The solve is restricted to the rows/columns where `M` has entries;
/// when that block is singular a dense eigenvalue pseudo-inverse is used.
pub fn pseudo_solve(m: &SparseMat, x: &SparseMat) -> Result<SparseMat> {
    if !m.is_square() || x.nrows() != m.nrows() {
        return Err(Error::dim(
            "pseudo-inverse solve",
            format!("square matrix with {} rows", x.nrows()),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let n = m.nrows();
    let k = x.ncols();
    let support = m.support();
    let xs = x.select(&support, &(0..k).collect::<Vec<_>>());
    let ms = m.select(&support, &support);

    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut c = vec![0.0; support.len()];
            for (i, jj, v) in xs.triplets() {
                if jj == j {
                    c[i] = v;
                }
            }
            c
        })
        .collect();
    if !support.is_empty() {
        match Factorization::new(&ms, "support block") {
            Ok(f) => cols.iter_mut().for_each(|c| *c = f.solve(c)),
            Err(Error::Singular { .. }) => {
                let p = sym_pinv(&ms)?;
                for c in cols.iter_mut() {
                    let y: Vec<f64> = (0..c.len()).map(|i| (0..c.len()).map(|j| p[(i, j)] * c[j]).sum()).collect();
                    *c = y;
                }
            }
            Err(e) => return Err(e),
        }
    }
    let support = &support;
    let y = SparseMat::from_triplets(
        n,
        k,
        cols.iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().enumerate().map(move |(i, &v)| (support[i], j, v))),
    );
    let defect = m.matmul(&y).sub(x).fro_norm();
    let tol = 1e-10 * x.fro_norm();
    if !(defect <= tol) {
        return Err(Error::Structure {
            what: "column space condition of the pseudo-inverse solve".into(),
            defect,
            tolerance: tol,
        });
    }
    Ok(y)
}

/// Whether `λM + K` is a regular pencil, probed at λ = 1 and one other
/// positive value.
pub fn check_pencil(m: &SparseMat, k: &SparseMat) -> bool {
    if m.shape() != k.shape() || !m.is_square() {
        return false;
    }
    [1.0, 0.618_033_988_749_894_8].iter().any(|&c| {
        let p = m.lin_comb(c, k, 1.0);
        Factorization::new(&p, "pencil").is_ok()
    })
}
