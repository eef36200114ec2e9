//! Energy-based descriptor systems
//!
//! ```text
//! [M1 z1; E ż2; 0] = (J − R) [ż1; S z2; z3] + B u,    y = Bᵀ [ż1; S z2; z3]
//! ```
//!
//! with Hamiltonian `H = ½ z1ᵀ M1 z1 + ½ z2ᵀ M2 z2`.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{dot, min_sym_eig_on_support, SparseMat};
use crate::mtx;

/// Default relative tolerance for the structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Partition {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub m: usize,
}

impl Partition {
    pub fn new(n1: usize, n2: usize, n3: usize, m: usize) -> Self {
        Partition { n1, n2, n3, m }
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    pub fn z1(&self) -> Range<usize> {
        0..self.n1
    }

    pub fn z2(&self) -> Range<usize> {
        self.n1..self.n1 + self.n2
    }

    pub fn z3(&self) -> Range<usize> {
        self.n1 + self.n2..self.n()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "partition {} {} {} {}", self.n1, self.n2, self.n3, self.m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySystem {
    partition: Partition,
    e: SparseMat,
    j: SparseMat,
    r: SparseMat,
    b: SparseMat,
    m1: SparseMat,
    m2: SparseMat,
    s: SparseMat,
    state_labels: Vec<String>,
    port_labels: Vec<String>,
}

/// The seven coefficient blocks of an [`EnergySystem`].
#[derive(Clone, Debug)]
pub struct Blocks {
    pub e: SparseMat,
    pub j: SparseMat,
    pub r: SparseMat,
    pub b: SparseMat,
    pub m1: SparseMat,
    pub m2: SparseMat,
    pub s: SparseMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// max |J + Jᵀ|
    pub skew_defect: f64,
    /// max |R − Rᵀ|
    pub sym_defect: f64,
    /// Smallest eigenvalue of ½(R + Rᵀ); a certified lower bound for large R.
    pub min_r_eig: f64,
    /// max |EᵀS − M2|
    pub effort_defect: f64,
    /// max of |M1 − M1ᵀ| and |M2 − M2ᵀ|
    pub hamiltonian_sym_defect: f64,
    pub ok: bool,
    /// First failed check, if any, as (block, defect, allowed).
    pub failure: Option<(String, f64, f64)>,
}

impl ValidationReport {
    pub fn into_result(self) -> Result<Self> {
        match &self.failure {
            Some((what, defect, tol)) => Err(Error::Structure {
                what: what.clone(),
                defect: *defect,
                tolerance: *tol,
            }),
            None => Ok(self),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "skew_defect = {:.6e}", self.skew_defect)?;
        writeln!(f, "sym_defect = {:.6e}", self.sym_defect)?;
        writeln!(f, "min_R_eig = {:.6e}", self.min_r_eig)?;
        writeln!(f, "effort_defect = {:.6e}", self.effort_defect)?;
        writeln!(f, "hamiltonian_sym_defect = {:.6e}", self.hamiltonian_sym_defect)?;
        write!(f, "ok = {}", self.ok)
    }
}

fn check_shape(block: &str, m: &SparseMat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dim(
            block,
            format!("{rows}x{cols}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::dim(what, format!("length {n}"), format!("length {}", v.len())));
    }
    Ok(())
}

impl EnergySystem {
    pub fn new(partition: Partition, blocks: Blocks) -> Result<Self> {
        let Partition { n1, n2, m, .. } = partition;
        let n = partition.n();
        check_shape("E", &blocks.e, n2, n2)?;
        check_shape("J", &blocks.j, n, n)?;
        check_shape("R", &blocks.r, n, n)?;
        check_shape("B", &blocks.b, n, m)?;
        check_shape("M1", &blocks.m1, n1, n1)?;
        check_shape("M2", &blocks.m2, n2, n2)?;
        check_shape("S", &blocks.s, n2, n2)?;
        let state_labels = (0..n)
            .map(|k| {
                if k < n1 {
                    format!("z1_{k}")
                } else if k < n1 + n2 {
                    format!("z2_{}", k - n1)
                } else {
                    format!("z3_{}", k - n1 - n2)
                }
            })
            .collect();
        Ok(EnergySystem {
            partition,
            e: blocks.e,
            j: blocks.j,
            r: blocks.r,
            b: blocks.b,
            m1: blocks.m1,
            m2: blocks.m2,
            s: blocks.s,
            state_labels,
            port_labels: (0..m).map(|k| format!("u{k}")).collect(),
        })
    }

    /// Replaces the state and port labels used in exported tables.
    pub fn with_labels(mut self, states: Vec<String>, ports: Vec<String>) -> Result<Self> {
        if states.len() != self.partition.n() {
            return Err(Error::dim("state labels", self.partition.n(), states.len()));
        }
        if ports.len() != self.partition.m {
            return Err(Error::dim("port labels", self.partition.m, ports.len()));
        }
        self.state_labels = states;
        self.port_labels = ports;
        Ok(self)
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }
    pub fn e(&self) -> &SparseMat {
        &self.e
    }
    pub fn j(&self) -> &SparseMat {
        &self.j
    }
    pub fn r(&self) -> &SparseMat {
        &self.r
    }
    pub fn b(&self) -> &SparseMat {
        &self.b
    }
    pub fn m1(&self) -> &SparseMat {
        &self.m1
    }
    pub fn m2(&self) -> &SparseMat {
        &self.m2
    }
    pub fn s(&self) -> &SparseMat {
        &self.s
    }
    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }
    pub fn port_labels(&self) -> &[String] {
        &self.port_labels
    }

    pub fn blocks(&self) -> Blocks {
        Blocks {
            e: self.e.clone(),
            j: self.j.clone(),
            r: self.r.clone(),
            b: self.b.clone(),
            m1: self.m1.clone(),
            m2: self.m2.clone(),
            s: self.s.clone(),
        }
    }

    /// `J − R`
    pub fn j_minus_r(&self) -> SparseMat {
        self.j.sub(&self.r)
    }

    pub fn validate(&self, tol_skew: f64, tol_psd: f64) -> Result<ValidationReport> {
        let skew_defect = self.j.skew_defect();
        let sym_defect = self.r.sym_defect();
        let r_norm = self.r.fro_norm();
        let min_r_eig = min_sym_eig_on_support(&self.r, 0.5 * tol_psd * r_norm)?;
        let ets = self.e.transpose().matmul(&self.s);
        let effort_defect = ets.sub(&self.m2).max_abs();
        let hamiltonian_sym_defect = self.m1.sym_defect().max(self.m2.sym_defect());

        let checks = [
            ("J (skew symmetry)", skew_defect, tol_skew * self.j.fro_norm()),
            ("R (symmetry)", sym_defect, tol_psd * r_norm),
            ("R (positive semi-definiteness)", (-min_r_eig).max(0.0), tol_psd * r_norm),
            (
                "E/S/M2 (effort compatibility)",
                effort_defect,
                tol_skew * self.m2.fro_norm().max(ets.fro_norm()),
            ),
            (
                "M1/M2 (symmetry)",
                hamiltonian_sym_defect,
                tol_skew * self.m1.fro_norm().max(self.m2.fro_norm()),
            ),
        ];
        let failure = checks
            .iter()
            .find(|(_, d, t)| !(d <= t))
            .map(|(w, d, t)| (w.to_string(), *d, *t));
        Ok(ValidationReport {
            skew_defect,
            sym_defect,
            min_r_eig,
            effort_defect,
            hamiltonian_sym_defect,
            ok: failure.is_none(),
            failure,
        })
    }

    /// Validates at [`DEFAULT_TOL`] and turns a violation into an error.
    pub fn check(&self) -> Result<ValidationReport> {
        self.validate(DEFAULT_TOL, DEFAULT_TOL)?.into_result()
    }

    pub fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        check_len("state", z, self.partition.n())?;
        let p = self.partition;
        Ok(0.5 * self.m1.quad_form(&z[p.z1()]) + 0.5 * self.m2.quad_form(&z[p.z2()]))
    }

    /// `w = [ż1; S z2; z3]`
    pub fn flow(&self, zdot1: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let p = self.partition;
        check_len("state", z, p.n())?;
        check_len("z1 derivative", zdot1, p.n1)?;
        let mut w = Vec::with_capacity(p.n());
        w.extend_from_slice(zdot1);
        w.extend(self.s.mul_vec(&z[p.z2()]));
        w.extend_from_slice(&z[p.z3()]);
        Ok(w)
    }

    pub fn dae_residual(&self, z: &[f64], zdot: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let p = self.partition;
        check_len("state", z, p.n())?;
        check_len("state derivative", zdot, p.n())?;
        check_len("input", u, p.m)?;
        let w = self.flow(&zdot[p.z1()], z)?;
        let mut res = vec![0.0; p.n()];
        res[p.z1()].copy_from_slice(&self.m1.mul_vec(&z[p.z1()]));
        res[p.z2()].copy_from_slice(&self.e.mul_vec(&zdot[p.z2()]));
        self.j.mul_vec_acc(-1.0, &w, &mut res);
        self.r.mul_vec_acc(1.0, &w, &mut res);
        self.b.mul_vec_acc(-1.0, u, &mut res);
        Ok(res)
    }

    pub fn output(&self, zdot1: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let w = self.flow(zdot1, z)?;
        Ok(self.b.tr_mul_vec(&w))
    }

    /// Returns `(wᵀ R w, ⟨y, u⟩)`.
    pub fn power_terms(&self, zdot1: &[f64], z: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        check_len("input", u, self.partition.m)?;
        let w = self.flow(zdot1, z)?;
        let y = self.b.tr_mul_vec(&w);
        Ok((self.r.quad_form(&w), dot(&y, u)))
    }

    const FILES: [&'static str; 7] = ["E", "J", "R", "B", "M1", "M2", "S"];

    /// Writes the blocks as Matrix Market files plus a `partition` header file.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mats = [&self.e, &self.j, &self.r, &self.b, &self.m1, &self.m2, &self.s];
        for (name, m) in Self::FILES.iter().zip(mats) {
            mtx::write_matrix_market(&dir.join(format!("{name}.mtx")), m)?;
        }
        let mut labels = String::new();
        for l in &self.state_labels {
            labels.push_str(&format!("state {l}\n"));
        }
        for l in &self.port_labels {
            labels.push_str(&format!("port {l}\n"));
        }
        crate::io::write_atomic(&dir.join("labels.txt"), labels.as_bytes())?;
        crate::io::write_atomic(&dir.join("partition"), format!("{}\n", self.partition).as_bytes())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let hpath = dir.join("partition");
        let header = std::fs::read_to_string(&hpath).map_err(|e| Error::io(&hpath, e))?;
        let partition = parse_partition(&header)?;
        let mut m = Self::FILES
            .iter()
            .map(|name| mtx::read_matrix_market(&dir.join(format!("{name}.mtx"))))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mut next = || m.next().expect("seven blocks");
        let sys = EnergySystem::new(
            partition,
            Blocks {
                e: next(),
                j: next(),
                r: next(),
                b: next(),
                m1: next(),
                m2: next(),
                s: next(),
            },
        )?;
        let lpath = dir.join("labels.txt");
        if lpath.exists() {
            let text = std::fs::read_to_string(&lpath).map_err(|e| Error::io(&lpath, e))?;
            let (mut st, mut po) = (Vec::new(), Vec::new());
            for (k, line) in text.lines().enumerate() {
                match line.split_once(' ') {
                    Some(("state", l)) => st.push(l.to_string()),
                    Some(("port", l)) => po.push(l.to_string()),
                    _ if line.trim().is_empty() => {}
                    _ => return Err(Error::parse("expected 'state <label>' or 'port <label>'", k + 1, 1)),
                }
            }
            return sys.with_labels(st, po);
        }
        Ok(sys)
    }
}

/// Parses the `partition n1 n2 n3 m` header line.
pub fn parse_partition(text: &str) -> Result<Partition> {
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 5 || toks[0] != "partition" {
            return Err(Error::parse("expected 'partition n1 n2 n3 m'", k + 1, 1));
        }
        let mut v = [0usize; 4];
        for (i, tok) in toks[1..].iter().enumerate() {
            v[i] = tok.parse().map_err(|_| {
                let col = line.find(tok).unwrap_or(0) + 1;
                Error::parse(format!("malformed count '{tok}'"), k + 1, col)
            })?;
        }
        return Ok(Partition::new(v[0], v[1], v[2], v[3]));
    }
    Err(Error::parse("missing partition header", 1, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state_skew() -> EnergySystem {
        EnergySystem::new(
            Partition::new(2, 0, 0, 0),
            Blocks {
                e: SparseMat::zeros(0, 0),
                j: SparseMat::from_dense(&[vec![0.0, 1.0], vec![-1.0, 0.0]]),
                r: SparseMat::zeros(2, 2),
                b: SparseMat::zeros(2, 0),
                m1: SparseMat::identity(2),
                m2: SparseMat::zeros(0, 0),
                s: SparseMat::zeros(0, 0),
            },
        )
        .unwrap()
    }

    #[test]
    fn exact_skew_passes() {
        let r = two_state_skew().validate(1e-10, 1e-10).unwrap();
        assert!(r.ok);
        assert_eq!(r.skew_defect, 0.0);
    }

    #[test]
    fn asymmetric_r_is_reported() {
        let mut b = two_state_skew().blocks();
        b.r = SparseMat::from_dense(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        let sys = EnergySystem::new(Partition::new(2, 0, 0, 0), b).unwrap();
        let r = sys.validate(1e-10, 1e-10).unwrap();
        assert!(!r.ok);
        assert_eq!(r.sym_defect, 2.0);
        assert!(matches!(r.into_result(), Err(Error::Structure { .. })));
    }

    #[test]
    fn wrong_block_shape_is_named() {
        let mut b = two_state_skew().blocks();
        b.b = SparseMat::zeros(3, 0);
        match EnergySystem::new(Partition::new(2, 0, 0, 0), b) {
            Err(Error::Dimension { block, .. }) => assert_eq!(block, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hamiltonian_of_scalar() {
        let sys = EnergySystem::new(
            Partition::new(1, 0, 0, 0),
            Blocks {
                e: SparseMat::zeros(0, 0),
                j: SparseMat::zeros(1, 1),
                r: SparseMat::zeros(1, 1),
                b: SparseMat::zeros(1, 0),
                m1: SparseMat::identity(1),
                m2: SparseMat::zeros(0, 0),
                s: SparseMat::zeros(0, 0),
            },
        )
        .unwrap();
        assert_eq!(sys.hamiltonian(&[2.0]).unwrap(), 2.0);
        assert!(sys.hamiltonian(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn partition_header_round_trip() {
        let p = Partition::new(3, 0, 2, 1);
        assert_eq!(parse_partition(&p.to_string()).unwrap(), p);
        assert!(parse_partition("partition 1 2 x 4").is_err());
    }
}
