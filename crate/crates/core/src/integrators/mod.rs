//! Time integration of energy-based systems.
//!
//! Every method works on the linear descriptor form `E ẋ = A x + B u`
//! obtained by [`to_linear_dae`]. All stage systems are linear and solved by
//! one direct factorization per run.

mod init;
mod tableau;
mod trajectory;
mod waveform;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

pub use init::{consistent_init, PartialState};
pub use tableau::Tableau;
pub use trajectory::{energy_audit, error_measures, simulate, simulate_from, AuditRow, Trajectory};
pub use waveform::{InputSignal, Waveform};

use crate::error::{Error, Result};
use crate::linalg::{Factorization, SparseMat};
use crate::system::EnergySystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ImplicitEuler,
    Midpoint,
    Trapezoidal,
    Bdf2,
    Gauss4,
    Radau5,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ImplicitEuler,
        Method::Midpoint,
        Method::Trapezoidal,
        Method::Bdf2,
        Method::Gauss4,
        Method::Radau5,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::ImplicitEuler => "implicit_euler",
            Method::Midpoint => "midpoint",
            Method::Trapezoidal => "trapezoidal",
            Method::Bdf2 => "bdf2",
            Method::Gauss4 => "gauss4",
            Method::Radau5 => "radau5",
        }
    }

    pub fn tableau(self) -> Option<Tableau> {
        match self {
            Method::Gauss4 => Some(Tableau::gauss4()),
            Method::Radau5 => Some(Tableau::radau5()),
            _ => None,
        }
    }

    /// Classical convergence order on smooth problems.
    pub fn order(self) -> u32 {
        match self {
            Method::ImplicitEuler => 1,
            Method::Midpoint | Method::Trapezoidal | Method::Bdf2 => 2,
            Method::Gauss4 => 4,
            Method::Radau5 => 5,
        }
    }

    /// Whether the last stage equals the step result. Methods without this
    /// property are not recommended for systems of index two.
    pub fn is_stiffly_accurate(self) -> bool {
        matches!(self, Method::ImplicitEuler | Method::Bdf2 | Method::Radau5)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "implicit_euler" | "euler" | "ie" => Method::ImplicitEuler,
            "midpoint" | "mp" => Method::Midpoint,
            "trapezoidal" | "trap" | "cn" => Method::Trapezoidal,
            "bdf2" => Method::Bdf2,
            "gauss4" | "gauss" => Method::Gauss4,
            "radau5" | "radau" | "radau_iia" => Method::Radau5,
            other => return Err(Error::Model(format!("unknown integration method '{other}'"))),
        })
    }
}

/// `E ẋ = A x + B u` with `x = [z1; z2; z3]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDae {
    pub e: SparseMat,
    pub a: SparseMat,
    pub b: SparseMat,
}

impl LinearDae {
    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// `E ẋ − A x − B u`
    pub fn residual(&self, x: &[f64], xdot: &[f64], u: &[f64]) -> Vec<f64> {
        let mut r = self.e.mul_vec(xdot);
        self.a.mul_vec_acc(-1.0, x, &mut r);
        self.b.mul_vec_acc(-1.0, u, &mut r);
        r
    }

    /// Rows of `E` without any entry: the algebraic equations.
    pub fn algebraic_rows(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.e.row(i).next().is_none()).collect()
    }
}

fn sub(m: &SparseMat, rows: Range<usize>, cols: Range<usize>) -> SparseMat {
    m.select(&rows.collect::<Vec<_>>(), &cols.collect::<Vec<_>>())
}

/// Rewrites the system as `E ẋ = A x + B u`. The first row block carries
/// the opposite sign of [`EnergySystem::dae_residual`], the others the same.
pub fn to_linear_dae(sys: &EnergySystem) -> LinearDae {
    let p = sys.partition();
    let (n1, n2, n3, m) = (p.n1, p.n2, p.n3, p.m);
    let g = sys.j_minus_r();
    let (r1, r2, r3) = (p.z1(), p.z2(), p.z3());
    let gb = |r: &Range<usize>, c: &Range<usize>| sub(&g, r.clone(), c.clone());
    let s = sys.s();
    let b = sys.b();
    let bi = |r: &Range<usize>| sub(b, r.clone(), 0..m);

    let e = SparseMat::block(
        &[
            vec![Some(&gb(&r1, &r1)), None, None],
            vec![Some(&gb(&r2, &r1).scale(-1.0)), Some(sys.e()), None],
            vec![Some(&gb(&r3, &r1).scale(-1.0)), None, None],
        ],
        &[n1, n2, n3],
        &[n1, n2, n3],
    );
    let a = SparseMat::block(
        &[
            vec![
                Some(sys.m1()),
                Some(&gb(&r1, &r2).matmul(s).scale(-1.0)),
                Some(&gb(&r1, &r3).scale(-1.0)),
            ],
            vec![None, Some(&gb(&r2, &r2).matmul(s)), Some(&gb(&r2, &r3))],
            vec![None, Some(&gb(&r3, &r2).matmul(s)), Some(&gb(&r3, &r3))],
        ],
        &[n1, n2, n3],
        &[n1, n2, n3],
    );
    let bd = SparseMat::block(
        &[vec![Some(&bi(&r1).scale(-1.0))], vec![Some(&bi(&r2))], vec![Some(&bi(&r3))]],
        &[n1, n2, n3],
        &[m],
    );
    LinearDae { e, a, b: bd }
}

/// Step matrices of one method at a fixed step size, factorized once.
pub struct Stepper {
    dae: LinearDae,
    method: Method,
    tau: f64,
    kind: Kind,
}

enum Kind {
    /// `(E − θτA) x1 = (E + (1−θ)τA) x0 + τ B ū`
    Theta {
        lhs: Factorization,
        rhs: SparseMat,
    },
    Bdf2 {
        startup: Option<Factorization>,
        startup_rhs: SparseMat,
        lhs: Option<Factorization>,
    },
    Irk {
        tableau: Tableau,
        lhs: Factorization,
    },
}

fn with_step(e: Error, k: usize) -> Error {
    match e {
        Error::Singular { context, .. } => Error::Singular { context, step: Some(k) },
        other => other,
    }
}

impl Stepper {
    pub fn new(sys: &EnergySystem, method: Method, tau: f64) -> Result<Self> {
        Self::from_dae(to_linear_dae(sys), method, tau)
    }

    pub fn from_dae(dae: LinearDae, method: Method, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Model(format!("time step must be positive, got {tau}")));
        }
        let theta = |th: f64| -> Result<Kind> {
            let lhs = dae.e.lin_comb(1.0, &dae.a, -th * tau);
            let rhs = dae.e.lin_comb(1.0, &dae.a, (1.0 - th) * tau);
            let lhs = Factorization::new(&lhs, &format!("{method} step matrix")).map_err(|e| with_step(e, 0))?;
            Ok(Kind::Theta { lhs, rhs })
        };
        let kind = match method {
            Method::ImplicitEuler => theta(1.0)?,
            Method::Midpoint | Method::Trapezoidal => theta(0.5)?,
            Method::Bdf2 => Kind::Bdf2 {
                startup: None,
                startup_rhs: dae.e.lin_comb(1.0, &dae.a, 0.5 * tau),
                lhs: None,
            },
            Method::Gauss4 | Method::Radau5 => {
                let tableau = method.tableau().expect("tableau method");
                let scaled: Vec<Vec<f64>> = tableau.a.iter().map(|r| r.iter().map(|v| -tau * v).collect()).collect();
                let s = tableau.stages();
                let eye: Vec<Vec<f64>> = (0..s).map(|i| (0..s).map(|j| f64::from(u8::from(i == j))).collect()).collect();
                let lhs = SparseMat::kron_left(&eye, &dae.e).add(&SparseMat::kron_left(&scaled, &dae.a));
                let lhs = Factorization::new(&lhs, &format!("{method} stage matrix")).map_err(|e| with_step(e, 0))?;
                Kind::Irk { tableau, lhs }
            }
        };
        Ok(Stepper { dae, method, tau, kind })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dae(&self) -> &LinearDae {
        &self.dae
    }

    /// The input value paired with the midpoint output in the energy balance
    /// of the step from `t` to `t + τ`.
    pub fn effective_input(&self, u: &InputSignal, t: f64) -> Vec<f64> {
        match self.method {
            Method::Trapezoidal => {
                let (a, b) = (u.eval(t), u.eval(t + self.tau));
                a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
            }
            _ => u.eval(t + 0.5 * self.tau),
        }
    }

    /// Advances `x` (at time `t`) by one step. `prev` is the state one step
    /// earlier, used by BDF2; `k` is the step index for error reports.
    pub fn step(&mut self, x: &[f64], prev: Option<&[f64]>, u: &InputSignal, t: f64, k: usize) -> Result<Vec<f64>> {
        let tau = self.tau;
        let dae = &self.dae;
        let n = dae.dim();
        if x.len() != n {
            return Err(Error::dim("state", n, x.len()));
        }
        if u.dim() != dae.b.ncols() {
            return Err(Error::dim("input signal", dae.b.ncols(), u.dim()));
        }
        match &mut self.kind {
            Kind::Theta { lhs, rhs } => {
                let uu = match self.method {
                    Method::ImplicitEuler => u.eval(t + tau),
                    Method::Midpoint => u.eval(t + 0.5 * tau),
                    _ => {
                        let (a, b) = (u.eval(t), u.eval(t + tau));
                        a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect()
                    }
                };
                let mut r = rhs.mul_vec(x);
                dae.b.mul_vec_acc(tau, &uu, &mut r);
                Ok(lhs.solve(&r))
            }
            Kind::Bdf2 {
                startup,
                startup_rhs,
                lhs,
            } => match prev {
                None => {
                    if startup.is_none() {
                        let m = dae.e.lin_comb(1.0, &dae.a, -0.5 * tau);
                        *startup = Some(Factorization::new(&m, "trapezoidal startup matrix").map_err(|e| with_step(e, k))?);
                    }
                    let (a, b) = (u.eval(t), u.eval(t + tau));
                    let uu: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
                    let mut r = startup_rhs.mul_vec(x);
                    dae.b.mul_vec_acc(tau, &uu, &mut r);
                    Ok(startup.as_ref().expect("factorized").solve(&r))
                }
                Some(xp) => {
                    if lhs.is_none() {
                        let m = dae.e.lin_comb(1.5, &dae.a, -tau);
                        *lhs = Some(Factorization::new(&m, "bdf2 step matrix").map_err(|e| with_step(e, k))?);
                    }
                    let comb: Vec<f64> = x.iter().zip(xp).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
                    let mut r = dae.e.mul_vec(&comb);
                    dae.b.mul_vec_acc(tau, &u.eval(t + tau), &mut r);
                    Ok(lhs.as_ref().expect("factorized").solve(&r))
                }
            },
            Kind::Irk { tableau, lhs } => {
                let s = tableau.stages();
                let ax = dae.a.mul_vec(x);
                let mut r = Vec::with_capacity(s * n);
                for i in 0..s {
                    let mut ri = ax.clone();
                    dae.b.mul_vec_acc(1.0, &u.eval(t + tableau.c[i] * tau), &mut ri);
                    r.extend(ri);
                }
                let kst = lhs.solve(&r);
                let mut x1 = x.to_vec();
                for i in 0..s {
                    let w = tau * tableau.b[i];
                    for (xj, kj) in x1.iter_mut().zip(&kst[i * n..(i + 1) * n]) {
                        *xj += w * kj;
                    }
                }
                Ok(x1)
            }
        }
    }
}

/// One implicit midpoint step with input `u_mid` held at the step midpoint.
/// Returns the new state and the midpoint output
/// `y = Bᵀ [(z1' − z1)/τ; S z2½; z3½]`.
pub fn step_midpoint(sys: &EnergySystem, z: &[f64], u_mid: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sys.partition().m;
    if u_mid.len() != m {
        return Err(Error::dim("input", m, u_mid.len()));
    }
    let mut st = Stepper::new(sys, Method::Midpoint, tau)?;
    let u = InputSignal::new(u_mid.iter().map(|&v| Waveform::Constant(v)).collect());
    let z1 = st.step(z, None, &u, 0.0, 0)?;
    let y = midpoint_output(sys, z, &z1, tau)?;
    Ok((z1, y))
}

/// One step of `method` on a linear descriptor system.
pub fn step_irk(dae: &LinearDae, method: Method, z: &[f64], u: &InputSignal, t: f64, tau: f64) -> Result<Vec<f64>> {
    let mut st = Stepper::from_dae(dae.clone(), method, tau)?;
    st.step(z, None, u, t, 0)
}

/// Flow variable at the step midpoint, `[Δz1/τ; S z2½; z3½]`.
pub fn midpoint_flow(sys: &EnergySystem, z0: &[f64], z1: &[f64], tau: f64) -> Result<Vec<f64>> {
    let p = sys.partition();
    let mid: Vec<f64> = z0.iter().zip(z1).map(|(a, b)| 0.5 * (a + b)).collect();
    let dz1: Vec<f64> = z1[p.z1()].iter().zip(&z0[p.z1()]).map(|(b, a)| (b - a) / tau).collect();
    sys.flow(&dz1, &mid)
}

pub fn midpoint_output(sys: &EnergySystem, z0: &[f64], z1: &[f64], tau: f64) -> Result<Vec<f64>> {
    Ok(sys.b().tr_mul_vec(&midpoint_flow(sys, z0, z1, tau)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Blocks, Partition};

    /// ż = −x as a one-state z2 system with R = 1.
    fn decay() -> EnergySystem {
        EnergySystem::new(
            Partition::new(0, 1, 0, 0),
            Blocks {
                e: SparseMat::identity(1),
                j: SparseMat::zeros(1, 1),
                r: SparseMat::identity(1),
                b: SparseMat::zeros(1, 0),
                m1: SparseMat::zeros(0, 0),
                m2: SparseMat::identity(1),
                s: SparseMat::identity(1),
            },
        )
        .unwrap()
    }

    #[test]
    fn implicit_euler_scalar_decay() {
        let dae = to_linear_dae(&decay());
        assert_eq!(dae.e.get(0, 0), 1.0);
        assert_eq!(dae.a.get(0, 0), -1.0);
        let x = step_irk(&dae, Method::ImplicitEuler, &[1.0], &InputSignal::zero(0), 0.0, 0.1).unwrap();
        assert!((x[0] - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn stationary_state_stays() {
        let (z, y) = step_midpoint(&decay(), &[0.0], &[], 0.1).unwrap();
        assert_eq!(z, vec![0.0]);
        assert!(y.is_empty());
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("rk4".parse::<Method>().is_err());
    }

    #[test]
    fn radau_on_decay_is_accurate() {
        let dae = to_linear_dae(&decay());
        let x = step_irk(&dae, Method::Radau5, &[1.0], &InputSignal::zero(0), 0.0, 0.1).unwrap();
        assert!((x[0] - (-0.1f64).exp()).abs() < 1e-8);
    }
}
