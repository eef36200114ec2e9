use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::{dot, norm_inf};
use crate::system::EnergySystem;

use super::{midpoint_flow, InputSignal, Method, Stepper};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    pub tau: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `outputs[0]` is the output at t0 with ż1 = 0; `outputs[k]` for k ≥ 1
    /// is the midpoint output of step k−1 → k.
    pub outputs: Vec<Vec<f64>>,
    /// Inputs paired with `outputs` in the energy balance.
    pub inputs: Vec<Vec<f64>>,
    pub hamiltonians: Vec<f64>,
    pub dissipated_cum: Vec<f64>,
    pub supplied_cum: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,H,D_cum,E_in,<states>,<outputs>`.
    pub fn to_csv(&self, sys: &EnergySystem) -> String {
        let mut s = String::from("t,H,D_cum,E_in");
        for l in sys.state_labels() {
            s.push(',');
            s.push_str(l);
        }
        for l in sys.port_labels() {
            s.push_str(",y_");
            s.push_str(l);
        }
        s.push('\n');
        for k in 0..self.len() {
            let _ = write!(
                s,
                "{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.hamiltonians[k]),
                fmt_f64(self.dissipated_cum[k]),
                fmt_f64(self.supplied_cum[k])
            );
            for v in self.states[k].iter().chain(&self.outputs[k]) {
                s.push(',');
                s.push_str(&fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Integrates from t = 0.
pub fn simulate(
    sys: &EnergySystem,
    z0: &[f64],
    u: &InputSignal,
    tau: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory> {
    simulate_from(sys, z0, u, 0.0, tau, t_end, method)
}

pub fn simulate_from(
    sys: &EnergySystem,
    z0: &[f64],
    u: &InputSignal,
    t0: f64,
    tau: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory> {
    let p = sys.partition();
    if z0.len() != p.n() {
        return Err(Error::dim("initial state", p.n(), z0.len()));
    }
    if u.dim() != p.m {
        return Err(Error::dim("input signal", p.m, u.dim()));
    }
    if !(tau > 0.0) || !(t_end >= t0) {
        return Err(Error::Model(format!("invalid time grid: tau = {tau}, t0 = {t0}, t_end = {t_end}")));
    }
    let span = t_end - t0;
    let steps = (span / tau).round() as usize;
    if (steps as f64 * tau - span).abs() > 1e-9 * span.max(tau) {
        return Err(Error::Model(format!("step {tau:e} does not divide the interval length {span:e}")));
    }

    let mut stepper = Stepper::new(sys, method, tau)?;
    let mut tr = Trajectory {
        method,
        tau,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        hamiltonians: Vec::with_capacity(steps + 1),
        dissipated_cum: Vec::with_capacity(steps + 1),
        supplied_cum: Vec::with_capacity(steps + 1),
    };
    tr.times.push(t0);
    tr.states.push(z0.to_vec());
    tr.outputs.push(sys.output(&vec![0.0; p.n1], z0)?);
    tr.inputs.push(u.eval(t0));
    tr.hamiltonians.push(sys.hamiltonian(z0)?);
    tr.dissipated_cum.push(0.0);
    tr.supplied_cum.push(0.0);

    for k in 0..steps {
        let t = t0 + k as f64 * tau;
        let prev = if k > 0 { Some(tr.states[k - 1].as_slice()) } else { None };
        let x = &tr.states[k];
        let x1 = stepper.step(x, prev, u, t, k)?;
        if x1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at step {k}")));
        }
        let w = midpoint_flow(sys, x, &x1, tau)?;
        let y = sys.b().tr_mul_vec(&w);
        let ue = stepper.effective_input(u, t);
        let diss = tau * sys.r().quad_form(&w);
        let supply = tau * dot(&y, &ue);
        tr.dissipated_cum.push(tr.dissipated_cum[k] + diss);
        tr.supplied_cum.push(tr.supplied_cum[k] + supply);
        tr.hamiltonians.push(sys.hamiltonian(&x1)?);
        tr.times.push(t0 + (k + 1) as f64 * tau);
        tr.states.push(x1);
        tr.outputs.push(y);
        tr.inputs.push(ue);
    }
    Ok(tr)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditRow {
    pub delta_h: f64,
    /// τ⟨y½, ū⟩
    pub supply: f64,
    /// τ w½ᵀ R w½
    pub dissipation: f64,
    /// ΔH − supply + dissipation; zero for the midpoint rule.
    pub defect: f64,
}

/// Per-step discrete energy balance recomputed from the stored states.
pub fn energy_audit(sys: &EnergySystem, traj: &Trajectory) -> Result<Vec<AuditRow>> {
    let tau = traj.tau;
    let mut rows = Vec::with_capacity(traj.len().saturating_sub(1));
    for k in 0..traj.len().saturating_sub(1) {
        let (x0, x1) = (&traj.states[k], &traj.states[k + 1]);
        let w = midpoint_flow(sys, x0, x1, tau)?;
        let y = sys.b().tr_mul_vec(&w);
        let supply = tau * dot(&y, &traj.inputs[k + 1]);
        let dissipation = tau * sys.r().quad_form(&w);
        let delta_h = sys.hamiltonian(x1)? - sys.hamiltonian(x0)?;
        rows.push(AuditRow {
            delta_h,
            supply,
            dissipation,
            defect: delta_h - supply + dissipation,
        });
    }
    Ok(rows)
}

/// `(eps_z, eps_H)`: the largest ∞-norm deviation of the selected state
/// components from `reference(t)` over the grid, and the relative drift of
/// the final Hamiltonian.
pub fn error_measures(
    traj: &Trajectory,
    components: &[usize],
    reference: impl Fn(f64) -> Vec<f64>,
) -> Result<(f64, f64)> {
    let h0 = *traj
        .hamiltonians
        .first()
        .ok_or_else(|| Error::Numerical("empty trajectory".into()))?;
    if h0 == 0.0 {
        return Err(Error::Numerical("relative energy error undefined for H0 = 0".into()));
    }
    let mut eps_z = 0.0f64;
    for (t, z) in traj.times.iter().zip(&traj.states) {
        let r = reference(*t);
        if r.len() != components.len() {
            return Err(Error::dim("reference", components.len(), r.len()));
        }
        let d: Vec<f64> = components.iter().zip(&r).map(|(&c, v)| z[c] - v).collect();
        eps_z = eps_z.max(norm_inf(&d));
    }
    let hf = *traj.hamiltonians.last().expect("non-empty");
    Ok((eps_z, (hf - h0).abs() / h0.abs()))
}
