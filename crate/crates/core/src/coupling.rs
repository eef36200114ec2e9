//! Field–circuit coupling.
//!
//! Conductor systems are folded first, in binding order, and the circuit
//! last. The global state is therefore
//! `[a_0; a_1; …; circuit z2; z3 of conductor 0; …; circuit z3]` and the
//! remaining input `ũ` holds the independent current sources followed by
//! the independent voltage sources.

use std::collections::HashMap;
use std::ops::Range;

use crate::conductors::{ConductorKind, ConductorModel};
use crate::error::{Error, Result};
use crate::integrators::{midpoint_flow, Trajectory};
use crate::interconnect::{interconnect, InterconnectionSpec};
use crate::linalg::{sym_pinv, SparseMat};
use crate::mna::{BranchSource, IncidenceSet};
use crate::system::EnergySystem;

/// A conductor model under the name used by `F` cards.
#[derive(Clone, Debug)]
pub struct NamedConductor {
    pub name: String,
    pub model: ConductorModel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundPort {
    /// Name of the `F` element.
    pub name: String,
    pub kind: ConductorKind,
    /// Index into the circuit input `u = [i; v]`.
    pub circuit_port: usize,
    pub conductor: usize,
    pub conductor_port: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortBinding {
    pub ports: Vec<BoundPort>,
    /// Circuit inputs left open as `ũ` (the independent sources).
    pub external: Vec<usize>,
}

impl PortBinding {
    /// Binds every field port of the circuit to a conductor port. Each
    /// conductor port must be used exactly once.
    pub fn new(inc: &IncidenceSet, conductors: &[NamedConductor]) -> Result<Self> {
        let by_name: HashMap<&str, usize> = conductors.iter().enumerate().map(|(k, c)| (c.name.as_str(), k)).collect();
        if by_name.len() != conductors.len() {
            return Err(Error::Model("duplicate conductor model names".into()));
        }
        let mut used: Vec<Vec<Option<String>>> = conductors.iter().map(|c| vec![None; c.model.n_ports()]).collect();
        let mut ports = Vec::new();
        let mut external = Vec::new();
        let bi = inc.i_branches.len();
        let branches = inc.i_branches.iter().enumerate().chain(inc.v_branches.iter().enumerate().map(|(k, b)| (bi + k, b)));
        for (col, br) in branches {
            let BranchSource::Field { kind, model, column } = &br.source else {
                external.push(col);
                continue;
            };
            let &k = by_name
                .get(model.as_str())
                .ok_or_else(|| Error::Model(format!("field port '{}' refers to unknown model '{model}'", br.name)))?;
            let actual = conductors[k].model.kind();
            if actual != *kind {
                return Err(Error::Model(format!(
                    "field port '{}' is declared {kind} but model '{model}' is {actual}",
                    br.name
                )));
            }
            let slot = used[k].get_mut(*column).ok_or_else(|| {
                Error::Model(format!(
                    "field port '{}' uses column {column} of model '{model}', which has {} port(s)",
                    br.name,
                    conductors[k].model.n_ports()
                ))
            })?;
            if let Some(prev) = slot {
                return Err(Error::Model(format!(
                    "column {column} of model '{model}' is bound twice ('{prev}' and '{}')",
                    br.name
                )));
            }
            *slot = Some(br.name.clone());
            ports.push(BoundPort {
                name: br.name.clone(),
                kind: *kind,
                circuit_port: col,
                conductor: k,
                conductor_port: *column,
            });
        }
        for (k, slots) in used.iter().enumerate() {
            if let Some(p) = slots.iter().position(Option::is_none) {
                return Err(Error::Model(format!(
                    "column {p} of model '{}' is not connected to the circuit",
                    conductors[k].name
                )));
            }
        }
        Ok(PortBinding { ports, external })
    }
}

/// Where each part's states live in the coupled state vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledLayout {
    pub conductor_z1: Vec<Range<usize>>,
    pub conductor_z3: Vec<Range<usize>>,
    pub circuit_z2: Range<usize>,
    pub circuit_z3: Range<usize>,
    pub conductor_inputs: Vec<Range<usize>>,
}

#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub system: EnergySystem,
    pub circuit: EnergySystem,
    pub conductors: Vec<EnergySystem>,
    pub binding: PortBinding,
    pub layout: CoupledLayout,
    /// The full power-preserving coupling matrix over `[u_conductors; u_circuit]`.
    pub f_skew: SparseMat,
}

impl CoupledSystem {
    /// State of conductor `k` in its own ordering `[z1; z3]`.
    pub fn conductor_state(&self, k: usize, z: &[f64]) -> Vec<f64> {
        z[self.layout.conductor_z1[k].clone()]
            .iter()
            .chain(&z[self.layout.conductor_z3[k].clone()])
            .copied()
            .collect()
    }

    /// Circuit state `[z2; z3]`.
    pub fn circuit_state(&self, z: &[f64]) -> Vec<f64> {
        z[self.layout.circuit_z2.clone()]
            .iter()
            .chain(&z[self.layout.circuit_z3.clone()])
            .copied()
            .collect()
    }

    /// Maps a circuit state index (in `[z2; z3]` order) to the global index.
    pub fn circuit_index(&self, k: usize) -> usize {
        let n2 = self.layout.circuit_z2.len();
        if k < n2 {
            self.layout.circuit_z2.start + k
        } else {
            self.layout.circuit_z3.start + k - n2
        }
    }

    /// Maps conductor `c`'s local state index to the global index.
    pub fn conductor_index(&self, c: usize, k: usize) -> usize {
        let n1 = self.layout.conductor_z1[c].len();
        if k < n1 {
            self.layout.conductor_z1[c].start + k
        } else {
            self.layout.conductor_z3[c].start + k - n1
        }
    }

    /// Sum of the parts' Hamiltonians.
    pub fn hamiltonian_of_parts(&self, z: &[f64]) -> Result<f64> {
        let mut h = self.circuit.hamiltonian(&self.circuit_state(z))?;
        for (k, c) in self.conductors.iter().enumerate() {
            h += c.hamiltonian(&self.conductor_state(k, z))?;
        }
        Ok(h)
    }
}

fn prefixed(sys: EnergySystem, prefix: &str) -> Result<EnergySystem> {
    let states = sys.state_labels().iter().map(|l| format!("{prefix}.{l}")).collect();
    let ports = sys.port_labels().iter().map(|l| format!("{prefix}.{l}")).collect();
    sys.with_labels(states, ports)
}

/// Closes every bound port with the power-preserving law `u_circuit = y_conductor`,
/// `u_conductor = −y_circuit`.
pub fn couple(
    circuit: &EnergySystem,
    conductors: &[EnergySystem],
    names: &[&str],
    binding: &PortBinding,
) -> Result<CoupledSystem> {
    if names.len() != conductors.len() {
        return Err(Error::dim("conductor names", conductors.len(), names.len()));
    }
    for (k, c) in conductors.iter().enumerate() {
        let p = c.partition();
        if p.n2 != 0 {
            return Err(Error::Model(format!("conductor system '{}' has energy-storing z2 states", names[k])));
        }
        for port in binding.ports.iter().filter(|p| p.conductor == k) {
            if port.conductor_port >= p.m {
                return Err(Error::dim(format!("ports of conductor '{}'", names[k]), p.m, port.conductor_port + 1));
            }
        }
    }
    let pc = circuit.partition();
    circuit.check()?;

    let mut input_offsets = Vec::with_capacity(conductors.len());
    let mut acc: Option<EnergySystem> = None;
    let mut m_cond = 0;
    for (k, c) in conductors.iter().enumerate() {
        c.check()?;
        input_offsets.push(m_cond..m_cond + c.partition().m);
        m_cond += c.partition().m;
        let c = prefixed(c.clone(), names[k])?;
        acc = Some(match acc {
            None => c,
            Some(a) => {
                let m = a.partition().m + c.partition().m;
                interconnect(&a, &c, &InterconnectionSpec::none(m))?
            }
        });
    }

    let m = m_cond + pc.m;
    let mut f = Vec::new();
    for p in &binding.ports {
        if p.conductor >= conductors.len() || p.circuit_port >= pc.m {
            return Err(Error::Model(format!("binding of port '{}' is out of range", p.name)));
        }
        let g = input_offsets[p.conductor].start + p.conductor_port;
        let c = m_cond + p.circuit_port;
        f.push((c, g, 1.0));
        f.push((g, c, -1.0));
    }
    let f_skew = SparseMat::from_triplets(m, m, f);
    let full = match acc {
        None => circuit.clone(),
        Some(a) => interconnect(&a, circuit, &InterconnectionSpec::skew(f_skew.clone())?)?,
    };

    // Keep only the open circuit inputs.
    let blocks = full.blocks();
    let keep: Vec<usize> = binding.external.iter().map(|&c| m_cond + c).collect();
    let n = full.partition().n();
    let b = blocks.b.select(&(0..n).collect::<Vec<_>>(), &keep);
    let mut p = full.partition();
    p.m = keep.len();
    let ports = keep.iter().map(|&k| full.port_labels()[k].clone()).collect();
    let states = full.state_labels().to_vec();
    let system = EnergySystem::new(p, crate::system::Blocks { b, ..blocks })?.with_labels(states, ports)?;
    system.check()?;

    let n1: usize = conductors.iter().map(|c| c.partition().n1).sum();
    let mut conductor_z1 = Vec::new();
    let mut conductor_z3 = Vec::new();
    let (mut o1, mut o3) = (0, n1 + pc.n2);
    for c in conductors {
        let q = c.partition();
        conductor_z1.push(o1..o1 + q.n1);
        conductor_z3.push(o3..o3 + q.n3);
        o1 += q.n1;
        o3 += q.n3;
    }
    let layout = CoupledLayout {
        conductor_z1,
        conductor_z3,
        circuit_z2: n1..n1 + pc.n2,
        circuit_z3: o3..o3 + pc.n3,
        conductor_inputs: input_offsets,
    };
    Ok(CoupledSystem {
        system,
        circuit: circuit.clone(),
        conductors: conductors.to_vec(),
        binding: binding.clone(),
        layout,
        f_skew,
    })
}

/// Inputs on `unknown` columns that make `sys` satisfy its equations at the
/// step midpoint, given the values of the remaining inputs in `known`.
fn implied_input(
    sys: &EnergySystem,
    x0: &[f64],
    x1: &[f64],
    tau: f64,
    known: &[(usize, f64)],
) -> Result<Vec<f64>> {
    let p = sys.partition();
    let w = midpoint_flow(sys, x0, x1, tau)?;
    let mid: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut lhs = vec![0.0; p.n()];
    let z1 = sys.m1().mul_vec(&mid[p.z1()]);
    lhs[p.z1()].copy_from_slice(&z1);
    let dz2: Vec<f64> = p.z2().map(|k| (x1[k] - x0[k]) / tau).collect();
    let e = sys.e().mul_vec(&dz2);
    lhs[p.z2()].copy_from_slice(&e);
    sys.j_minus_r().mul_vec_acc(-1.0, &w, &mut lhs);
    let mut uk = vec![0.0; p.m];
    let mut unknown = vec![true; p.m];
    for &(j, v) in known {
        uk[j] = v;
        unknown[j] = false;
    }
    sys.b().mul_vec_acc(-1.0, &uk, &mut lhs);
    // Least squares over the unknown columns.
    let cols: Vec<usize> = (0..p.m).filter(|&j| unknown[j]).collect();
    let b = sys.b().select(&(0..p.n()).collect::<Vec<_>>(), &cols);
    let btb = sym_pinv(&b.transpose().matmul(&b))?;
    let rhs = b.tr_mul_vec(&lhs);
    let mut u = uk;
    for (i, &ci) in cols.iter().enumerate() {
        u[ci] = (0..cols.len()).map(|j| btb[(i, j)] * rhs[j]).sum();
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingReport {
    /// Largest mismatch per bound port over all steps, in port order:
    /// conductor input against the circuit quantity it must equal.
    pub max_defect: Vec<(String, f64)>,
    /// Largest magnitude of the compared quantities, for relative checks.
    pub scale: f64,
}

impl CouplingReport {
    pub fn worst(&self) -> f64 {
        self.max_defect.iter().fold(0.0, |a, (_, d)| a.max(*d))
    }
}

/// Checks at every step midpoint that `v_str = A_strᵀφ`, `v_foil = A_foilᵀφ`
/// and `i_sol = j_sol`: the input a conductor needs to satisfy its own
/// equations equals the circuit quantity routed to it, and vice versa.
pub fn verify_coupling_identities(coupled: &CoupledSystem, traj: &Trajectory) -> Result<CouplingReport> {
    let mut max = vec![0.0f64; coupled.binding.ports.len()];
    let mut scale = 0.0f64;
    for k in 0..traj.len().saturating_sub(1) {
        let (x0, x1) = (&traj.states[k], &traj.states[k + 1]);
        let (c0, c1) = (coupled.circuit_state(x0), coupled.circuit_state(x1));
        let wc = midpoint_flow(&coupled.circuit, &c0, &c1, traj.tau)?;
        let yc = coupled.circuit.b().tr_mul_vec(&wc);
        let known: Vec<(usize, f64)> = coupled
            .binding
            .external
            .iter()
            .copied()
            .zip(traj.inputs[k + 1].iter().copied())
            .collect();
        let uc = implied_input(&coupled.circuit, &c0, &c1, traj.tau, &known)?;
        let mut per_conductor = Vec::with_capacity(coupled.conductors.len());
        for (ci, sys) in coupled.conductors.iter().enumerate() {
            let (s0, s1) = (coupled.conductor_state(ci, x0), coupled.conductor_state(ci, x1));
            let w = midpoint_flow(sys, &s0, &s1, traj.tau)?;
            per_conductor.push((implied_input(sys, &s0, &s1, traj.tau, &[])?, sys.b().tr_mul_vec(&w)));
        }
        for (pi, port) in coupled.binding.ports.iter().enumerate() {
            let (ug, yg) = &per_conductor[port.conductor];
            let (ug, yg) = (ug[port.conductor_port], yg[port.conductor_port]);
            let (ucp, ycp) = (uc[port.circuit_port], yc[port.circuit_port]);
            let d = (ug + ycp).abs().max((ucp - yg).abs());
            max[pi] = max[pi].max(d);
            scale = scale.max(ug.abs()).max(ycp.abs()).max(ucp.abs()).max(yg.abs());
        }
    }
    Ok(CouplingReport {
        max_defect: coupled.binding.ports.iter().map(|p| p.name.clone()).zip(max).collect(),
        scale,
    })
}
