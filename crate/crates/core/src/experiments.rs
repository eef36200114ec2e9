//! The oscillator studies: energy behaviour, index-2 excitation and
//! convergence orders.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::conductors::{
    foil_from_solid, lumped_inductance, solid_from_field, stranded_from_field, ConductorKind, ConductorModel,
    SIGMA_COPPER,
};
use crate::coupling::{couple, CoupledSystem, NamedConductor, PortBinding};
use crate::error::{Error, Result};
use crate::fem::{build_rect_mesh, parse_geometry, FieldMatrices, Geometry, MaterialMap};
use crate::integrators::{consistent_init, error_measures, simulate, InputSignal, Method, Trajectory};
use crate::io::fmt_f64;
use crate::mna::{build_incidence, mna_system, parse_netlist, IcTarget, IncidenceSet, Netlist};

/// Default oscillator layout (core, winding, surrounding air).
pub const OSCILLATOR_GEOMETRY: &str = include_str!("../data/oscillator.geom");

/// Conductivity of the core when it is conductive.
pub const SIGMA_CORE: f64 = 100.0;

const COIL: &str = "coil";
const CORE: &str = "core";

/// `(φ_ref(t), i_ref(t), H0)` of the lossless LC circuit with
/// `ω = 1/√(LC)`.
pub fn analytic_reference(l: f64, c: f64, v0: f64, i0: f64, t: f64) -> Result<(f64, f64, f64)> {
    if !(l > 0.0 && c > 0.0) {
        return Err(Error::Model(format!("L and C must be positive, got L = {l:e}, C = {c:e}")));
    }
    let w = 1.0 / (l * c).sqrt();
    let (s, co) = (w * t).sin_cos();
    Ok((
        v0 * co + i0 / (c * w) * s,
        i0 * co - v0 / (l * w) * s,
        0.5 * c * v0 * v0 + 0.5 * l * i0 * i0,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorConfig {
    /// Stranded or solid winding; foil gives the single-foil equivalent of solid.
    pub conductor: ConductorKind,
    pub core_conductive: bool,
    /// Include the DC resistance of the stranded winding.
    pub wire_resistance: bool,
    pub capacitance: f64,
    pub v0: f64,
    pub i0: f64,
    pub tau: f64,
    pub t_end: f64,
    pub method: Method,
    /// Mesh size in metres.
    pub mesh_h: f64,
    /// Geometry file contents.
    pub geometry: String,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        OscillatorConfig {
            conductor: ConductorKind::Stranded,
            core_conductive: false,
            wire_resistance: false,
            capacitance: 100e-6,
            v0: 1.0,
            i0: 0.0,
            tau: 0.1e-6,
            t_end: 50e-6,
            method: Method::Trapezoidal,
            mesh_h: 1e-3,
            geometry: OSCILLATOR_GEOMETRY.to_string(),
        }
    }
}

impl OscillatorConfig {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("time step", self.tau),
            ("end time", self.t_end),
            ("capacitance", self.capacitance),
            ("mesh size", self.mesh_h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Model(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.v0.is_finite() && self.i0.is_finite()) {
            return Err(Error::Model("initial values must be finite".into()));
        }
        Ok(())
    }

    /// `key = value` lines of every parameter except the geometry text.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        vec![
            ("conductor".into(), self.conductor.to_string()),
            ("core_conductive".into(), self.core_conductive.to_string()),
            ("wire_resistance".into(), self.wire_resistance.to_string()),
            ("capacitance".into(), fmt_f64(self.capacitance)),
            ("v0".into(), fmt_f64(self.v0)),
            ("i0".into(), fmt_f64(self.i0)),
            ("tau".into(), fmt_f64(self.tau)),
            ("t_end".into(), fmt_f64(self.t_end)),
            ("method".into(), self.method.to_string()),
            ("mesh_h".into(), fmt_f64(self.mesh_h)),
        ]
    }
}

/// Field matrices of the oscillator geometry for the given configuration.
pub fn oscillator_field(cfg: &OscillatorConfig) -> Result<(Geometry, FieldMatrices)> {
    let geom = parse_geometry(&cfg.geometry)?;
    let mesh = build_rect_mesh(&geom, cfg.mesh_h)?;
    let massive = matches!(cfg.conductor, ConductorKind::Solid | ConductorKind::Foil);
    let mat = MaterialMap::from_relative(&mesh, |region| {
        let (mu_r, sigma) = geom.material_of(region);
        let sigma = match region {
            CORE => {
                if cfg.core_conductive {
                    SIGMA_CORE
                } else {
                    0.0
                }
            }
            COIL if massive => SIGMA_COPPER,
            COIL => 0.0,
            _ => sigma,
        };
        (mu_r, sigma)
    })?;
    Ok((geom.clone(), FieldMatrices::assemble(mesh, mat)?))
}

/// A circuit coupled to field models, with initial conditions resolved.
#[derive(Clone, Debug)]
pub struct CircuitModel {
    pub netlist: Netlist,
    pub incidence: IncidenceSet,
    pub coupled: CoupledSystem,
    pub conductors: Vec<NamedConductor>,
    /// External source waveforms feeding `ũ`.
    pub input: InputSignal,
}

impl CircuitModel {
    pub fn new(netlist: Netlist, conductors: Vec<NamedConductor>) -> Result<Self> {
        let incidence = build_incidence(&netlist)?;
        let binding = PortBinding::new(&incidence, &conductors)?;
        let circuit = mna_system(&incidence)?;
        let systems = conductors.iter().map(|c| c.model.system()).collect::<Result<Vec<_>>>()?;
        let names: Vec<&str> = conductors.iter().map(|c| c.name.as_str()).collect();
        let coupled = couple(&circuit, &systems, &names, &binding)?;
        let input = incidence.source_signal();
        Ok(CircuitModel {
            netlist,
            incidence,
            coupled,
            conductors,
            input,
        })
    }

    /// Global index of the potential of `node`.
    pub fn potential_index(&self, node: &str) -> Option<usize> {
        self.incidence.node_index(node).map(|k| self.coupled.circuit_index(k))
    }

    /// Global index of the state holding the current of element `name`:
    /// inductor and voltage-like branch currents live in the circuit, the
    /// current of a stranded or foil port in its conductor.
    pub fn current_index(&self, name: &str) -> Option<usize> {
        let inc = &self.incidence;
        let n = inc.n_nodes();
        if let Some(k) = inc.l_names.iter().position(|x| x == name) {
            return Some(self.coupled.circuit_index(n + k));
        }
        if let Some(k) = inc.v_branches.iter().position(|b| b.name == name) {
            return Some(self.coupled.circuit_index(n + inc.l.len() + k));
        }
        let port = self.coupled.binding.ports.iter().find(|p| p.name == name)?;
        let sys = &self.coupled.conductors[port.conductor];
        let q = sys.partition();
        let local = match self.conductors[port.conductor].model {
            ConductorModel::Stranded(_) => q.n1 + port.conductor_port,
            ConductorModel::Foil(_) => q.n() - 1,
            ConductorModel::Solid(_) => return None,
        };
        Some(self.coupled.conductor_index(port.conductor, local))
    }

    /// Initial state from the netlist's `.ic` values; everything else is
    /// completed by consistent initialisation.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let sys = &self.coupled.system;
        let mut given = vec![None; sys.partition().n()];
        for (target, v) in &self.netlist.ic {
            let idx = match target {
                IcTarget::Potential(n) if n == crate::mna::GROUND => {
                    if *v != 0.0 {
                        return Err(Error::Model("ground potential is fixed at zero".into()));
                    }
                    continue;
                }
                IcTarget::Potential(n) => self.potential_index(n),
                IcTarget::Current(n) => self.current_index(n),
            }
            .ok_or_else(|| Error::Model(format!("initial condition {target} has no matching state")))?;
            given[idx] = Some(*v);
        }
        consistent_init(sys, &given, &self.input.eval(0.0))
    }
}

#[derive(Clone, Debug)]
pub struct OscillatorModel {
    pub config: OscillatorConfig,
    pub geometry: Geometry,
    pub field: FieldMatrices,
    pub circuit: CircuitModel,
    /// `XᵀK⁻¹X` of the stranded winding.
    pub inductance: Option<f64>,
    pub phi: usize,
    /// Index of the winding current, when it is a state.
    pub current: Option<usize>,
}

/// Builds the capacitor–winding circuit, optionally with a voltage source
/// in parallel to the capacitor.
pub fn build_oscillator(cfg: &OscillatorConfig, source: Option<&str>) -> Result<OscillatorModel> {
    cfg.check()?;
    let (geometry, field) = oscillator_field(cfg)?;
    let turns = geometry
        .turns_of(COIL)
        .ok_or_else(|| Error::Model("oscillator geometry lacks a 'turns coil' record".into()))?;
    let (model, inductance) = match cfg.conductor {
        ConductorKind::Stranded => {
            let m = stranded_from_field(&field, COIL, turns, cfg.wire_resistance.then_some(SIGMA_COPPER))?;
            let l = lumped_inductance(&m.k_nu, &m.x)?.get(0, 0);
            (ConductorModel::Stranded(m), Some(l))
        }
        ConductorKind::Solid => (ConductorModel::Solid(solid_from_field(&field, COIL)?), None),
        ConductorKind::Foil => (ConductorModel::Foil(foil_from_solid(&solid_from_field(&field, COIL)?)?), None),
    };
    let mut text = format!("C1 1 0 {:e}\nF1 0 1 {} {COIL} 0\n", cfg.capacitance, cfg.conductor);
    if let Some(src) = source {
        let _ = writeln!(text, "V1 1 0 {src}");
    }
    let _ = write!(text, ".tran {:e} {:e}\n.method {}\n.ic V(1) {:e}", cfg.tau, cfg.t_end, cfg.method, cfg.v0);
    if cfg.conductor != ConductorKind::Solid {
        let _ = write!(text, " I(F1) {:e}", cfg.i0);
    }
    text.push('\n');
    let netlist = parse_netlist(&text)?;
    let circuit = CircuitModel::new(
        netlist,
        vec![NamedConductor {
            name: COIL.into(),
            model,
        }],
    )?;
    let phi = circuit.potential_index("1").expect("node 1 exists");
    let current = circuit.current_index("F1");
    Ok(OscillatorModel {
        config: cfg.clone(),
        geometry,
        field,
        circuit,
        inductance,
        phi,
        current,
    })
}

/// Angular frequency from the zero crossings of `v`, located by linear
/// interpolation. With `zero_at_start` the sample at `times[0]` counts as a
/// crossing (for signals that start at zero).
pub fn measure_omega(times: &[f64], v: &[f64], zero_at_start: bool) -> Option<f64> {
    let mut crossings = Vec::new();
    if zero_at_start {
        crossings.push(*times.first()?);
    }
    for k in 1..v.len() {
        let (a, b) = (v[k - 1], v[k]);
        if k == 1 && zero_at_start {
            continue;
        }
        if a == 0.0 && k > 1 {
            continue;
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let t = if b == 0.0 {
                times[k]
            } else {
                times[k - 1] + (times[k] - times[k - 1]) * a / (a - b)
            };
            crossings.push(t);
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(PI * (crossings.len() - 1) as f64 / span)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorReport {
    pub steps: usize,
    pub h0: f64,
    /// `max_k |H_k − H_0| / H_0`
    pub max_energy_drift: f64,
    /// `max_k |H_k + D_k − E_k − H_0| / H_0`
    pub max_balance_defect: f64,
    pub final_balance_defect: f64,
    pub h_strictly_decreasing: bool,
    pub total_decay: f64,
    pub inductance: Option<f64>,
    pub omega_expected: Option<f64>,
    pub omega_measured: Option<f64>,
}

impl OscillatorReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), fmt_f64);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "H0 = {}", fmt_f64(self.h0));
        let _ = writeln!(s, "max_energy_drift = {}", fmt_f64(self.max_energy_drift));
        let _ = writeln!(s, "max_balance_defect = {}", fmt_f64(self.max_balance_defect));
        let _ = writeln!(s, "final_balance_defect = {}", fmt_f64(self.final_balance_defect));
        let _ = writeln!(s, "h_strictly_decreasing = {}", self.h_strictly_decreasing);
        let _ = writeln!(s, "total_decay = {}", fmt_f64(self.total_decay));
        let _ = writeln!(s, "inductance = {}", opt(self.inductance));
        let _ = writeln!(s, "omega_expected = {}", opt(self.omega_expected));
        let _ = writeln!(s, "omega_measured = {}", opt(self.omega_measured));
        s
    }
}

fn balance_defects(tr: &Trajectory) -> Vec<f64> {
    let h0 = tr.hamiltonians[0];
    (0..tr.len())
        .map(|k| (tr.hamiltonians[k] + tr.dissipated_cum[k] - tr.supplied_cum[k] - h0).abs())
        .collect()
}

pub fn oscillator_report(model: &OscillatorModel, tr: &Trajectory) -> OscillatorReport {
    let h0 = tr.hamiltonians[0];
    let rel = |x: f64| if h0 != 0.0 { x / h0.abs() } else { x };
    let defects = balance_defects(tr);
    let cur: Option<Vec<f64>> = model.current.map(|c| tr.states.iter().map(|z| z[c]).collect());
    let omega_measured = match (&cur, model.config.i0 == 0.0) {
        (Some(i), true) => measure_omega(&tr.times, i, true),
        _ => measure_omega(&tr.times, &tr.states.iter().map(|z| z[model.phi]).collect::<Vec<_>>(), false),
    };
    OscillatorReport {
        steps: tr.len() - 1,
        h0,
        max_energy_drift: rel(tr.hamiltonians.iter().fold(0.0f64, |a, h| a.max((h - h0).abs()))),
        max_balance_defect: rel(defects.iter().fold(0.0f64, |a, d| a.max(*d))),
        final_balance_defect: rel(*defects.last().expect("non-empty")),
        h_strictly_decreasing: tr.hamiltonians.windows(2).all(|w| w[1] < w[0]),
        total_decay: rel(h0 - tr.hamiltonians.last().expect("non-empty")),
        inductance: model.inductance,
        omega_expected: model.inductance.map(|l| 1.0 / (l * model.config.capacitance).sqrt()),
        omega_measured,
    }
}

/// Simulates the oscillator from `(v0, i0)`.
pub fn run_oscillator(cfg: &OscillatorConfig) -> Result<(OscillatorModel, Trajectory, OscillatorReport)> {
    let model = build_oscillator(cfg, None)?;
    let c = &model.circuit;
    let z0 = c.initial_state()?;
    let tr = simulate(&c.coupled.system, &z0, &c.input, cfg.tau, cfg.t_end, cfg.method)?;
    let rep = oscillator_report(&model, &tr);
    Ok((model, tr, rep))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Index2Report {
    pub steps: usize,
    /// `|H − (E_in − D)|` at t_end.
    pub final_defect: f64,
    pub max_defect: f64,
    /// `max_k max(H_k, |E_in,k|)`
    pub scale: f64,
    pub warning: Option<String>,
}

impl Index2Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "final_defect = {}", fmt_f64(self.final_defect));
        let _ = writeln!(s, "max_defect = {}", fmt_f64(self.max_defect));
        let _ = writeln!(s, "scale = {}", fmt_f64(self.scale));
        if let Some(w) = &self.warning {
            let _ = writeln!(s, "warning = {w}");
        }
        s
    }
}

/// Oscillator driven by `V1 1 0 SIN 0 <amplitude> <freq>` in parallel to the
/// capacitor. Only the stranded winding with a non-conducting core is
/// supported.
pub fn run_index2(cfg: &OscillatorConfig, amplitude: f64, freq: f64) -> Result<(OscillatorModel, Trajectory, Index2Report)> {
    if cfg.conductor != ConductorKind::Stranded || cfg.core_conductive {
        return Err(Error::Model("the index-2 study uses a stranded winding and a non-conducting core".into()));
    }
    let model = build_oscillator(cfg, Some(&format!("SIN 0 {amplitude:e} {freq:e}")))?;
    let c = &model.circuit;
    let z0 = c.initial_state()?;
    let tr = simulate(&c.coupled.system, &z0, &c.input, cfg.tau, cfg.t_end, cfg.method)?;
    let defects: Vec<f64> = (0..tr.len())
        .map(|k| (tr.hamiltonians[k] - (tr.supplied_cum[k] - tr.dissipated_cum[k])).abs())
        .collect();
    let scale = (0..tr.len()).fold(0.0f64, |a, k| a.max(tr.hamiltonians[k].abs()).max(tr.supplied_cum[k].abs()));
    let warning = (!cfg.method.is_stiffly_accurate()).then(|| {
        format!(
            "{} is not stiffly accurate; index-2 algebraic components may show order reduction",
            cfg.method
        )
    });
    let rep = Index2Report {
        steps: tr.len() - 1,
        final_defect: *defects.last().expect("non-empty"),
        max_defect: defects.iter().fold(0.0f64, |a, d| a.max(*d)),
        scale,
        warning,
    };
    Ok((model, tr, rep))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub method: Method,
    pub tau: f64,
    pub eps_z: f64,
    pub eps_h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub method: Method,
    pub slope: f64,
    /// Step sizes used in the fit.
    pub taus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    /// Simulated interval length shared by all cells.
    pub horizon: f64,
    pub inductance: f64,
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<Option<SlopeFit>>,
    /// Errors below this are treated as round-off saturated.
    pub saturation_floor: f64,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,tau,eps_z,eps_H\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.method, fmt_f64(r.tau), fmt_f64(r.eps_z), fmt_f64(r.eps_h));
        }
        s
    }

    pub fn fits_text(&self) -> String {
        let mut s = String::new();
        for f in self.fits.iter().flatten() {
            let taus: Vec<String> = f.taus.iter().map(|t| fmt_f64(*t)).collect();
            let _ = writeln!(s, "{} slope = {:.4} over tau = [{}]", f.method, f.slope, taus.join(", "));
        }
        s
    }

    pub fn fit(&self, method: Method) -> Option<&SlopeFit> {
        self.fits.iter().flatten().find(|f| f.method == method)
    }
}

/// Least-squares slope of `log err` over `log tau`, using only points with
/// `err > floor`. Needs at least two points.
pub fn fit_slope(taus: &[f64], errs: &[f64], floor: f64) -> Option<(f64, Vec<f64>)> {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(errs)
        .filter(|(t, e)| **e > floor && **t > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let used = taus.iter().zip(errs).filter(|(t, e)| **e > floor && **t > 0.0).map(|(t, _)| *t).collect();
    Some((sxy / sxx, used))
}

/// Errors of every `(method, τ)` pair on the lossless stranded oscillator
/// against the closed-form LC solution. Cells run in parallel.
pub fn run_convergence(cfg: &OscillatorConfig, methods: &[Method], taus: &[f64]) -> Result<ConvergenceStudy> {
    let mut cfg = cfg.clone();
    cfg.conductor = ConductorKind::Stranded;
    cfg.core_conductive = false;
    cfg.wire_resistance = false;
    let model = build_oscillator(&cfg, None)?;
    let l = model.inductance.expect("stranded winding");
    let current = model.current.expect("stranded current state");
    let c = &model.circuit;
    let z0 = c.initial_state()?;
    let comps = [model.phi, current];
    let reference = |t: f64| -> Vec<f64> {
        let (p, i, _) = analytic_reference(l, cfg.capacitance, cfg.v0, cfg.i0, t).expect("L, C > 0");
        vec![p, i]
    };
    // Common horizon: the largest multiple of the largest step within t_end.
    let tau_max = taus.iter().copied().fold(0.0f64, f64::max);
    if !(tau_max > 0.0) || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Model("convergence study needs positive step sizes".into()));
    }
    let horizon = (cfg.t_end / tau_max + 1e-9).floor() * tau_max;
    if !(horizon > 0.0) {
        return Err(Error::Model(format!("end time {:e} is shorter than the largest step {tau_max:e}", cfg.t_end)));
    }
    let cells: Vec<(Method, f64)> = methods.iter().flat_map(|&m| taus.iter().map(move |&t| (m, t))).collect();
    let results: Vec<Result<ConvergenceRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&(method, tau)| {
                let (sys, z0, input, reference) = (&c.coupled.system, &z0, &c.input, &reference);
                s.spawn(move || -> Result<ConvergenceRow> {
                    let tr = simulate(sys, z0, input, tau, horizon, method)?;
                    let (eps_z, eps_h) = error_measures(&tr, &comps, reference)?;
                    Ok(ConvergenceRow { method, tau, eps_z, eps_h })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("convergence worker panicked".into()))))
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let w = 1.0 / (l * cfg.capacitance).sqrt();
    let scale = cfg.v0.abs().max(cfg.i0.abs()).max(cfg.v0.abs() / (l * w)).max(cfg.i0.abs() / (cfg.capacitance * w));
    let floor = 1e3 * f64::EPSILON * scale;
    let fits = methods
        .iter()
        .map(|&m| {
            let (ts, es): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.method == m).map(|r| (r.tau, r.eps_z)).unzip();
            fit_slope(&ts, &es, floor).map(|(slope, taus)| SlopeFit { method: m, slope, taus })
        })
        .collect();
    Ok(ConvergenceStudy {
        horizon,
        inductance: l,
        rows,
        fits,
        saturation_floor: floor,
    })
}

/// gnuplot script plotting the energy columns of a trajectory CSV.
pub fn energy_plot_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't [s]'\nset ylabel 'energy [J]'\n\
         set title '{title}'\nplot '{csv}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n"
    )
}

/// gnuplot script for the log–log convergence plot.
pub fn convergence_plot_script(csv: &str, methods: &[Method]) -> String {
    let mut s = format!(
        "set datafile separator ','\nset logscale xy\nset xlabel 'tau [s]'\nset ylabel 'eps_z'\nset key left top\nplot "
    );
    let parts: Vec<String> = methods
        .iter()
        .map(|m| format!("'{csv}' using 2:(strcol(1) eq '{m}' ? $3 : NaN) with linespoints title '{m}'"))
        .collect();
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(analytic_reference(1.0, 1.0, 1.0, 0.0, 0.0).unwrap(), (1.0, 0.0, 0.5));
        let (p, i, h) = analytic_reference(1.0, 1.0, 1.0, 0.0, PI / 2.0).unwrap();
        assert!(p.abs() < 1e-15 && (i + 1.0).abs() < 1e-15 && h == 0.5);
        assert!(analytic_reference(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_crossing_frequency() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 1e-3).collect();
        let v: Vec<f64> = t.iter().map(|t| (3.0 * t).sin()).collect();
        let w = measure_omega(&t, &v, true).unwrap();
        assert!((w - 3.0).abs() < 1e-5, "{w}");
        let c: Vec<f64> = t.iter().map(|t| (3.0 * t).cos()).collect();
        assert!((measure_omega(&t, &c, false).unwrap() - 3.0).abs() < 1e-5);
    }

    #[test]
    fn slope_of_power_law() {
        let taus = [0.8, 0.4, 0.2, 0.1];
        let errs: Vec<f64> = taus.iter().map(|t: &f64| 3.0 * t.powi(2)).collect();
        let (s, used) = fit_slope(&taus, &errs, 0.0).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && used.len() == 4);
        assert_eq!(fit_slope(&taus, &errs, 0.2).unwrap().1.len(), 2);
        assert!(fit_slope(&taus, &errs, 1.0).is_none());
    }
}
