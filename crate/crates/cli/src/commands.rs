use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use emdae::conductors::{synth_foil, ConductorKind, ConductorModel};
use emdae::coupling::NamedConductor;
use emdae::experiments::{
    convergence_plot_script, energy_plot_script, run_convergence, run_index2, run_oscillator,
    CircuitModel, OscillatorConfig, OscillatorModel, OSCILLATOR_GEOMETRY,
};
use emdae::integrators::{simulate, Method, Trajectory};
use emdae::io::{fmt_f64, write_atomic};
use emdae::manifest::Manifest;
use emdae::mna::parse_netlist;
use emdae::mtx::{read_matrix_market, write_matrix_market};
use emdae::{EnergySystem, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "emdae", version, about = "Energy-based field–circuit simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transient simulation of a netlist, optionally coupled to field models.
    Simulate(SimulateArgs),
    /// Capacitor discharging through a winding around a magnetic core.
    Oscillator(OscillatorArgs),
    /// The oscillator driven by a sinusoidal voltage source across the capacitor.
    Index2(Index2Args),
    /// Convergence orders of the time integrators on the lossless oscillator.
    Convergence(ConvergenceArgs),
    /// Checks the structure of a saved system directory.
    Validate(ValidateArgs),
    /// Assembles field matrices of a geometry and writes a conductor model directory.
    ExportMatrices(ExportArgs),
    /// Writes a random foil model for a given conductivity matrix.
    SynthFoil(SynthFoilArgs),
    /// Re-runs a command from the run manifest it wrote.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub netlist: PathBuf,
    /// Field model directory, as NAME=DIR. Repeatable.
    #[arg(long = "model", value_name = "NAME=DIR")]
    pub models: Vec<String>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tend: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OscillatorArgs {
    #[arg(long, default_value = "stranded")]
    pub conductor: ConductorKind,
    /// Core conductivity 100 S/m instead of 0.
    #[arg(long)]
    pub conductive_core: bool,
    /// Include the DC resistance of the stranded winding.
    #[arg(long)]
    pub wire_resistance: bool,
    #[arg(long, default_value = "trapezoidal")]
    pub method: Method,
    #[arg(long, default_value_t = 0.1e-6)]
    pub tau: f64,
    #[arg(long, default_value_t = 50e-6)]
    pub tend: f64,
    /// Mesh size in metres.
    #[arg(long, default_value_t = 1e-3)]
    pub mesh_h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i0: f64,
    #[arg(long, default_value_t = 100e-6)]
    pub capacitance: f64,
    /// Geometry file; the built-in layout when omitted.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Write every state component instead of φ and i only.
    #[arg(long)]
    pub full_state: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Index2Args {
    #[command(flatten)]
    pub base: OscillatorArgs,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 50e3)]
    pub freq: f64,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    /// Comma-separated method tags.
    #[arg(long, value_delimiter = ',', default_value = "implicit_euler,trapezoidal,bdf2,gauss4,radau5")]
    pub methods: Vec<Method>,
    /// Comma-separated step sizes in seconds.
    #[arg(long, value_delimiter = ',', default_value = "0.8e-6,0.4e-6,0.2e-6,0.1e-6,0.05e-6")]
    pub taus: Vec<f64>,
    #[arg(long, default_value_t = 50e-6)]
    pub tend: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub mesh_h: f64,
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    pub geometry: PathBuf,
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub mesh_h: f64,
    #[arg(long, default_value = "stranded")]
    pub conductor: ConductorKind,
    #[arg(long)]
    pub conductive_core: bool,
    #[arg(long)]
    pub wire_resistance: bool,
}

#[derive(Args, Debug)]
pub struct SynthFoilArgs {
    /// Matrix Market file with the conductivity matrix.
    pub m_sigma: PathBuf,
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub np: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// `run.manifest` written by an earlier run.
    pub manifest: PathBuf,
    #[arg(long, default_value = "replay")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Oscillator(a) => cmd_oscillator(&a),
        Command::Index2(a) => cmd_index2(&a),
        Command::Convergence(a) => cmd_convergence(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::ExportMatrices(a) => cmd_export(&a),
        Command::SynthFoil(a) => cmd_synth_foil(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| emdae_io_error(path, e))
}

fn emdae_io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Trajectory table with the energy columns and the selected states. Port
/// outputs are reported with flipped sign: the voltage across each current
/// source (`V(name)`) and the current through each voltage source
/// (`Isrc(name)`).
fn trajectory_csv(sys: &EnergySystem, tr: &Trajectory, states: Option<&[(usize, &str)]>) -> String {
    let labels = sys.state_labels();
    let cols: Vec<(usize, String)> = match states {
        Some(s) => s.iter().map(|(k, l)| (*k, l.to_string())).collect(),
        None => labels.iter().cloned().enumerate().collect(),
    };
    let mut s = String::from("t,H,D_cum,E_in");
    for (_, l) in &cols {
        s.push(',');
        s.push_str(l);
    }
    if states.is_none() {
        for p in sys.port_labels() {
            s.push(',');
            match (p.strip_prefix("I("), p.strip_prefix("V(")) {
                (Some(rest), _) => {
                    let _ = write!(s, "V({rest}");
                }
                (_, Some(rest)) => {
                    let _ = write!(s, "Isrc({rest}");
                }
                _ => {
                    let _ = write!(s, "y_{p}");
                }
            }
        }
    }
    s.push('\n');
    for k in 0..tr.len() {
        let _ = write!(
            s,
            "{},{},{},{}",
            fmt_f64(tr.times[k]),
            fmt_f64(tr.hamiltonians[k]),
            fmt_f64(tr.dissipated_cum[k]),
            fmt_f64(tr.supplied_cum[k])
        );
        for (c, _) in &cols {
            s.push(',');
            s.push_str(&fmt_f64(tr.states[k][*c]));
        }
        if states.is_none() {
            for y in &tr.outputs[k] {
                s.push(',');
                s.push_str(&fmt_f64(-y));
            }
        }
        s.push('\n');
    }
    s
}

fn write_manifest(out: &Path, man: &Manifest) -> Result<()> {
    write(&out.join("run.manifest"), &man.to_text())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let text = read_text(&a.netlist)?;
    let nl = parse_netlist(&text)?;
    let mut conductors = Vec::new();
    let mut model_entries = Vec::new();
    for spec in &a.models {
        let (name, dir) = spec
            .split_once('=')
            .ok_or_else(|| Error::Model(format!("--model expects NAME=DIR, got '{spec}'")))?;
        let dir = std::fs::canonicalize(dir).map_err(|e| emdae_io_error(Path::new(dir), e))?;
        conductors.push(NamedConductor {
            name: name.to_string(),
            model: ConductorModel::load_dir(&dir)?,
        });
        model_entries.push(format!("{name}={}", dir.display()));
    }
    let method = a.method.or(nl.method).unwrap_or(Method::Trapezoidal);
    let (tau, tend) = match (a.tau, a.tend, nl.tran) {
        (Some(t), Some(e), _) => (t, e),
        (t, e, Some((nt, ne))) => (t.unwrap_or(nt), e.unwrap_or(ne)),
        _ => return Err(Error::Model("time grid missing: give .tran in the netlist or --tau and --tend".into())),
    };
    let model = CircuitModel::new(nl, conductors)?;
    let sys = &model.coupled.system;
    let z0 = model.initial_state()?;
    let tr = simulate(sys, &z0, &model.input, tau, tend, method)?;

    std::fs::create_dir_all(&a.out).map_err(|e| emdae_io_error(&a.out, e))?;
    write(&a.out.join("circuit.net"), &text)?;
    write(&a.out.join("trajectory.csv"), &trajectory_csv(sys, &tr, None))?;
    write(&a.out.join("energy.gp"), &energy_plot_script("trajectory.csv", "energy balance"))?;
    let mut man = Manifest::new();
    man.set("command", "simulate");
    man.set("netlist", "circuit.net");
    man.set("models", model_entries.join(","));
    man.set("method", method);
    man.set("tau", fmt_f64(tau));
    man.set("t_end", fmt_f64(tend));
    man.set("steps", tr.len() - 1);
    write_manifest(&a.out, &man)?;
    let h0 = tr.hamiltonians[0];
    let k = tr.len() - 1;
    println!(
        "simulated {} steps with {method}; H(0) = {:.6e}, H(end) = {:.6e}, balance defect = {:.3e}",
        k,
        h0,
        tr.hamiltonians[k],
        (tr.hamiltonians[k] - h0 + tr.dissipated_cum[k] - tr.supplied_cum[k]).abs()
    );
    Ok(())
}

fn config_of(a: &OscillatorArgs) -> Result<(OscillatorConfig, String)> {
    let geometry = match &a.geometry {
        Some(p) => read_text(p)?,
        None => OSCILLATOR_GEOMETRY.to_string(),
    };
    let cfg = OscillatorConfig {
        conductor: a.conductor,
        core_conductive: a.conductive_core,
        wire_resistance: a.wire_resistance,
        capacitance: a.capacitance,
        v0: a.v0,
        i0: a.i0,
        tau: a.tau,
        t_end: a.tend,
        method: a.method,
        mesh_h: a.mesh_h,
        geometry: geometry.clone(),
    };
    cfg.check()?;
    Ok((cfg, geometry))
}

fn oscillator_columns(model: &OscillatorModel) -> Vec<(usize, &'static str)> {
    let mut cols = vec![(model.phi, "phi")];
    if let Some(c) = model.current {
        cols.push((c, "i"));
    }
    cols
}

fn oscillator_manifest(command: &str, a: &OscillatorArgs, cfg: &OscillatorConfig) -> Manifest {
    let mut man = Manifest::new();
    man.set("command", command);
    for (k, v) in cfg.manifest_entries() {
        man.set(&k, v);
    }
    man.set("geometry", "geometry.geom");
    man.set("full_state", a.full_state);
    man
}

fn write_oscillator_outputs(out: &Path, a: &OscillatorArgs, model: &OscillatorModel, tr: &Trajectory, geometry: &str) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| emdae_io_error(out, e))?;
    let sys = &model.circuit.coupled.system;
    let cols = oscillator_columns(model);
    let csv = trajectory_csv(sys, tr, if a.full_state { None } else { Some(&cols) });
    write(&out.join("geometry.geom"), geometry)?;
    write(&out.join("trajectory.csv"), &csv)?;
    write(&out.join("energy.gp"), &energy_plot_script("trajectory.csv", "oscillator energy"))
}

fn cmd_oscillator(a: &OscillatorArgs) -> Result<()> {
    let (cfg, geometry) = config_of(a)?;
    let (model, tr, rep) = run_oscillator(&cfg)?;
    write_oscillator_outputs(&a.out, a, &model, &tr, &geometry)?;
    write(&a.out.join("summary.txt"), &rep.to_text())?;
    write_manifest(&a.out, &oscillator_manifest("oscillator", a, &cfg))?;
    print!("{}", rep.to_text());
    Ok(())
}

fn cmd_index2(a: &Index2Args) -> Result<()> {
    let (mut cfg, geometry) = config_of(&a.base)?;
    cfg.v0 = a.base.v0;
    let (model, tr, rep) = run_index2(&cfg, a.amplitude, a.freq)?;
    write_oscillator_outputs(&a.base.out, &a.base, &model, &tr, &geometry)?;
    write(&a.base.out.join("summary.txt"), &rep.to_text())?;
    let mut man = oscillator_manifest("index2", &a.base, &cfg);
    man.set("amplitude", fmt_f64(a.amplitude));
    man.set("freq", fmt_f64(a.freq));
    write_manifest(&a.base.out, &man)?;
    if let Some(w) = &rep.warning {
        eprintln!("warning: {w}");
    }
    print!("{}", rep.to_text());
    Ok(())
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<()> {
    let geometry = match &a.geometry {
        Some(p) => read_text(p)?,
        None => OSCILLATOR_GEOMETRY.to_string(),
    };
    let cfg = OscillatorConfig {
        t_end: a.tend,
        mesh_h: a.mesh_h,
        geometry: geometry.clone(),
        ..OscillatorConfig::default()
    };
    let study = run_convergence(&cfg, &a.methods, &a.taus)?;
    std::fs::create_dir_all(&a.out).map_err(|e| emdae_io_error(&a.out, e))?;
    write(&a.out.join("geometry.geom"), &geometry)?;
    write(&a.out.join("convergence.csv"), &study.to_csv())?;
    write(&a.out.join("slopes.txt"), &study.fits_text())?;
    write(&a.out.join("convergence.gp"), &convergence_plot_script("convergence.csv", &a.methods))?;
    let mut man = Manifest::new();
    man.set("command", "convergence");
    man.set("methods", a.methods.iter().map(|m| m.tag()).collect::<Vec<_>>().join(","));
    man.set("taus", a.taus.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(","));
    man.set("t_end", fmt_f64(a.tend));
    man.set("horizon", fmt_f64(study.horizon));
    man.set("mesh_h", fmt_f64(a.mesh_h));
    man.set("geometry", "geometry.geom");
    man.set("inductance", fmt_f64(study.inductance));
    write_manifest(&a.out, &man)?;
    print!("{}{}", study.to_csv(), study.fits_text());
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let sys = EnergySystem::load_dir(&a.dir)?;
    let rep = sys.validate(a.tol, a.tol)?;
    println!("{}", sys.partition());
    println!("{rep}");
    rep.into_result().map(|_| ())
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let geometry = read_text(&a.geometry)?;
    let cfg = OscillatorConfig {
        conductor: a.conductor,
        core_conductive: a.conductive_core,
        wire_resistance: a.wire_resistance,
        mesh_h: a.mesh_h,
        geometry: geometry.clone(),
        ..OscillatorConfig::default()
    };
    let model = emdae::experiments::build_oscillator(&cfg, None)?;
    let conductor = &model.circuit.conductors[0];
    conductor.model.save_dir(&a.out)?;
    write(&a.out.join("mesh.txt"), &model.field.mesh.to_text())?;
    model.circuit.coupled.conductors[0].save_dir(&a.out.join("system"))?;
    let mesh = &model.field.mesh;
    println!(
        "wrote {} model: {} nodes, {} triangles, {} free dofs",
        conductor.model.kind(),
        mesh.nodes.len(),
        mesh.triangles.len(),
        model.field.n_free()
    );
    Ok(())
}

fn cmd_synth_foil(a: &SynthFoilArgs) -> Result<()> {
    let m = read_matrix_market(&a.m_sigma)?;
    let foil = synth_foil(&m, a.np, a.seed)?;
    ConductorModel::Foil(foil).save_dir(&a.out)?;
    let mut man = Manifest::new();
    man.set("command", "synth-foil");
    man.set("np", a.np);
    man.set("seed", a.seed);
    write(&a.out.join("run.manifest"), &man.to_text())?;
    write_matrix_market(&a.out.join("source_M_sigma.mtx"), &m)?;
    println!("wrote foil model with {} polynomial coefficients (seed {})", a.np, a.seed);
    Ok(())
}

fn parse_field<T: std::str::FromStr>(man: &Manifest, key: &str) -> Result<T> {
    let v = man.require(key)?;
    v.parse()
        .map_err(|_| Error::Model(format!("manifest value '{v}' for '{key}' is malformed")))
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let man = Manifest::parse(&read_text(&a.manifest)?)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let command = man.require("command")?;
    match command {
        "oscillator" | "index2" => {
            let osc = OscillatorArgs {
                conductor: parse_field(&man, "conductor")?,
                conductive_core: parse_field(&man, "core_conductive")?,
                wire_resistance: parse_field(&man, "wire_resistance")?,
                method: parse_field(&man, "method")?,
                tau: parse_field(&man, "tau")?,
                tend: parse_field(&man, "t_end")?,
                mesh_h: parse_field(&man, "mesh_h")?,
                v0: parse_field(&man, "v0")?,
                i0: parse_field(&man, "i0")?,
                capacitance: parse_field(&man, "capacitance")?,
                geometry: Some(base.join(man.require("geometry")?)),
                full_state: parse_field(&man, "full_state")?,
                out: a.out.clone(),
            };
            if command == "oscillator" {
                cmd_oscillator(&osc)
            } else {
                cmd_index2(&Index2Args {
                    base: osc,
                    amplitude: parse_field(&man, "amplitude")?,
                    freq: parse_field(&man, "freq")?,
                })
            }
        }
        "convergence" => {
            let list = |key: &str| -> Vec<String> { man.get(key).unwrap_or("").split(',').map(str::to_string).collect() };
            let methods = list("methods")
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<Method>>>()?;
            let taus = list("taus")
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Model(format!("malformed step '{t}'"))))
                .collect::<Result<Vec<f64>>>()?;
            cmd_convergence(&ConvergenceArgs {
                methods,
                taus,
                tend: parse_field(&man, "t_end")?,
                mesh_h: parse_field(&man, "mesh_h")?,
                geometry: Some(base.join(man.require("geometry")?)),
                out: a.out.clone(),
            })
        }
        "simulate" => {
            let models = man
                .get("models")
                .unwrap_or("")
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            cmd_simulate(&SimulateArgs {
                netlist: base.join(man.require("netlist")?),
                models,
                method: Some(parse_field(&man, "method")?),
                tau: Some(parse_field(&man, "tau")?),
                tend: Some(parse_field(&man, "t_end")?),
                out: a.out.clone(),
            })
        }
        other => Err(Error::Model(format!("manifest command '{other}' cannot be replayed"))),
    }
}
