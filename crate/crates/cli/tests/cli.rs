use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn emdae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emdae")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn geometry() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/oscillator.geom")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn oscillator_writes_outputs_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = emdae(&["oscillator", "--tend", "5e-6", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["run.manifest", "geometry.geom", "trajectory.csv", "energy.gp", "summary.txt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("max_energy_drift"));

    let again = dir.path().join("again");
    let o = emdae(&["replay", s(&out.join("run.manifest")), "--out", s(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(out.join("trajectory.csv")).unwrap(),
        fs::read(again.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn exported_system_validates_and_corruption_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("coil");
    let o = emdae(&["export-matrices", s(&geometry()), s(&model), "--mesh-h", "2e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(model.join("mesh.txt").is_file());

    let system = model.join("system");
    let o = emdae(&["validate", s(&system)]);
    assert!(o.status.success(), "{}", stderr(&o));

    // A non-zero diagonal breaks skew symmetry of J.
    let j = fs::read_to_string(system.join("J.mtx")).unwrap();
    let dims = j.lines().find(|l| !l.starts_with('%')).unwrap();
    let n: usize = dims.split_whitespace().next().unwrap().parse().unwrap();
    fs::write(
        system.join("J.mtx"),
        format!("%%MatrixMarket matrix coordinate real general\n{n} {n} 1\n1 1 1.0\n"),
    )
    .unwrap();
    let o = emdae(&["validate", s(&system)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("J (skew symmetry)"), "{}", stderr(&o));
}

#[test]
fn simulate_couples_an_exported_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("coil");
    let o = emdae(&["export-matrices", s(&geometry()), s(&model), "--mesh-h", "2e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let net = dir.path().join("osc.cir");
    fs::write(&net, "C1 1 0 100u\nF1 0 1 stranded coil 0\n.tran 0.1u 2u\n.ic V(1) 1 I(F1) 0\n").unwrap();
    let out = dir.path().join("sim");
    let model_arg = format!("coil={}", s(&model));
    let o = emdae(&["simulate", s(&net), "--model", &model_arg, "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 21);
}

#[test]
fn malformed_netlist_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("bad.cir");
    fs::write(&net, "R1 1 0 1\nC1 1 0 -2u\n").unwrap();
    let o = emdae(&["simulate", s(&net), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_with_io_code() {
    let o = emdae(&["validate", "/nonexistent/system"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn short_convergence_study_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv");
    let o = emdae(&[
        "convergence",
        "--methods",
        "implicit_euler,trapezoidal",
        "--taus",
        "0.4e-6,0.2e-6,0.1e-6",
        "--tend",
        "8e-6",
        "--mesh-h",
        "2e-3",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(fs::read_to_string(out.join("slopes.txt")).unwrap().contains("trapezoidal"));
}

#[test]
fn synthetic_foil_from_exported_mass_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("coil");
    let o = emdae(&["export-matrices", s(&geometry()), s(&model), "--mesh-h", "2e-3", "--conductor", "solid"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let foil = dir.path().join("foil");
    let o = emdae(&["synth-foil", s(&model.join("M_sigma.mtx")), s(&foil), "--np", "2", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(foil.join("manifest.txt")).unwrap().contains("foil"));
}
