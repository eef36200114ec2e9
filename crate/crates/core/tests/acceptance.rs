//! Acceptance checks 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use emdae::conductors::{
    foil_from_solid, foil_system, solid_from_field, solid_system, stranded_from_field, stranded_system, synth_foil,
    ConductorKind, FoilModel, SolidModel,
};
use emdae::experiments::{
    build_oscillator, oscillator_field, run_convergence, run_index2, run_oscillator, OscillatorConfig,
};
use emdae::fem::{element_mass, element_stiffness, Mesh, NodeTag};
use emdae::integrators::{simulate, step_midpoint, Method};
use emdae::linalg::min_sym_eig_on_support;
use emdae::mna::{build_incidence, mna_system, parse_netlist};
use emdae::{EnergySystem, Error, SparseMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Error>;

const TOL: f64 = 1e-10;

fn cfg(conductor: ConductorKind, method: Method) -> OscillatorConfig {
    OscillatorConfig {
        conductor,
        method,
        ..OscillatorConfig::default()
    }
}

fn lossless_energy() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [Method::Trapezoidal, Method::Midpoint, Method::Gauss4] {
        let (_, _, r) = run_oscillator(&cfg(ConductorKind::Stranded, m))?;
        ok &= r.steps == 500 && r.max_energy_drift <= 1e-10;
        detail.push(format!("{m} drift {:.2e}", r.max_energy_drift));
    }
    let (_, _, r) = run_oscillator(&cfg(ConductorKind::Stranded, Method::ImplicitEuler))?;
    ok &= r.h_strictly_decreasing && r.total_decay >= 1e-4;
    detail.push(format!(
        "implicit_euler decreasing={} decay {:.2e}",
        r.h_strictly_decreasing, r.total_decay
    ));
    Ok((ok, detail.join(", ")))
}

fn dissipative_balance() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [ConductorKind::Stranded, ConductorKind::Solid] {
        let mut c = cfg(kind, Method::Trapezoidal);
        c.core_conductive = true;
        let (_, _, trap) = run_oscillator(&c)?;
        c.method = Method::ImplicitEuler;
        let (_, _, euler) = run_oscillator(&c)?;
        ok &= trap.max_balance_defect <= 1e-8 && euler.final_balance_defect >= 10.0 * 1e-8;
        detail.push(format!(
            "{kind}: trapezoidal max {:.2e}, implicit_euler final {:.2e}",
            trap.max_balance_defect, euler.final_balance_defect
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn midpoint_dissipation_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for _ in 0..100 {
        let sys = common::random_system(&mut rng);
        sys.check()?;
        let p = sys.partition();
        let tau = rng.random_range(0.01..0.5);
        let mut z = common::random_vec(&mut rng, p.n());
        let mut h = sys.hamiltonian(&z)?;
        for _ in 0..50 {
            let u = common::random_vec(&mut rng, p.m);
            let (z1, y) = step_midpoint(&sys, &z, &u, tau)?;
            let h1 = sys.hamiltonian(&z1)?;
            let lhs = h1 - h - tau * y.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            let rel = lhs / (1.0 + h.abs());
            worst = worst.max(rel);
            if rel > 1e-10 {
                failures += 1;
            }
            z = z1;
            h = h1;
            steps += 1;
        }
    }
    Ok((failures == 0, format!("{steps} steps, {failures} failures, worst {worst:.2e}")))
}

fn convergence_orders() -> Outcome {
    let methods = [
        (Method::ImplicitEuler, 1.0, 0.25),
        (Method::Trapezoidal, 2.0, 0.25),
        (Method::Bdf2, 2.0, 0.25),
        (Method::Gauss4, 4.0, 0.7),
        (Method::Radau5, 5.0, 0.7),
    ];
    let taus = [0.8e-6, 0.4e-6, 0.2e-6, 0.1e-6, 0.05e-6];
    let ms: Vec<Method> = methods.iter().map(|m| m.0).collect();
    let st = run_convergence(&OscillatorConfig::default(), &ms, &taus)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (m, want, band) in methods {
        match st.fit(m) {
            Some(f) => {
                ok &= (f.slope - want).abs() <= band;
                detail.push(format!("{m} {:.2} ({} pts)", f.slope, f.taus.len()));
            }
            None => {
                ok = false;
                detail.push(format!("{m} no fit"));
            }
        }
    }
    for m in [Method::Trapezoidal, Method::Gauss4] {
        let eps_h = st.rows.iter().filter(|r| r.method == m).fold(0.0f64, |a, r| a.max(r.eps_h));
        ok &= eps_h <= 1e-12;
        detail.push(format!("{m} eps_H {eps_h:.1e}"));
    }
    Ok((ok, detail.join(", ")))
}

fn index2_balance() -> Outcome {
    let mut c = cfg(ConductorKind::Stranded, Method::Trapezoidal);
    c.v0 = 0.0;
    let (_, _, trap) = run_index2(&c, 1.0, 50e3)?;
    c.method = Method::ImplicitEuler;
    let (_, _, euler) = run_index2(&c, 1.0, 50e3)?;
    let ok = trap.final_defect <= 1e-8 * trap.scale && euler.final_defect >= 10.0 * trap.final_defect;
    Ok((
        ok,
        format!(
            "trapezoidal {:.2e}, implicit_euler {:.2e}, scale {:.2e}",
            trap.final_defect, euler.final_defect, trap.scale
        ),
    ))
}

/// Each constructor output must validate; returns the worst check margin
/// seen so failures are reported by name.
fn validated(sys: &EnergySystem, what: &str, bad: &mut Vec<String>) {
    match sys.validate(TOL, TOL) {
        Ok(r) if r.ok => {}
        Ok(r) => bad.push(format!("{what}: {:?}", r.failure)),
        Err(e) => bad.push(format!("{what}: {e}")),
    }
}

fn rel_diff(a: &SparseMat, b: &SparseMat) -> f64 {
    a.sub(b).max_abs() / a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE)
}

fn solid_factor_defect(m: &SolidModel) -> Result<f64, Error> {
    let sys = solid_system(m)?;
    let f = m.factor();
    Ok(rel_diff(sys.r(), &f.transpose().matmul(&m.m_sigma).matmul(&f)))
}

/// Relative smallest eigenvalue and relative size of the Schur complement.
fn foil_schur(m: &FoilModel) -> Result<(f64, f64), Error> {
    let s = m.schur_complement()?;
    let scale = m.g.max_abs().max(f64::MIN_POSITIVE);
    let lo = min_sym_eig_on_support(&s, 0.0)?;
    Ok((lo / scale, s.max_abs() / scale))
}

fn structural_checks() -> Outcome {
    let mut bad = Vec::new();
    let mut factor_worst = 0.0f64;
    let mut schur_worst = 0.0f64;
    let mut additivity_worst = 0.0f64;

    // Fixtures from the oscillator geometry, with and without core losses.
    for conductive in [false, true] {
        let mut c = OscillatorConfig::default();
        c.core_conductive = conductive;
        let (geom, field) = oscillator_field(&c)?;
        let turns = geom.turns_of("coil").unwrap_or(1.0);
        let st = stranded_from_field(&field, "coil", turns, Some(58e6))?;
        validated(&stranded_system(&st)?, "fixture stranded", &mut bad);
        c.conductor = ConductorKind::Solid;
        let (_, field) = oscillator_field(&c)?;
        let so = solid_from_field(&field, "coil")?;
        validated(&solid_system(&so)?, "fixture solid", &mut bad);
        factor_worst = factor_worst.max(solid_factor_defect(&so)?);
        let fo = foil_from_solid(&so)?;
        validated(&foil_system(&fo)?, "fixture foil", &mut bad);
        let (lo, size) = foil_schur(&fo)?;
        schur_worst = schur_worst.max(size);
        if lo < -TOL {
            bad.push(format!("fixture foil Schur eigenvalue {lo:.2e}"));
        }
        let synth = synth_foil(&field.m_sigma, 2, 11)?;
        validated(&foil_system(&synth)?, "fixture synthetic foil", &mut bad);
        for kind in ConductorKind::ALL {
            c.conductor = kind;
            let model = build_oscillator(&c, None)?;
            validated(&model.circuit.coupled.system, &format!("fixture coupled {kind}"), &mut bad);
        }
    }
    for path in corpus("valid") {
        let text = fs::read_to_string(&path).expect("corpus file");
        if text.lines().next().is_some_and(|l| l.contains(" mna")) {
            let nl = parse_netlist(&text)?;
            validated(&mna_system(&build_incidence(&nl)?)?, &format!("fixture mna {}", path.display()), &mut bad);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..100 {
        let st = common::random_stranded(&mut rng);
        validated(&stranded_system(&st)?, &format!("random stranded {k}"), &mut bad);
        let so = common::random_solid(&mut rng);
        validated(&solid_system(&so)?, &format!("random solid {k}"), &mut bad);
        factor_worst = factor_worst.max(solid_factor_defect(&so)?);
        let fo = common::random_foil(&mut rng);
        validated(&foil_system(&fo)?, &format!("random foil {k}"), &mut bad);
        let (lo, _) = foil_schur(&fo)?;
        if lo < -TOL {
            bad.push(format!("random foil {k} Schur eigenvalue {lo:.2e}"));
        }
        let nodes = rng.random_range(1..8);
        let extra = rng.random_range(0..8);
        let nl = parse_netlist(&common::random_netlist(&mut rng, nodes, extra, true))?;
        validated(&mna_system(&build_incidence(&nl)?)?, &format!("random mna {k}"), &mut bad);

        let cm = common::random_coupled(&mut rng);
        let sys = &cm.coupled.system;
        validated(sys, &format!("random coupled {k}"), &mut bad);
        let z = common::random_vec(&mut rng, sys.partition().n());
        let h = sys.hamiltonian(&z)?;
        let parts = cm.coupled.hamiltonian_of_parts(&z)?;
        additivity_worst = additivity_worst.max((h - parts).abs() / h.abs().max(f64::MIN_POSITIVE));
    }
    if factor_worst > 1e-12 {
        bad.push(format!("solid factorization defect {factor_worst:.2e}"));
    }
    if schur_worst > 1e-12 {
        bad.push(format!("solid-equivalent foil Schur complement {schur_worst:.2e}"));
    }
    if additivity_worst > 1e-13 {
        bad.push(format!("Hamiltonian additivity {additivity_worst:.2e}"));
    }
    let detail = format!(
        "factorization {factor_worst:.1e}, Schur {schur_worst:.1e}, additivity {additivity_worst:.1e}{}",
        if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
    );
    Ok((bad.is_empty(), detail))
}

fn foil_solid_equivalence() -> Outcome {
    let mut traj = Vec::new();
    let mut traj_dims = Vec::new();
    for kind in [ConductorKind::Solid, ConductorKind::Foil] {
        let c = cfg(kind, Method::Trapezoidal);
        let model = build_oscillator(&c, None)?;
        let cm = &model.circuit;
        let tr = simulate(&cm.coupled.system, &cm.initial_state()?, &cm.input, c.tau, c.t_end, c.method)?;
        let n_w = model.field.n_free();
        traj_dims.push(cm.coupled.system.partition().n());
        let rows: Vec<Vec<f64>> = tr
            .states
            .iter()
            .map(|z| {
                let mut v = cm.coupled.conductor_state(0, z)[..n_w].to_vec();
                v.push(z[model.phi]);
                v
            })
            .collect();
        traj.push(rows);
    }
    let (a, b) = (&traj[0], &traj[1]);
    let n = a[0].len();
    let mut worst = 0.0f64;
    for j in 0..n {
        let scale = a.iter().fold(0.0f64, |m, r| m.max(r[j].abs()));
        if scale == 0.0 {
            continue;
        }
        for (ra, rb) in a.iter().zip(b) {
            worst = worst.max((ra[j] - rb[j]).abs() / scale);
        }
    }
    let phi_max = a.iter().fold(0.0f64, |m, r| m.max(r[n - 1].abs()));
    let dims = (traj_dims[0], traj_dims[1]);
    Ok((
        a.len() == 501 && worst <= 1e-10 && phi_max > 0.0,
        format!(
            "{} steps, state sizes {} and {}, max |phi| {phi_max:.2e}, max relative difference {worst:.2e}",
            a.len() - 1,
            dims.0,
            dims.1
        ),
    ))
}

fn frequency() -> Outcome {
    let (_, _, r) = run_oscillator(&OscillatorConfig::default())?;
    match (r.omega_expected, r.omega_measured) {
        (Some(e), Some(m)) => {
            let rel = (m - e).abs() / e;
            Ok((rel <= 1e-3, format!("expected {e:.6e}, measured {m:.6e}, relative {rel:.1e}")))
        }
        _ => Ok((false, "frequency not measurable".into())),
    }
}

/// Reference element integrals written directly on the unit triangle with
/// the tabulated degree-five rule; the mass matrix uses exact monomial
/// integrals since its integrand is a cubic.
struct Oracle {
    p: [(f64, f64); 3],
}

impl Oracle {
    const POINTS: [(f64, f64, f64); 7] = [
        (0.333333333333333333, 0.333333333333333333, 0.225),
        (0.101286507323456339, 0.101286507323456339, 0.125939180544827153),
        (0.797426985353087322, 0.101286507323456339, 0.125939180544827153),
        (0.101286507323456339, 0.797426985353087322, 0.125939180544827153),
        (0.470142064105115090, 0.470142064105115090, 0.132394152788506181),
        (0.059715871789769820, 0.470142064105115090, 0.132394152788506181),
        (0.470142064105115090, 0.059715871789769820, 0.132394152788506181),
    ];

    fn jac(&self) -> (f64, [[f64; 2]; 2]) {
        let [p0, p1, p2] = self.p;
        let (a, b, c, d) = (p1.0 - p0.0, p2.0 - p0.0, p1.1 - p0.1, p2.1 - p0.1);
        let det = a * d - b * c;
        (det, [[d / det, -b / det], [-c / det, a / det]])
    }

    fn stiffness(&self, nu: f64) -> [[f64; 3]; 3] {
        let (det, inv) = self.jac();
        // reference gradients of 1−ξ−η, ξ, η mapped to (∂r, ∂z)
        let gref = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];
        let g: Vec<(f64, f64)> = gref
            .iter()
            .map(|&(gx, ge)| (inv[0][0] * gx + inv[1][0] * ge, inv[0][1] * gx + inv[1][1] * ge))
            .collect();
        let mut k = [[0.0; 3]; 3];
        for (xi, eta, w) in Self::POINTS {
            let n = [1.0 - xi - eta, xi, eta];
            let r: f64 = (0..3).map(|i| n[i] * self.p[i].0).sum();
            let jw = w * 0.5 * det.abs();
            for i in 0..3 {
                for j in 0..3 {
                    let br = (g[i].0 + n[i] / r) * (g[j].0 + n[j] / r);
                    k[i][j] += 2.0 * PI * nu * jw * r * (g[i].1 * g[j].1 + br);
                }
            }
        }
        k
    }

    fn mass(&self, sigma: f64) -> [[f64; 3]; 3] {
        let (det, _) = self.jac();
        let area = 0.5 * det.abs();
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for (l, pl) in self.p.iter().enumerate() {
                    let mut e = [0u32; 3];
                    e[i] += 1;
                    e[j] += 1;
                    e[l] += 1;
                    let mono = 2.0 * area * e.iter().map(|&x| fact(x)).product::<f64>() / fact(5);
                    m[i][j] += 2.0 * PI * sigma * pl.0 * mono;
                }
            }
        }
        m
    }
}

fn max_rel(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
}

fn fe_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_k = 0.0f64;
    let mut worst_m = 0.0f64;
    let mut count = 0;
    while count < 50 {
        let p: [(f64, f64); 3] = std::array::from_fn(|_| (rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)));
        let mut oracle = Oracle { p };
        let (det, _) = oracle.jac();
        if det.abs() < 1e-2 || p.iter().filter(|q| q.0 < 1e-3).count() > 1 {
            continue;
        }
        if det < 0.0 {
            oracle.p.swap(1, 2);
        }
        count += 1;
        let mesh = Mesh {
            nodes: oracle.p.to_vec(),
            node_tags: vec![NodeTag::Interior; 3],
            triangles: vec![[0, 1, 2]],
            tri_region: vec![0],
            regions: vec!["tri".into()],
        };
        let nu = rng.random_range(1.0..1e6);
        let sigma: f64 = rng.random_range(1.0..1e7);
        worst_k = worst_k.max(max_rel(&oracle.stiffness(nu), &element_stiffness(&mesh, 0, nu)?));
        worst_m = worst_m.max(max_rel(&oracle.mass(sigma), &element_mass(&mesh, 0, sigma)));
    }
    let mut c = OscillatorConfig::default();
    c.core_conductive = true;
    c.conductor = ConductorKind::Solid;
    let (_, field) = oscillator_field(&c)?;
    let (k, m) = (&field.k_nu, &field.m_sigma);
    let sym = (k.sym_defect() / k.max_abs()).max(m.sym_defect() / m.max_abs());
    let k_eig = min_sym_eig_on_support(k, 0.0)? / k.max_abs();
    let m_eig = min_sym_eig_on_support(m, 0.0)? / m.max_abs();
    let ok = worst_k <= 1e-13 && worst_m <= 1e-13 && sym <= 1e-14 && k_eig >= -1e-10 && m_eig >= -1e-10;
    Ok((
        ok,
        format!(
            "element K {worst_k:.1e}, element M {worst_m:.1e}, symmetry {sym:.1e}, min eig K {k_eig:.1e}, M {m_eig:.1e}"
        ),
    ))
}

fn corpus(sub: &str) -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/netlists").join(sub);
    let mut v: Vec<_> = fs::read_dir(dir)
        .expect("corpus directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "cir"))
        .collect();
    v.sort();
    v
}

/// `key=value` fields of the first-line annotation; `msg` runs to the end.
fn annotation(text: &str, key: &str) -> Option<String> {
    let first = text.lines().next()?;
    let at = first.find(&format!("{key}="))? + key.len() + 1;
    let rest = &first[at..];
    Some(if key == "msg" { rest.trim().to_string() } else { rest.split_whitespace().next()?.to_string() })
}

fn parser_corpus() -> Outcome {
    let valid = corpus("valid");
    let invalid = corpus("invalid");
    let mut bad = Vec::new();
    for p in &valid {
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(p).expect("read");
        let want: usize = annotation(&text, "elements").and_then(|s| s.parse().ok()).expect("annotation");
        match parse_netlist(&text) {
            Ok(nl) => {
                if nl.elements.len() != want {
                    bad.push(format!("{name}: {} elements, expected {want}", nl.elements.len()));
                }
                let printed = nl.to_text();
                match parse_netlist(&printed) {
                    Ok(again) => {
                        let strip = |mut n: emdae::mna::Netlist| {
                            n.elements.iter_mut().for_each(|e| e.line = 0);
                            n
                        };
                        if strip(again.clone()) != strip(nl) || again.to_text() != printed {
                            bad.push(format!("{name}: round trip differs"));
                        }
                    }
                    Err(e) => bad.push(format!("{name}: reprint fails to parse: {e}")),
                }
            }
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    for p in &invalid {
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(p).expect("read");
        let line: usize = annotation(&text, "line").and_then(|s| s.parse().ok()).expect("annotation");
        let col: usize = annotation(&text, "col").and_then(|s| s.parse().ok()).expect("annotation");
        let msg = annotation(&text, "msg").expect("annotation");
        match parse_netlist(&text) {
            Err(Error::Parse { message, location }) => {
                if location.line != line || location.column != col || !message.contains(&msg) {
                    bad.push(format!("{name}: got '{message}' at {location}, expected '{msg}' at {line}:{col}"));
                }
            }
            Err(e) => bad.push(format!("{name}: non-parse error {e}")),
            Ok(_) => bad.push(format!("{name}: accepted")),
        }
    }
    let ok = valid.len() >= 30 && invalid.len() >= 20 && bad.is_empty();
    Ok((ok, format!("{} valid, {} invalid{}", valid.len(), invalid.len(), if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) })))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "lossless energy conservation", lossless_energy),
        (2, "dissipative energy balance", dissipative_balance),
        (3, "midpoint dissipation inequality on random systems", midpoint_dissipation_inequality),
        (4, "convergence orders", convergence_orders),
        (5, "index-2 energy balance", index2_balance),
        (6, "structure of constructed systems", structural_checks),
        (7, "foil and solid equivalence", foil_solid_equivalence),
        (8, "oscillation frequency", frequency),
        (9, "finite element oracle", fe_oracle),
        (10, "netlist parser corpus", parser_corpus),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name} ({detail}) [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
