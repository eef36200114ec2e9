//! Runs the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so the seeds stay meaningful without a nightly toolchain.

use std::fs;
use std::path::{Path, PathBuf};

use emdae::fem::{build_rect_mesh, parse_geometry, parse_mesh};
use emdae::manifest::Manifest;
use emdae::mna::{build_incidence, mna_system, parse_netlist};
use emdae::mtx::{parse_matrix_market, to_matrix_market};
use emdae::system::parse_partition;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn netlist_seeds() {
    let mut parsed = 0;
    for (_, text) in seeds("netlist") {
        let Ok(nl) = parse_netlist(&text) else { continue };
        parsed += 1;
        let printed = nl.to_text();
        assert_eq!(parse_netlist(&printed).unwrap().to_text(), printed);
        if let Ok(inc) = build_incidence(&nl) {
            let _ = mna_system(&inc);
        }
    }
    assert!(parsed > 0);
}

#[test]
fn matrix_market_seeds() {
    for (p, text) in seeds("matrix_market") {
        let m = parse_matrix_market(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parse_matrix_market(&to_matrix_market(&m)).unwrap().shape(), m.shape());
    }
}

#[test]
fn geometry_seeds() {
    for (p, text) in seeds("geometry") {
        let g = parse_geometry(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let h = (g.r_max.max(g.z_max - g.z_min) / 20.0).max(1e-6);
        let _ = build_rect_mesh(&g, h);
    }
}

#[test]
fn mesh_seeds() {
    for (p, text) in seeds("mesh") {
        let m = parse_mesh(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parse_mesh(&m.to_text()).unwrap().triangles, m.triangles);
    }
}

#[test]
fn manifest_seeds() {
    for (p, text) in seeds("manifest") {
        let m = Manifest::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
    }
}

#[test]
fn partition_seeds() {
    for (p, text) in seeds("partition") {
        parse_partition(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}
