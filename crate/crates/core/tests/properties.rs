mod common;

use emdae::integrators::{simulate, step_midpoint, InputSignal, Method, Waveform};
use emdae::interconnect::{interconnect, split_state, InterconnectionSpec};
use emdae::mna::{build_incidence, mna_system, parse_netlist, parse_value};
use emdae::mtx::{parse_matrix_market, to_matrix_market};
use emdae::SparseMat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn midpoint_step_never_creates_energy(seed in any::<u64>(), tau in 1e-3f64..1.0) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let p = sys.partition();
        let mut z = common::random_vec(&mut r, p.n());
        for _ in 0..10 {
            let u = common::random_vec(&mut r, p.m);
            let h0 = sys.hamiltonian(&z).unwrap();
            let (z1, y) = step_midpoint(&sys, &z, &u, tau).unwrap();
            let h1 = sys.hamiltonian(&z1).unwrap();
            let supply: f64 = y.iter().zip(&u).map(|(a, b)| a * b).sum();
            prop_assert!(h1 - h0 - tau * supply <= 1e-10 * (1.0 + h0.abs()));
            z = z1;
        }
    }

    #[test]
    fn trapezoidal_balance_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let p = sys.partition();
        let z0 = common::random_vec(&mut r, p.n());
        let u = InputSignal::new((0..p.m).map(|_| Waveform::Constant(r.random_range(-1.0..1.0))).collect());
        let tr = simulate(&sys, &z0, &u, 0.05, 1.0, Method::Trapezoidal).unwrap();
        let h0 = tr.hamiltonians[0];
        for k in 1..tr.len() {
            let d = tr.hamiltonians[k] + tr.dissipated_cum[k] - tr.supplied_cum[k] - h0;
            let scale = 1.0 + tr.hamiltonians[k].abs() + tr.supplied_cum[k].abs() + tr.dissipated_cum[k].abs();
            prop_assert!(d.abs() <= 1e-9 * scale, "defect {d} at step {k}");
        }
    }

    #[test]
    fn interconnection_preserves_structure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = common::random_system(&mut r);
        let b = common::random_system(&mut r);
        let m = a.partition().m + b.partition().m;
        let rank = r.random_range(1..=m);
        let spec = InterconnectionSpec::new(common::skew(&mut r, m), common::gram(&mut r, m, rank, 0.0)).unwrap();
        let c = interconnect(&a, &b, &spec).unwrap();
        let rep = c.validate(1e-10, 1e-10).unwrap();
        prop_assert!(rep.ok, "{rep}");
        let z = common::random_vec(&mut r, c.partition().n());
        let (za, zb) = split_state(a.partition(), b.partition(), &z);
        let parts = a.hamiltonian(&za).unwrap() + b.hamiltonian(&zb).unwrap();
        let h = c.hamiltonian(&z).unwrap();
        prop_assert!((h - parts).abs() <= 1e-13 * h.abs().max(1e-300));
    }

    #[test]
    fn mna_systems_validate(seed in any::<u64>(), nodes in 1usize..8, extra in 0usize..10) {
        let mut r = rng(seed);
        let text = common::random_netlist(&mut r, nodes, extra, true);
        let nl = parse_netlist(&text).unwrap();
        let sys = mna_system(&build_incidence(&nl).unwrap()).unwrap();
        let rep = sys.validate(1e-10, 1e-10).unwrap();
        prop_assert!(rep.ok, "{rep}");
        prop_assert_eq!(sys.j().skew_defect(), 0.0);
    }

    #[test]
    fn netlist_round_trip(seed in any::<u64>(), nodes in 1usize..8, extra in 0usize..10) {
        let mut r = rng(seed);
        let nl = parse_netlist(&common::random_netlist(&mut r, nodes, extra, true)).unwrap();
        let text = nl.to_text();
        let again = parse_netlist(&text).unwrap();
        prop_assert_eq!(again.to_text(), text);
        prop_assert_eq!(again.elements.len(), nl.elements.len());
        prop_assert_eq!(again.nodes, nl.nodes);
    }

    #[test]
    fn parse_value_reads_printed_floats(v in -1e30f64..1e30) {
        prop_assert_eq!(parse_value(&format!("{v:e}")), Some(v));
        prop_assert_eq!(parse_value(&format!("{v}")), Some(v));
    }

    #[test]
    fn parser_never_panics(text in "[RCLVIF.#0-9a-z() \n]{0,200}") {
        let _ = parse_netlist(&text);
    }

    #[test]
    fn matrix_market_round_trip(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
        let mut r = rng(seed);
        let m = SparseMat::from_fn(rows, cols, |_, _| {
            if r.random_bool(0.4) { r.random_range(-1e6..1e6) } else { 0.0 }
        });
        let back = parse_matrix_market(&to_matrix_market(&m)).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        prop_assert_eq!(back.sub(&m).max_abs(), 0.0);
    }

    #[test]
    fn matrix_market_parser_never_panics(text in "[%0-9a-zA-Z .e\n-]{0,200}") {
        let _ = parse_matrix_market(&text);
    }
}
