//! Random instances shared by the integration tests.
#![allow(dead_code)]

use emdae::conductors::{synth_foil, FoilModel, SolidModel, StrandedModel};
use emdae::{Blocks, EnergySystem, Partition, SparseMat};
use rand::Rng;

pub fn dense(rng: &mut impl Rng, rows: usize, cols: usize) -> SparseMat {
    SparseMat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn skew(rng: &mut impl Rng, n: usize) -> SparseMat {
    let a = dense(rng, n, n);
    a.sub(&a.transpose())
}

/// `GᵀG` with `G` of `rank` rows, plus `shift·I`.
pub fn gram(rng: &mut impl Rng, n: usize, rank: usize, shift: f64) -> SparseMat {
    let g = dense(rng, rank, n);
    g.transpose().matmul(&g).add(&SparseMat::identity(n).scale(shift)).symmetric_part()
}

/// Symmetric PSD matrix supported on a random subset of the indices.
pub fn partial_psd(rng: &mut impl Rng, n: usize) -> SparseMat {
    let support: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
    let k = support.len();
    if k == 0 {
        return SparseMat::zeros(n, n);
    }
    let rank = rng.random_range(1..=k);
    gram(rng, k, rank, 0.0).scatter(n, n, &support, &support)
}

/// Sparse symmetric positive definite stiffness-like matrix.
pub fn spd_banded(rng: &mut impl Rng, n: usize) -> SparseMat {
    let off: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
    SparseMat::from_fn(n, n, |i, j| {
        if i == j {
            2.5 + rng.random_range(0.0..1.0)
        } else if j == i + 1 {
            off[i]
        } else if i == j + 1 {
            off[j]
        } else {
            0.0
        }
    })
}

/// Random system with the required structure. `E = S⁻¹M2` with diagonal
/// positive `S`, so that `EᵀS = M2`.
pub fn random_system(rng: &mut impl Rng) -> EnergySystem {
    let n1 = rng.random_range(0..4);
    let n2 = rng.random_range(1..5);
    let n3 = rng.random_range(0..3);
    let m = rng.random_range(1..4);
    let n = n1 + n2 + n3;
    let m2 = gram(rng, n2, n2, 0.1);
    let s_diag: Vec<f64> = (0..n2).map(|_| rng.random_range(0.5..2.0)).collect();
    let s = SparseMat::from_diag(&s_diag);
    let s_inv = SparseMat::from_diag(&s_diag.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let rank = rng.random_range(1..=n);
    EnergySystem::new(
        Partition::new(n1, n2, n3, m),
        Blocks {
            e: s_inv.matmul(&m2),
            j: skew(rng, n),
            r: gram(rng, n, rank, 0.05),
            b: dense(rng, n, m),
            m1: gram(rng, n1, n1, 0.1),
            m2,
            s,
        },
    )
    .expect("consistent shapes")
}

pub fn random_stranded(rng: &mut impl Rng) -> StrandedModel {
    let n_w = rng.random_range(3..15);
    let n_s = rng.random_range(1..4);
    let lossless = rng.random_bool(0.2);
    let m = if lossless { SparseMat::zeros(n_w, n_w) } else { partial_psd(rng, n_w) };
    let r = if lossless {
        SparseMat::zeros(n_s, n_s)
    } else {
        let rank = rng.random_range(1..=n_s);
        gram(rng, n_s, rank, 0.0)
    };
    StrandedModel::new(m, spd_banded(rng, n_w), dense(rng, n_w, n_s), r).expect("valid stranded model")
}

pub fn random_solid(rng: &mut impl Rng) -> SolidModel {
    let n_w = rng.random_range(3..15);
    let n_s = rng.random_range(1..4);
    SolidModel::new(partial_psd(rng, n_w), spd_banded(rng, n_w), dense(rng, n_w, n_s)).expect("valid solid model")
}

pub fn random_foil(rng: &mut impl Rng) -> FoilModel {
    let n_w = rng.random_range(3..15);
    let n_p = rng.random_range(1..4);
    let seed = rng.random();
    let mut f = synth_foil(&partial_psd(rng, n_w), n_p, seed).expect("valid foil model");
    f.k_nu = spd_banded(rng, n_w);
    f
}

/// Random netlist text over nodes `1..=nodes`. Every node gets a branch
/// to ground or to an earlier node, so none floats.
pub fn random_netlist(rng: &mut impl Rng, nodes: usize, extra: usize, with_sources: bool) -> String {
    let kinds: &[char] = if with_sources { &['R', 'C', 'L', 'V', 'I'] } else { &['R', 'C', 'L'] };
    let mut pairs: Vec<(usize, usize)> = (1..=nodes).map(|k| (k, rng.random_range(0..k))).collect();
    while pairs.len() < nodes + extra {
        let a = rng.random_range(1..=nodes);
        let b = rng.random_range(0..=nodes);
        if a != b {
            pairs.push((a, b));
        }
    }
    let mut s = String::new();
    for (n, (a, b)) in pairs.into_iter().enumerate() {
        let k = kinds[rng.random_range(0..kinds.len())];
        let v: f64 = rng.random_range(0.1..10.0);
        let value = match k {
            'V' | 'I' if rng.random_bool(0.5) => format!("SIN 0 {v} 1k"),
            'V' | 'I' => format!("DC {v}"),
            _ => format!("{v}"),
        };
        s.push_str(&format!("{k}{} {a} {b} {value}\n", n + 1));
    }
    s
}

/// Random circuit coupled to one stranded, one solid and one foil model.
/// Each conductor port sits on its own node with a capacitor to ground and a
/// resistor back to node 1.
pub fn random_coupled(rng: &mut impl Rng) -> emdae::experiments::CircuitModel {
    use emdae::conductors::ConductorModel;
    use emdae::coupling::NamedConductor;

    let nodes = rng.random_range(1..5);
    let extra = rng.random_range(0..4);
    let mut text = random_netlist(rng, nodes, extra, true);
    let models = [
        ConductorModel::Stranded(random_stranded(rng)),
        ConductorModel::Solid(random_solid(rng)),
        ConductorModel::Foil(random_foil(rng)),
    ];
    let mut next = nodes + 1;
    for (k, m) in models.iter().enumerate() {
        for col in 0..m.n_ports() {
            let n = next;
            next += 1;
            text.push_str(&format!("P{k}_{col} {n} 0 {} m{k} {col}\n", m.kind()).replacen('P', "F", 1));
            text.push_str(&format!("CP{k}_{col} {n} 0 1\nRP{k}_{col} {n} 1 2\n"));
        }
    }
    let netlist = emdae::mna::parse_netlist(&text).expect("generated netlist parses");
    let conductors = models
        .into_iter()
        .enumerate()
        .map(|(k, model)| NamedConductor { name: format!("m{k}"), model })
        .collect();
    emdae::experiments::CircuitModel::new(netlist, conductors).expect("coupled model builds")
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
