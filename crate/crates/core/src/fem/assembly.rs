//! Element integrals for the azimuthal vector potential on linear triangles.
//!
//! All integrals carry the factor 2π r of the axisymmetric volume element and
//! use the seven-point degree-five rule, whose points are interior to the
//! triangle so 1/r stays bounded on elements touching the axis.

use std::f64::consts::PI;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::linalg::SparseMat;

/// µ0 in H/m.
pub const MU0: f64 = 4.0e-7 * PI;

/// Barycentric points and weights (summing to one) of the seven-point rule.
pub fn quadrature() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let (a1, b1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0);
    let (a2, b2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0);
    let (w1, w2) = ((155.0 - s) / 1200.0, (155.0 + s) / 1200.0);
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Per-region reluctivity ν [m/H] and conductivity σ [S/m].
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialMap {
    pub nu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MaterialMap {
    /// `f(region name) -> (ν, σ)`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&str) -> (f64, f64)) -> Result<Self> {
        let (nu, sigma): (Vec<f64>, Vec<f64>) = mesh.regions.iter().map(|r| f(r)).unzip();
        let m = MaterialMap { nu, sigma };
        m.check(mesh)?;
        Ok(m)
    }

    /// `f(region name) -> (µr, σ)` with ν = 1/(µ0 µr).
    pub fn from_relative(mesh: &Mesh, f: impl Fn(&str) -> (f64, f64)) -> Result<Self> {
        for r in &mesh.regions {
            let (mu_r, _) = f(r);
            if !(mu_r > 0.0 && mu_r.is_finite()) {
                return Err(Error::Model(format!("relative permeability of '{r}' must be positive")));
            }
        }
        Self::from_fn(mesh, |r| {
            let (mu_r, s) = f(r);
            (1.0 / (MU0 * mu_r), s)
        })
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.nu.len() != mesh.regions.len() || self.sigma.len() != mesh.regions.len() {
            return Err(Error::dim("material map", mesh.regions.len(), self.nu.len()));
        }
        for (k, r) in mesh.regions.iter().enumerate() {
            if !(self.nu[k] >= 0.0 && self.nu[k].is_finite()) {
                return Err(Error::Model(format!("reluctivity of '{r}' must be nonnegative")));
            }
            if !(self.sigma[k] >= 0.0 && self.sigma[k].is_finite()) {
                return Err(Error::Model(format!("conductivity of '{r}' must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Geometry of one triangle: vertex coordinates, area and the constant
/// gradients of the three hat functions.
struct Element {
    p: [(f64, f64); 3],
    area: f64,
    /// `(∂w/∂r, ∂w/∂z)` per vertex.
    grad: [(f64, f64); 3],
}

impl Element {
    fn new(mesh: &Mesh, t: usize) -> Self {
        let tri = mesh.triangles[t];
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let area = mesh.area(t);
        let mut grad = [(0.0, 0.0); 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grad[i] = (
                (p[j].1 - p[k].1) / (2.0 * area),
                (p[k].0 - p[j].0) / (2.0 * area),
            );
        }
        Element { p, area, grad }
    }

    fn radius(&self, l: &[f64; 3]) -> f64 {
        l[0] * self.p[0].0 + l[1] * self.p[1].0 + l[2] * self.p[2].0
    }
}

/// `2π ∫ ν [∂wi/∂z ∂wj/∂z + (∂wi/∂r + wi/r)(∂wj/∂r + wj/r)] r dA`
pub fn element_stiffness(mesh: &Mesh, t: usize, nu: f64) -> Result<[[f64; 3]; 3]> {
    let el = Element::new(mesh, t);
    let mut k = [[0.0; 3]; 3];
    for (l, w) in quadrature() {
        let r = el.radius(&l);
        if !(r > 0.0) {
            return Err(Error::Model(format!("quadrature point with r = {r} in triangle {t}")));
        }
        let f = 2.0 * PI * nu * w * el.area;
        for i in 0..3 {
            let ci = el.grad[i].0 + l[i] / r;
            for j in 0..3 {
                let cj = el.grad[j].0 + l[j] / r;
                k[i][j] += f * (el.grad[i].1 * el.grad[j].1 + ci * cj) * r;
            }
        }
    }
    Ok(k)
}

/// `2π ∫ σ wi wj r dA`
pub fn element_mass(mesh: &Mesh, t: usize, sigma: f64) -> [[f64; 3]; 3] {
    let el = Element::new(mesh, t);
    let mut m = [[0.0; 3]; 3];
    for (l, w) in quadrature() {
        let f = 2.0 * PI * sigma * w * el.area * el.radius(&l);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += f * l[i] * l[j];
            }
        }
    }
    m
}

/// `2π ∫ c wi r dA`
pub fn element_load(mesh: &Mesh, t: usize, c: f64) -> [f64; 3] {
    let el = Element::new(mesh, t);
    let mut v = [0.0; 3];
    for (l, w) in quadrature() {
        let f = 2.0 * PI * c * w * el.area * el.radius(&l);
        for i in 0..3 {
            v[i] += f * l[i];
        }
    }
    v
}

fn scatter(mesh: &Mesh, mut elem: impl FnMut(usize) -> Result<Option<[[f64; 3]; 3]>>) -> Result<SparseMat> {
    let n = mesh.nodes.len();
    let mut t = Vec::with_capacity(9 * mesh.triangles.len());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        if let Some(k) = elem(e)? {
            for i in 0..3 {
                for j in 0..3 {
                    t.push((tri[i], tri[j], k[i][j]));
                }
            }
        }
    }
    let m = SparseMat::from_triplets(n, n, t);
    // Duplicate summation order can leave round-off asymmetry; remove it.
    Ok(m.symmetric_part())
}

pub fn assemble_k_nu(mesh: &Mesh, mat: &MaterialMap) -> Result<SparseMat> {
    mat.check(mesh)?;
    scatter(mesh, |e| {
        let nu = mat.nu[mesh.tri_region[e]];
        if nu == 0.0 {
            return Ok(None);
        }
        element_stiffness(mesh, e, nu).map(Some)
    })
}

pub fn assemble_m_sigma(mesh: &Mesh, mat: &MaterialMap) -> Result<SparseMat> {
    mat.check(mesh)?;
    scatter(mesh, |e| {
        let s = mat.sigma[mesh.tri_region[e]];
        Ok((s != 0.0).then(|| element_mass(mesh, e, s)))
    })
}

fn region_index(mesh: &Mesh, region: &str) -> Result<usize> {
    let id = mesh
        .region_id(region)
        .ok_or_else(|| Error::Model(format!("unknown region '{region}'")))?;
    if mesh.region_area(id) <= 0.0 {
        return Err(Error::Model(format!("region '{region}' has no elements")));
    }
    Ok(id)
}

/// Winding column `X_i = 2π ∫_region (N_t / S) wi r dA` over all nodes.
pub fn assemble_stranded_column(mesh: &Mesh, region: &str, turns: f64) -> Result<Vec<f64>> {
    let id = region_index(mesh, region)?;
    let density = turns / mesh.region_area(id);
    let mut x = vec![0.0; mesh.nodes.len()];
    for (e, tri) in mesh.triangles.iter().enumerate() {
        if mesh.tri_region[e] == id {
            let v = element_load(mesh, e, density);
            for i in 0..3 {
                x[tri[i]] += v[i];
            }
        }
    }
    Ok(x)
}

/// Conductivity matrix with `sigma` on `region` only.
pub fn assemble_region_mass(mesh: &Mesh, region: &str, sigma: f64) -> Result<SparseMat> {
    let id = region_index(mesh, region)?;
    let mat = MaterialMap {
        nu: vec![0.0; mesh.regions.len()],
        sigma: (0..mesh.regions.len()).map(|k| if k == id { sigma } else { 0.0 }).collect(),
    };
    assemble_m_sigma(mesh, &mat)
}

/// Nodal interpolant `chi_i = 1/(2π r_i)` of the voltage distribution
/// function on the region's nodes, and `X_sol = M_σ chi`.
pub fn assemble_solid_column(mesh: &Mesh, region: &str, mat: &MaterialMap) -> Result<(Vec<f64>, Vec<f64>)> {
    let id = region_index(mesh, region)?;
    if !(mat.sigma[id] > 0.0) {
        return Err(Error::Model(format!("solid conductor '{region}' needs positive conductivity")));
    }
    let mut chi = vec![0.0; mesh.nodes.len()];
    for v in mesh.region_nodes(id) {
        let r = mesh.nodes[v].0;
        if !(r > 0.0) {
            return Err(Error::Model(format!(
                "solid conductor '{region}' touches the axis, where 1/(2πr) is singular"
            )));
        }
        chi[v] = 1.0 / (2.0 * PI * r);
    }
    let m = assemble_m_sigma(mesh, mat)?;
    Ok((m.mul_vec(&chi), chi))
}

#[cfg(test)]
mod tests {
    use super::super::mesh::{build_rect_mesh, parse_geometry};
    use super::*;

    #[test]
    fn quadrature_integrates_quintics() {
        // ∫ λ1^a λ2^b λ3^c over the reference triangle relative to its area:
        // 2 a! b! c! / (a+b+c+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        for (a, b, c) in [(5, 0, 0), (2, 2, 1), (3, 1, 1), (0, 4, 0), (1, 1, 1)] {
            let q: f64 = quadrature()
                .iter()
                .map(|(l, w)| w * l[0].powi(a) * l[1].powi(b) * l[2].powi(c))
                .sum();
            let exact = 2.0 * fact(a as u32) * fact(b as u32) * fact(c as u32) / fact((a + b + c + 2) as u32);
            assert!((q - exact).abs() < 1e-15, "{a} {b} {c}");
        }
    }

    #[test]
    fn zero_materials_give_zero_matrices() {
        let g = parse_geometry("domain 2 0 2\nrect c 1 2 0 1\n").unwrap();
        let mesh = build_rect_mesh(&g, 1e-3).unwrap();
        let mat = MaterialMap::from_fn(&mesh, |_| (0.0, 0.0)).unwrap();
        assert!(assemble_k_nu(&mesh, &mat).unwrap().is_zero());
        assert!(assemble_m_sigma(&mesh, &mat).unwrap().is_zero());
        assert!(assemble_stranded_column(&mesh, "c", 0.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_conductivity_rejected() {
        let g = parse_geometry("domain 2 0 2\n").unwrap();
        let mesh = build_rect_mesh(&g, 1e-3).unwrap();
        assert!(MaterialMap::from_fn(&mesh, |_| (1.0, -1.0)).is_err());
    }

    #[test]
    fn solid_on_axis_rejected() {
        let g = parse_geometry("domain 3 0 2\nrect c 0 1 0 1\n").unwrap();
        let mesh = build_rect_mesh(&g, 1e-3).unwrap();
        let mat = MaterialMap::from_fn(&mesh, |r| (1.0, if r == "c" { 1.0 } else { 0.0 })).unwrap();
        assert!(assemble_solid_column(&mesh, "c", &mat).is_err());
    }
}
