use super::mesh::{Mesh, NodeTag};
use crate::linalg::SparseMat;

/// Retained (free) node indices after removing outer-boundary and axis nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub free: Vec<usize>,
    pub n_full: usize,
}

impl DofMap {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let free = (0..mesh.nodes.len())
            .filter(|&k| mesh.node_tags[k] == NodeTag::Interior)
            .collect();
        DofMap {
            free,
            n_full: mesh.nodes.len(),
        }
    }

    pub fn from_constrained(n_full: usize, constrained: &[usize]) -> Self {
        let mut keep = vec![true; n_full];
        constrained.iter().for_each(|&k| keep[k] = false);
        DofMap {
            free: (0..n_full).filter(|&k| keep[k]).collect(),
            n_full,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn reduce_matrix(&self, m: &SparseMat) -> SparseMat {
        m.select(&self.free, &self.free)
    }

    pub fn reduce_vector(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| v[k]).collect()
    }

    /// Zero-extends a reduced vector to all nodes.
    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }
}

/// Removes the rows and columns of constrained nodes (homogeneous Dirichlet).
pub fn apply_dirichlet(m: &SparseMat, mesh: &Mesh) -> (SparseMat, DofMap) {
    let map = DofMap::from_mesh(mesh);
    (map.reduce_matrix(m), map)
}
