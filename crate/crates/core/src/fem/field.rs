use super::assembly::{assemble_k_nu, assemble_m_sigma, MaterialMap};
use super::dirichlet::DofMap;
use super::mesh::Mesh;
use super::pseudo::check_pencil;
use crate::error::{Error, Result};
use crate::linalg::SparseMat;

/// Assembled and Dirichlet-reduced field matrices of one mesh.
#[derive(Clone, Debug)]
pub struct FieldMatrices {
    pub mesh: Mesh,
    pub materials: MaterialMap,
    pub dofs: DofMap,
    pub k_nu: SparseMat,
    pub m_sigma: SparseMat,
}

impl FieldMatrices {
    pub fn assemble(mesh: Mesh, materials: MaterialMap) -> Result<Self> {
        mesh.validate()?;
        let dofs = DofMap::from_mesh(&mesh);
        if dofs.n_free() == 0 {
            return Err(Error::Model("mesh has no free degrees of freedom".into()));
        }
        let k_nu = dofs.reduce_matrix(&assemble_k_nu(&mesh, &materials)?);
        let m_sigma = dofs.reduce_matrix(&assemble_m_sigma(&mesh, &materials)?);
        if !check_pencil(&m_sigma, &k_nu) {
            return Err(Error::Singular {
                context: "field pencil λM_σ + K_ν".into(),
                step: None,
            });
        }
        Ok(FieldMatrices {
            mesh,
            materials,
            dofs,
            k_nu,
            m_sigma,
        })
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }
}
