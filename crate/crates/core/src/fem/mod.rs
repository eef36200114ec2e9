//! Axisymmetric finite elements for the eddy-current problem in the
//! azimuthal vector potential.

mod assembly;
mod dirichlet;
mod field;
mod mesh;
mod pseudo;

pub use assembly::{
    assemble_k_nu, assemble_m_sigma, assemble_region_mass, assemble_solid_column, assemble_stranded_column,
    element_load, element_mass, element_stiffness, quadrature, MaterialMap, MU0,
};
pub use dirichlet::{apply_dirichlet, DofMap};
pub use field::FieldMatrices;
pub use mesh::{build_rect_mesh, parse_geometry, parse_mesh, Geometry, Mesh, NodeTag, Rect, RegionMaterial, AIR};
pub use pseudo::{check_pencil, pseudo_solve};
