//! Energy-based descriptor models for coupled eddy-current fields and
//! electrical circuits, with structure-preserving time integration.

pub mod conductors;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod integrators;
pub mod interconnect;
pub mod io;
pub mod linalg;
pub mod manifest;
pub mod mna;
pub mod mtx;
pub mod system;

pub use error::{Error, Result};
pub use linalg::SparseMat;
pub use system::{Blocks, EnergySystem, Partition, ValidationReport};
