//! Linear elliptic machinery on P1 triangulations.

pub mod boundary;
pub mod dirichlet;
pub mod fem;
pub mod io;
pub mod sparse;

pub use boundary::{boundary_density, outward_normal, tangent, BoundaryFunction, DEFAULT_NF};
pub use dirichlet::{boundary_weights, dn_matrix, norm_a, DirichletSolver, DnMatrix};
pub use fem::{assemble_operator, assemble_with, load_vector, schrodinger_flat, tri_geometry, Operator, QpCoef, TriGeom, QP_BARY};
pub use sparse::{Csr, SkylineLdl};

/// Nodal real field.
pub type Field = Vec<f64>;
