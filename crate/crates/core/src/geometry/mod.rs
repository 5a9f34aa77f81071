//! Domains, meshes, metric families and their s-jets.

pub mod mesh;
pub mod metric;
pub mod tensor;

pub use mesh::{build_mesh, BoundaryLoop, Domain, Mesh, Orientation, MAX_LEVEL};
pub use metric::{
    check_minimality, metric_jets, Affine, ExpFamily, Jets, Mat2, MetricFamily, MinimalityReport,
    NumericFamily,
};
pub use tensor::TensorField2;
