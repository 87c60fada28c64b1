//! Fill-reducing orderings, spectral coordinates and separator partitioning.

mod coords;
mod graph;
mod nd;
mod partition;
mod spectral;

pub use coords::Coordinates;
pub use graph::Graph;
pub use nd::{nested_dissection, nested_dissection_with, NdOptions, NestedDissection, NodeKind, SepNode, SeparatorMethod, SeparatorTree};
pub use partition::{partition_separator, BlockTreeShape, ShapeNode};
pub use spectral::{laplacian_eigenvectors, spectral_coordinates, LaplacianEigen, SpectralOptions};
