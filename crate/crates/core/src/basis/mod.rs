//! Lagrange bases and the continuous spaces built from them.

pub mod lagrange;
pub mod space;

pub use lagrange::{gauss_lobatto_nodes, LagrangeBasis1d, ShapeValues, TensorBasis};
pub use space::{ConstraintSet, FESpace, FaceGeometry, SpaceVariant};
