//! Reference elements, quadrature and mesh containers.

pub mod high_order;
pub mod linear;
pub mod quadrature;
pub mod reference;

pub use high_order::{BoundaryFace, HighOrderMesh};
pub use linear::{BoundaryClass, BoundaryClassification, BoundaryTriangle, LinearMesh};
pub use quadrature::{quadrature, QuadratureRule};
pub use reference::{BasisEval, ReferenceSimplex, Tabulation, MAX_DEGREE};
