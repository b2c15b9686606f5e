//! Virtual geometry: analytic patches grouped into virtual surfaces and
//! curves, with the closest-point projections used by the boundary condition.

pub mod classify;
pub mod model;
pub mod patch;

pub use classify::{
    classify_boundary_nodes, face_surfaces, project_targets, NodeTarget, NodeTargets, TargetSnapshot,
};
pub use model::{
    project_to_curve, project_to_surface, CurveProjection, GeometryModel, MarkMapping, VirtualCurve,
    VirtualSurface,
};
pub use patch::{Projection, SurfacePatch, Trim};
