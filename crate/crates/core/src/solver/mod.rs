//! Curving driver: penalty continuation, fixed point on the boundary
//! snapshot, Newton with backtracking and preconditioned GMRES.

pub mod config;
pub mod curve;
pub mod gmres;
pub mod newton;
pub mod precond;
pub mod problematic;

pub use config::SolverConfig;
pub use curve::{
    curve_high_order, curve_mesh, degree_schedule, distortion_of, penalty_loop, ConvergenceTrace, CurvingResult,
    DegreeSummary, PenaltyOutcome, StageSummary, TraceEntry,
};
pub use gmres::{gmres, GmresOutcome, Identity};
pub use newton::{linear_tolerance, newton_solve, Direction, NewtonOutcome, NewtonStatus, NewtonStep};
pub use precond::BlockSsor;
pub use problematic::{detect_problematic_configurations, FrozenSet, Problem, ProblemKind};
