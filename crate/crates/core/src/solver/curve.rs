use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_boundary_nodes, project_targets, GeometryModel, NodeTargets};
use crate::mesh::{BoundaryClassification, HighOrderMesh, LinearMesh};
use crate::objective::{Discretization, DiscretizationOptions, Objective, PenaltyProblem};
use crate::solver::config::SolverConfig;
use crate::solver::newton::{newton_solve, NewtonOutcome, NewtonStatus};
use crate::solver::problematic::{detect_problematic_configurations, FrozenSet};

/// One accepted Newton step, tagged with its degree and penalty stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub degree: usize,
    pub stage: usize,
    pub iteration: usize,
    pub value: f64,
    pub gradient_inf: f64,
    /// Boundary error of the snapshot used in this stage.
    pub boundary_error: f64,
    pub mu: f64,
    pub linear_tolerance: f64,
    pub gmres_iterations: usize,
    pub step_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub degree: usize,
    pub stage: usize,
    pub mu: f64,
    pub newton_status: NewtonStatus,
    pub newton_iterations: usize,
    pub value: f64,
    pub gradient_inf: f64,
    /// Boundary error after the solve, against a rebuilt snapshot.
    pub boundary_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degree: usize,
    pub stages: usize,
    pub newton_iterations: usize,
    pub final_mu: f64,
    pub boundary_error: f64,
    pub gradient_inf: f64,
    /// Distortion part of the functional, `E / Vol`.
    pub distortion: f64,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
    pub stages: Vec<StageSummary>,
}

impl ConvergenceTrace {
    pub fn newton_iterations_at(&self, degree: usize) -> usize {
        self.entries.iter().filter(|e| e.degree == degree).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyOutcome {
    pub converged: bool,
    pub final_mu: f64,
    pub boundary_error: f64,
    pub gradient_inf: f64,
    pub distortion: f64,
    pub stages: usize,
    pub newton_iterations: usize,
    pub low_precision_nodes: Vec<usize>,
}

fn discretization(mesh: &HighOrderMesh, targets: &NodeTargets, config: &SolverConfig) -> Result<Discretization> {
    let q = mesh.degree();
    Discretization::new(
        mesh,
        targets,
        DiscretizationOptions {
            exactness: config.solver_exactness(q),
            boundary_exactness: config.boundary_exactness(q),
            delta: config.delta,
        },
    )
}

pub(crate) fn next_penalty(config: &SolverConfig, mu: f64, boundary_error: f64, tolerance: f64) -> f64 {
    if config.penalty_predictor && boundary_error.is_finite() {
        (mu * boundary_error / tolerance).clamp(config.penalty_growth * mu, 1e6 * mu)
    } else {
        mu * config.penalty_growth
    }
}

/// Solves a sequence of penalty problems at the mesh's degree, rebuilding the
/// boundary snapshot before each one, until the boundary error and residual
/// are both below tolerance.
pub fn penalty_loop(
    mesh: &mut HighOrderMesh,
    model: &GeometryModel,
    targets: &NodeTargets,
    config: &SolverConfig,
    initial_mu: f64,
    trace: &mut ConvergenceTrace,
) -> Result<PenaltyOutcome> {
    let degree = mesh.degree();
    let disc = discretization(mesh, targets, config)?;
    let tolerance = config.boundary_tolerance * mesh.characteristic_length();
    let mut x = disc.unknowns_from(mesh.nodes());
    let mut mu = initial_mu;
    let mut snapshot = project_targets(&disc.positions(&x), model, targets)?;
    let mut low_precision = snapshot.low_precision.clone();
    let mut outcome = PenaltyOutcome {
        converged: false,
        final_mu: mu,
        boundary_error: f64::INFINITY,
        gradient_inf: f64::INFINITY,
        distortion: f64::INFINITY,
        stages: 0,
        newton_iterations: 0,
        low_precision_nodes: Vec::new(),
    };
    for stage in 1..=config.max_penalty_stages {
        let stage_error = disc.boundary_error(&disc.positions(&x), &snapshot.positions);
        let problem = PenaltyProblem::new(&disc, snapshot.positions.clone(), mu)?;
        let newton: NewtonOutcome = newton_solve(&problem, &mut x, config, config.residual_tolerance);
        if newton.status == NewtonStatus::InvalidStart {
            disc.write_back(&x, mesh);
            return Err(Error::InvalidInput(format!(
                "degree {degree} mesh has a nonpositive Jacobian determinant at a quadrature point before curving"
            )));
        }
        for s in &newton.steps {
            trace.entries.push(TraceEntry {
                degree,
                stage,
                iteration: s.iteration,
                value: s.value,
                gradient_inf: s.gradient_inf,
                boundary_error: stage_error,
                mu,
                linear_tolerance: s.linear_tolerance,
                gmres_iterations: s.gmres_iterations,
                step_length: s.step_length,
            });
        }
        snapshot = project_targets(&disc.positions(&x), model, targets)?;
        low_precision.extend(&snapshot.low_precision);
        let berr = disc.boundary_error(&disc.positions(&x), &snapshot.positions);
        let converged = berr < tolerance && newton.gradient_inf < config.residual_tolerance;
        debug!(
            "q={degree} stage {stage} mu={mu:.3e} newton={} ({:?}) |g|={:.3e} boundary={:.3e}",
            newton.iterations(),
            newton.status,
            newton.gradient_inf,
            berr
        );
        trace.stages.push(StageSummary {
            degree,
            stage,
            mu,
            newton_status: newton.status,
            newton_iterations: newton.iterations(),
            value: newton.value,
            gradient_inf: newton.gradient_inf,
            boundary_error: berr,
            converged,
        });
        outcome.stages = stage;
        outcome.newton_iterations += newton.iterations();
        outcome.final_mu = mu;
        outcome.boundary_error = berr;
        outcome.gradient_inf = newton.gradient_inf;
        outcome.distortion = problem.distortion_term(&x);
        if converged {
            outcome.converged = true;
            break;
        }
        mu = next_penalty(config, mu, berr, tolerance);
    }
    disc.write_back(&x, mesh);
    low_precision.sort_unstable();
    low_precision.dedup();
    outcome.low_precision_nodes = low_precision;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct CurvingResult {
    pub mesh: HighOrderMesh,
    pub targets: NodeTargets,
    pub frozen: FrozenSet,
    pub trace: ConvergenceTrace,
    pub degrees: Vec<DegreeSummary>,
    pub converged: bool,
    pub low_precision_nodes: Vec<usize>,
}

/// Degrees visited by the curving driver.
pub fn degree_schedule(config: &SolverConfig) -> Vec<usize> {
    if config.p_continuation && config.degree > 2 {
        (2..=config.degree).collect()
    } else {
        vec![config.degree]
    }
}

/// Curves a straight-sided mesh to the configured degree.
pub fn curve_mesh(
    linear: &LinearMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
    config: &SolverConfig,
) -> Result<CurvingResult> {
    config.validate()?;
    model.validate()?;
    linear.validate()?;
    classification.validate(&linear.marks())?;
    let schedule = degree_schedule(config);
    let mut mesh = HighOrderMesh::straight(linear, schedule[0])?;
    curve_high_order(&mut mesh, model, classification, config, &schedule)
}

/// Runs the curving stages on an existing high-order mesh, elevating it
/// along `schedule`.
pub fn curve_high_order(
    mesh: &mut HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
    config: &SolverConfig,
    schedule: &[usize],
) -> Result<CurvingResult> {
    let mut trace = ConvergenceTrace::default();
    let mut degrees = Vec::new();
    let mut mu = config.initial_penalty;
    let mut converged = true;
    let mut low_precision = Vec::new();
    let mut frozen = FrozenSet::default();
    let mut targets = None;
    for &q in schedule {
        if q > mesh.degree() {
            *mesh = mesh.elevate_degree(q)?;
        }
        let mut t = classify_boundary_nodes(mesh, model, classification)?;
        frozen = detect_problematic_configurations(mesh, model, &t, config.tangency_threshold_deg);
        if !frozen.is_empty() {
            warn!("{} problematic boundary configurations", frozen.problems.len());
            if config.freeze_problematic {
                t.freeze_faces(mesh, &frozen.faces);
            }
        }
        let start = std::time::Instant::now();
        let out = penalty_loop(mesh, model, &t, config, mu, &mut trace)?;
        let seconds = start.elapsed().as_secs_f64();
        info!(
            "degree {q}: {} stages, {} Newton iterations, boundary error {:.3e}, |g| {:.3e}, {:.1}s",
            out.stages, out.newton_iterations, out.boundary_error, out.gradient_inf, seconds
        );
        low_precision = out.low_precision_nodes.clone();
        degrees.push(DegreeSummary {
            degree: q,
            stages: out.stages,
            newton_iterations: out.newton_iterations,
            final_mu: out.final_mu,
            boundary_error: out.boundary_error,
            gradient_inf: out.gradient_inf,
            distortion: out.distortion,
            converged: out.converged,
            seconds,
        });
        targets = Some(t);
        mu = out.final_mu;
        if !out.converged {
            converged = false;
            warn!("degree {q} did not converge; stopping continuation");
            break;
        }
    }
    Ok(CurvingResult {
        mesh: mesh.clone(),
        targets: targets.expect("schedule is nonempty"),
        frozen,
        trace,
        degrees,
        converged,
        low_precision_nodes: low_precision,
    })
}

/// Objective value helper used by diagnostics.
pub fn distortion_of(mesh: &HighOrderMesh, targets: &NodeTargets, config: &SolverConfig) -> Result<f64> {
    let disc = discretization(mesh, targets, config)?;
    let x = disc.unknowns_from(mesh.nodes());
    let p = PenaltyProblem::new(&disc, mesh.nodes().to_vec(), 0.0)?;
    Ok(p.value(&x))
}
