use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm, norm_inf, LinearOperator};
use crate::objective::Objective;
use crate::solver::config::SolverConfig;
use crate::solver::gmres::{gmres, Identity};
use crate::solver::precond::BlockSsor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Newton,
    PreconditionedGradient,
    Gradient,
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub value: f64,
    pub gradient_inf: f64,
    pub linear_tolerance: f64,
    pub gmres_iterations: usize,
    pub step_length: f64,
    pub direction: Direction,
    /// Accepted on gradient decrease because the Armijo decrease was below
    /// the rounding level of the objective.
    pub roundoff_accept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    IterationLimit,
    LineSearchFailed,
    /// Steps no longer change the objective beyond rounding.
    Stagnated,
    InvalidStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub status: NewtonStatus,
    pub value: f64,
    pub gradient_inf: f64,
    pub steps: Vec<NewtonStep>,
}

impl NewtonOutcome {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Forcing term for the inexact Newton solve.
pub fn linear_tolerance(config: &SolverConfig, gnorm: f64, previous: Option<f64>) -> f64 {
    match previous {
        None => config.forcing_max,
        Some(p) if p > 0.0 => (config.forcing_theta * (gnorm / p).powf(config.forcing_gamma))
            .min(config.forcing_max)
            .max(config.forcing_min),
        Some(_) => config.forcing_max,
    }
}

/// Consecutive rounding-level steps after which a solve is abandoned.
const STAGNATION_STEPS: usize = 5;

/// Rounding level of an objective value that is a long sum of terms.
fn noise(f: f64) -> f64 {
    1e-13 * f.abs().max(1.0)
}

/// Minimizes `objective` from `x` until `|grad|_inf < tolerance`.
pub fn newton_solve(objective: &dyn Objective, x: &mut [f64], config: &SolverConfig, tolerance: f64) -> NewtonOutcome {
    let n = objective.dim();
    let mut g = vec![0.0; n];
    let mut f = objective.gradient(x, &mut g);
    let mut steps = Vec::new();
    if !f.is_finite() {
        return NewtonOutcome {
            status: NewtonStatus::InvalidStart,
            value: f,
            gradient_inf: f64::INFINITY,
            steps,
        };
    }
    let mut previous_gnorm = None;
    let mut trial = vec![0.0; n];
    let mut roundoff_run = 0;
    let mut g_trial = vec![0.0; n];
    for iteration in 1..=config.max_newton_iterations + 1 {
        let ginf = norm_inf(&g);
        if ginf < tolerance {
            return NewtonOutcome {
                status: NewtonStatus::Converged,
                value: f,
                gradient_inf: ginf,
                steps,
            };
        }
        if iteration > config.max_newton_iterations {
            break;
        }
        let gnorm = norm(&g);
        let eta = linear_tolerance(config, gnorm, previous_gnorm);
        previous_gnorm = Some(gnorm);

        let h = objective.hessian(x);
        let precond: Box<dyn LinearOperator> = match objective.hessian_blocks(x) {
            Some(b) => Box::new(BlockSsor::new(b, config.sor_sweeps, config.sor_omega)),
            None => Box::new(Identity(n)),
        };
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut d = vec![0.0; n];
        let out = gmres(
            h.as_ref(),
            precond.as_ref(),
            &rhs,
            &mut d,
            eta,
            config.gmres_restart,
            config.gmres_max_iterations,
        );
        let mut direction = Direction::Newton;
        let mut slope = dot(&g, &d);
        if out.stagnated || !(slope < 0.0) || !slope.is_finite() {
            precond.apply(&rhs, &mut d);
            slope = dot(&g, &d);
            direction = Direction::PreconditionedGradient;
            if !(slope < 0.0) || !slope.is_finite() {
                d.copy_from_slice(&rhs);
                slope = -gnorm * gnorm;
                direction = Direction::Gradient;
            }
        }
        assert!(slope < 0.0, "search direction must descend");

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            for ((t, xi), di) in trial.iter_mut().zip(x.iter()).zip(&d) {
                *t = xi + alpha * di;
            }
            let ft = objective.value(&trial);
            if ft.is_finite() {
                let target = f + config.armijo_slope * alpha * slope;
                if ft <= target {
                    accepted = Some((ft, false));
                    break;
                }
                let unresolved = config.armijo_slope * alpha * slope.abs() < noise(f);
                if unresolved && ft <= f + noise(f) {
                    let fg = objective.gradient(&trial, &mut g_trial);
                    if fg.is_finite() && norm(&g_trial) < gnorm {
                        accepted = Some((ft, true));
                        break;
                    }
                }
            }
            alpha *= config.backtracking_factor;
        }
        let Some((ft, roundoff_accept)) = accepted else {
            return NewtonOutcome {
                status: NewtonStatus::LineSearchFailed,
                value: f,
                gradient_inf: ginf,
                steps,
            };
        };
        x.copy_from_slice(&trial);
        f = objective.gradient(x, &mut g);
        debug_assert!((f - ft).abs() <= noise(f));
        steps.push(NewtonStep {
            iteration,
            value: f,
            gradient_inf: norm_inf(&g),
            linear_tolerance: eta,
            gmres_iterations: out.iterations,
            step_length: alpha,
            direction,
            roundoff_accept,
        });
        roundoff_run = if roundoff_accept { roundoff_run + 1 } else { 0 };
        if roundoff_run >= STAGNATION_STEPS && norm_inf(&g) >= tolerance {
            return NewtonOutcome {
                status: NewtonStatus::Stagnated,
                value: f,
                gradient_inf: norm_inf(&g),
                steps,
            };
        }
    }
    NewtonOutcome {
        status: NewtonStatus::IterationLimit,
        value: f,
        gradient_inf: norm_inf(&g),
        steps,
    }
}
