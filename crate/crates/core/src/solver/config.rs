use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MAX_DEGREE;

/// Curving parameters. Every field has a default, so a TOML file only needs
/// the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub degree: usize,
    /// Boundary tolerance, relative to the characteristic length.
    pub boundary_tolerance: f64,
    /// Tolerance on the infinity norm of the gradient.
    pub residual_tolerance: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    /// Experimental: jump straight to a predicted penalty parameter.
    pub penalty_predictor: bool,
    pub max_penalty_stages: usize,
    pub max_newton_iterations: usize,
    pub armijo_slope: f64,
    pub backtracking_factor: f64,
    pub max_backtracks: usize,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
    pub forcing_max: f64,
    pub forcing_theta: f64,
    pub forcing_gamma: f64,
    pub forcing_min: f64,
    pub sor_sweeps: usize,
    pub sor_omega: f64,
    pub freeze_problematic: bool,
    /// Minimum angle between two boundary curves sharing a triangle.
    pub tangency_threshold_deg: f64,
    /// Curve degree by degree from 2 up to `degree`.
    pub p_continuation: bool,
    /// Polynomial exactness of the solver quadrature; `None` uses `2q`.
    pub quadrature_exactness: Option<usize>,
    /// Added to the solver exactness for quality evaluation.
    pub quality_exactness_increment: usize,
    /// Exactness of the boundary deviation integral is `2q + boundary_exactness_offset`.
    pub boundary_exactness_offset: usize,
    /// Determinant regularization; zero keeps the exact rectifier.
    pub delta: f64,
    /// Subdivision level of the scaled-Jacobian sample lattice.
    pub jacobian_sample_level: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            boundary_tolerance: 1e-12,
            residual_tolerance: 1e-8,
            initial_penalty: 1.0,
            penalty_growth: 10.0,
            penalty_predictor: false,
            max_penalty_stages: 30,
            max_newton_iterations: 50,
            armijo_slope: 1e-4,
            backtracking_factor: 0.5,
            max_backtracks: 40,
            gmres_restart: 50,
            gmres_max_iterations: 500,
            forcing_max: 0.1,
            forcing_theta: 1.0,
            forcing_gamma: 1.5,
            forcing_min: 1e-10,
            sor_sweeps: 1,
            sor_omega: 1.0,
            freeze_problematic: true,
            tangency_threshold_deg: 5.0,
            p_continuation: true,
            quadrature_exactness: None,
            quality_exactness_increment: 4,
            boundary_exactness_offset: 2,
            delta: 0.0,
            jacobian_sample_level: 4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("solver config: {m}")));
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return Err(Error::UnsupportedDegree(self.degree));
        }
        for (name, v) in [
            ("boundary_tolerance", self.boundary_tolerance),
            ("residual_tolerance", self.residual_tolerance),
            ("initial_penalty", self.initial_penalty),
            ("armijo_slope", self.armijo_slope),
            ("forcing_max", self.forcing_max),
            ("forcing_theta", self.forcing_theta),
            ("forcing_min", self.forcing_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.penalty_growth > 1.0) {
            return bad("penalty_growth must exceed 1");
        }
        if !(self.backtracking_factor > 0.0 && self.backtracking_factor < 1.0) {
            return bad("backtracking_factor must lie in (0, 1)");
        }
        if self.armijo_slope >= 1.0 {
            return bad("armijo_slope must be below 1");
        }
        if !(self.sor_omega > 0.0 && self.sor_omega < 2.0) {
            return bad("sor_omega must lie in (0, 2)");
        }
        if self.gmres_restart == 0 || self.gmres_max_iterations == 0 {
            return bad("GMRES iteration limits must be positive");
        }
        if self.max_penalty_stages == 0 {
            return bad("max_penalty_stages must be positive");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be nonnegative");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("solver config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Self = toml::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn solver_exactness(&self, q: usize) -> usize {
        self.quadrature_exactness.unwrap_or(2 * q)
    }

    pub fn quality_exactness(&self, q: usize) -> usize {
        self.solver_exactness(q) + self.quality_exactness_increment
    }

    pub fn boundary_exactness(&self, q: usize) -> usize {
        2 * q + self.boundary_exactness_offset
    }
}
