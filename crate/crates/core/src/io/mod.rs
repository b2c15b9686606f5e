//! File formats, reports and visualization output.

pub mod msh;
pub mod report;
pub mod vtu;

use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::BoundaryClassification;

pub use msh::{format_msh41, read_high_order_mesh, read_linear_mesh, write_linear_msh41, write_msh41};
pub use report::{measure, CurvingReport, Histogram, QualitySummary, ACCURACY_LABELS};
pub use vtu::{format_vtu, write_vtu};

/// Reads a JSON document with integer arrays `wall`, `symmetry`, `farfield`.
pub fn read_classification(path: &Path) -> Result<BoundaryClassification> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_classification(classification: &BoundaryClassification, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(classification).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
