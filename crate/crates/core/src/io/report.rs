//! Curving report: quality histograms, accuracy, trace summary and timings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accuracy::{accuracy, AccuracyReport};
use crate::distortion::{mesh_quality, ElementQuality};
use crate::error::{Error, Result};
use crate::geometry::GeometryModel;
use crate::mesh::{BoundaryClassification, HighOrderMesh};
use crate::solver::{CurvingResult, DegreeSummary, FrozenSet, SolverConfig, StageSummary};

pub const HISTOGRAM_BINS: usize = 20;

/// Labels of the accuracy rows, in output order.
pub const ACCURACY_LABELS: [&str; 6] = ["SC", "SC/ℓ_c", "d₂", "d₂/ℓ_c", "d∞", "d∞/ℓ_c"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
    /// Counts span orders of magnitude; plot on a log axis.
    pub log_scale: bool,
}

impl Histogram {
    /// Equal bins over `[lower, upper]`; values outside are clamped into the
    /// end bins so every value is counted.
    pub fn new(values: impl IntoIterator<Item = f64>, lower: f64, upper: f64, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        for v in values {
            let t = ((v - lower) / (upper - lower) * bins as f64).floor();
            let i = if t.is_nan() { 0 } else { t.clamp(0.0, (bins - 1) as f64) as usize };
            counts[i] += 1;
        }
        Self {
            lower,
            upper,
            counts,
            log_scale: true,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        let w = (self.upper - self.lower) / self.counts.len() as f64;
        (self.lower + w * i as f64, self.lower + w * (i + 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementValue {
    pub element: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub elements: usize,
    pub shape_histogram: Histogram,
    pub scaled_jacobian_histogram: Histogram,
    pub min_shape_quality: ElementValue,
    pub mean_shape_quality: f64,
    pub min_scaled_jacobian: ElementValue,
    pub mean_scaled_jacobian: f64,
    pub invalid_elements: Vec<usize>,
}

impl QualitySummary {
    pub fn from_qualities(q: &[ElementQuality]) -> Self {
        let min_by = |f: fn(&ElementQuality) -> f64| {
            q.iter().fold(
                ElementValue {
                    element: 0,
                    value: f64::INFINITY,
                },
                |m, e| if f(e) < m.value { ElementValue { element: e.element, value: f(e) } } else { m },
            )
        };
        let n = q.len().max(1) as f64;
        Self {
            elements: q.len(),
            shape_histogram: Histogram::new(q.iter().map(|e| e.shape_quality), 0.0, 1.0, HISTOGRAM_BINS),
            scaled_jacobian_histogram: Histogram::new(q.iter().map(|e| e.scaled_jacobian), 0.0, 1.0, HISTOGRAM_BINS),
            min_shape_quality: min_by(|e| e.shape_quality),
            mean_shape_quality: q.iter().map(|e| e.shape_quality).sum::<f64>() / n,
            min_scaled_jacobian: min_by(|e| e.scaled_jacobian),
            mean_scaled_jacobian: q.iter().map(|e| e.scaled_jacobian).sum::<f64>() / n,
            invalid_elements: q.iter().filter(|e| !e.is_valid()).map(|e| e.element).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshMetadata {
    pub degree: usize,
    pub vertices: usize,
    pub nodes: usize,
    pub elements: usize,
    pub boundary_faces: usize,
    pub characteristic_length: f64,
    /// Free-text description of the boundary-layer family of the input.
    pub yplus_label: String,
}

impl MeshMetadata {
    pub fn of(mesh: &HighOrderMesh, yplus_label: &str) -> Self {
        Self {
            degree: mesh.degree(),
            vertices: mesh.num_vertices(),
            nodes: mesh.num_nodes(),
            elements: mesh.num_elements(),
            boundary_faces: mesh.faces().len(),
            characteristic_length: mesh.characteristic_length(),
            yplus_label: yplus_label.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub degrees: Vec<DegreeSummary>,
    pub stages: Vec<StageSummary>,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvingReport {
    pub metadata: MeshMetadata,
    pub config: SolverConfig,
    pub converged: bool,
    pub quality: QualitySummary,
    pub accuracy: AccuracyReport,
    pub trace: TraceSummary,
    pub problems: FrozenSet,
    pub low_precision_nodes: Vec<usize>,
    pub timings: Vec<PhaseTime>,
}

/// Quality and accuracy metrics of a curved mesh. `curve` and `check` both
/// go through here, so their numbers agree.
pub fn measure(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
    config: &SolverConfig,
) -> Result<(Vec<ElementQuality>, QualitySummary, AccuracyReport)> {
    let q = mesh.degree();
    let qualities = mesh_quality(mesh, config.quality_exactness(q), config.jacobian_sample_level)?;
    let summary = QualitySummary::from_qualities(&qualities);
    let acc = accuracy(
        mesh,
        model,
        classification,
        config.quality_exactness(q),
        config.jacobian_sample_level,
    )?;
    Ok((qualities, summary, acc))
}

impl CurvingReport {
    pub fn new(
        mesh: &HighOrderMesh,
        quality: QualitySummary,
        accuracy: AccuracyReport,
        config: &SolverConfig,
        result: Option<&CurvingResult>,
        yplus_label: &str,
    ) -> Self {
        let trace = result.map_or_else(TraceSummary::default, |r| TraceSummary {
            degrees: r.degrees.clone(),
            stages: r.trace.stages.clone(),
            newton_iterations: r.trace.entries.len(),
        });
        Self {
            metadata: MeshMetadata::of(mesh, yplus_label),
            config: config.clone(),
            converged: result.is_none_or(|r| r.converged),
            quality,
            accuracy,
            trace,
            problems: result.map(|r| r.frozen.clone()).unwrap_or_default(),
            low_precision_nodes: result.map(|r| r.low_precision_nodes.clone()).unwrap_or_default(),
            timings: Vec::new(),
        }
    }

    pub fn add_timing(&mut self, phase: &str, seconds: f64) {
        self.timings.push(PhaseTime {
            phase: phase.to_string(),
            seconds,
        });
    }

    pub fn accuracy_rows(&self) -> [(&'static str, f64); 6] {
        let a = &self.accuracy;
        let v = [a.sc, a.sc_relative, a.d2, a.d2_relative, a.dinf, a.dinf_relative];
        std::array::from_fn(|i| (ACCURACY_LABELS[i], v[i]))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report: {e}")))
    }

    /// Table with columns `section,label,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fmt = |v: f64| serde_json::to_string(&v).unwrap_or_else(|_| "null".into());
        let mut row = |section: &str, label: &str, value: String| w.write_record([section, label, &value]);
        let io = |e: csv::Error| Error::Internal(e.to_string());
        row("section", "label", "value".into()).map_err(io)?;
        for (label, v) in self.accuracy_rows() {
            row("accuracy", label, fmt(v)).map_err(io)?;
        }
        for (name, h) in [
            ("shape_quality_histogram", &self.quality.shape_histogram),
            ("scaled_jacobian_histogram", &self.quality.scaled_jacobian_histogram),
        ] {
            for (i, c) in h.counts.iter().enumerate() {
                let (lo, hi) = h.bin_range(i);
                row(name, &format!("[{lo:.2},{hi:.2})"), c.to_string()).map_err(io)?;
            }
        }
        let q = &self.quality;
        row("quality", "min_shape_quality", fmt(q.min_shape_quality.value)).map_err(io)?;
        row("quality", "min_shape_quality_element", q.min_shape_quality.element.to_string()).map_err(io)?;
        row("quality", "mean_shape_quality", fmt(q.mean_shape_quality)).map_err(io)?;
        row("quality", "min_scaled_jacobian", fmt(q.min_scaled_jacobian.value)).map_err(io)?;
        row("quality", "min_scaled_jacobian_element", q.min_scaled_jacobian.element.to_string()).map_err(io)?;
        row("quality", "mean_scaled_jacobian", fmt(q.mean_scaled_jacobian)).map_err(io)?;
        row("quality", "invalid_elements", q.invalid_elements.len().to_string()).map_err(io)?;
        row("mesh", "characteristic_length", fmt(self.metadata.characteristic_length)).map_err(io)?;
        for s in &self.trace.stages {
            let key = format!("q{}.stage{}", s.degree, s.stage);
            row("trace", &format!("{key}.mu"), fmt(s.mu)).map_err(io)?;
            row("trace", &format!("{key}.newton_iterations"), s.newton_iterations.to_string()).map_err(io)?;
            row("trace", &format!("{key}.gradient_inf"), fmt(s.gradient_inf)).map_err(io)?;
            row("trace", &format!("{key}.boundary_error"), fmt(s.boundary_error)).map_err(io)?;
        }
        for t in &self.timings {
            row("timing", &t.phase, fmt(t.seconds)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Writes `<stem>.json` and `<stem>.csv` next to `path`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = path.with_extension("json");
        let csv = path.with_extension("csv");
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&csv, self.to_csv()?).map_err(|e| Error::io(&csv, e))
    }
}
