use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::patch::{v3, Projection, SurfacePatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualSurface {
    pub id: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub patches: Vec<SurfacePatch>,
}

/// Interface between two adjacent virtual surfaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualCurve {
    pub id: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkMapping {
    pub mark: u32,
    pub surface: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeometryModel {
    pub virtual_surfaces: Vec<VirtualSurface>,
    #[serde(default)]
    pub virtual_curves: Vec<VirtualCurve>,
    pub mark_map: Vec<MarkMapping>,
    #[serde(default)]
    pub fixed_vertices: Vec<[f64; 3]>,
}

impl GeometryModel {
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for s in &self.virtual_surfaces {
            if !ids.insert(s.id) {
                return Err(Error::InvalidInput(format!("duplicate virtual surface id {}", s.id)));
            }
            if s.patches.is_empty() {
                return Err(Error::InvalidInput(format!("virtual surface {} has no patches", s.id)));
            }
            for p in &s.patches {
                p.validate()?;
            }
        }
        let mut curve_ids = HashSet::new();
        for c in &self.virtual_curves {
            if !curve_ids.insert(c.id) {
                return Err(Error::InvalidInput(format!("duplicate virtual curve id {}", c.id)));
            }
            if c.left == c.right {
                return Err(Error::InvalidInput(format!("virtual curve {} joins a surface to itself", c.id)));
            }
            for s in [c.left, c.right] {
                if !ids.contains(&s) {
                    return Err(Error::Lookup {
                        kind: "virtual surface",
                        id: s,
                    });
                }
            }
        }
        let mut marks = HashSet::new();
        for m in &self.mark_map {
            if !marks.insert(m.mark) {
                return Err(Error::InvalidInput(format!("mark {} mapped twice", m.mark)));
            }
            if !ids.contains(&m.surface) {
                return Err(Error::Lookup {
                    kind: "virtual surface",
                    id: m.surface,
                });
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("geometry model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn surface(&self, id: usize) -> Result<&VirtualSurface> {
        self.virtual_surfaces
            .iter()
            .find(|s| s.id == id)
            .ok_or(Error::Lookup {
                kind: "virtual surface",
                id,
            })
    }

    pub fn curve(&self, id: usize) -> Result<&VirtualCurve> {
        self.virtual_curves.iter().find(|c| c.id == id).ok_or(Error::Lookup {
            kind: "virtual curve",
            id,
        })
    }

    /// Virtual surface approximated by boundary faces with `mark`.
    pub fn surface_for_mark(&self, mark: u32) -> Option<usize> {
        self.mark_map.iter().find(|m| m.mark == mark).map(|m| m.surface)
    }

    /// Curve joining surfaces `a` and `b`, in either order.
    pub fn curve_between(&self, a: usize, b: usize) -> Option<usize> {
        self.virtual_curves
            .iter()
            .find(|c| (c.left == a && c.right == b) || (c.left == b && c.right == a))
            .map(|c| c.id)
    }

    /// Nearest point over all patches of a virtual surface; ties go to the
    /// lowest patch index.
    pub fn project_to_virtual_surface(&self, surface: usize, x: &[f64; 3]) -> Result<Projection> {
        Ok(project_to_surface(self.surface(surface)?, x))
    }

    /// Average of the two composed surface projections.
    pub fn project_to_virtual_curve(&self, curve: usize, x: &[f64; 3]) -> Result<CurveProjection> {
        let c = self.curve(curve)?;
        let s1 = self.surface(c.left)?;
        let s2 = self.surface(c.right)?;
        Ok(project_to_curve(s1, s2, x))
    }
}

const MAX_CURVE_ITERATIONS: usize = 50;

pub fn project_to_surface(surface: &VirtualSurface, x: &[f64; 3]) -> Projection {
    let mut best: Option<(f64, Projection)> = None;
    for patch in &surface.patches {
        let p = patch.project(x);
        let d = (v3(&p.point) - v3(x)).norm_squared();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, p));
        }
    }
    best.expect("virtual surfaces are nonempty").1
}

/// Closest-point result for a virtual curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveProjection {
    pub point: [f64; 3],
    /// Unit tangent from the cross product of the two surface normals; zero
    /// when the surfaces are tangent there.
    pub tangent: [f64; 3],
    pub low_precision: bool,
}

/// Averaged composed projection `(P1(P2(x)) + P2(P1(x))) / 2`, repeated
/// until it stops moving. One application is exact when the surfaces meet
/// at a right angle; otherwise it lands off the intersection by a factor
/// of `cos(angle)` and the repetition removes that.
pub fn project_to_curve(s1: &VirtualSurface, s2: &VirtualSurface, x: &[f64; 3]) -> CurveProjection {
    let mut point = *x;
    let mut low_precision = false;
    let mut tangent = [0.0; 3];
    let scale = 1.0 + v3(x).norm();
    for _ in 0..MAX_CURVE_ITERATIONS {
        let a1 = project_to_surface(s1, &point);
        let a2 = project_to_surface(s2, &point);
        let b12 = project_to_surface(s1, &a2.point);
        let b21 = project_to_surface(s2, &a1.point);
        let next: [f64; 3] = std::array::from_fn(|d| 0.5 * (b12.point[d] + b21.point[d]));
        let t = v3(&b12.normal).cross(&v3(&b21.normal));
        tangent = if t.norm() > 1e-300 { t.normalize().into() } else { [0.0; 3] };
        low_precision |= a1.low_precision || a2.low_precision || b12.low_precision || b21.low_precision;
        let step = (v3(&next) - v3(&point)).norm();
        point = next;
        if step <= 1e-15 * scale {
            break;
        }
    }
    CurveProjection {
        point,
        tangent,
        low_precision,
    }
}
