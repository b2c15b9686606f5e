use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::model::GeometryModel;
use crate::geometry::patch::v3;
use crate::mesh::{BoundaryClass, BoundaryClassification, HighOrderMesh};

/// Where a node is pulled during curving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTarget {
    Free,
    Fixed,
    Surface(usize),
    Curve(usize),
}

impl NodeTarget {
    pub fn is_active(self) -> bool {
        self != NodeTarget::Fixed
    }

    pub fn is_projected(self) -> bool {
        matches!(self, NodeTarget::Surface(_) | NodeTarget::Curve(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTargets {
    pub targets: Vec<NodeTarget>,
    /// Boundary nodes touching three or more virtual surfaces, held fixed.
    pub corners: Vec<usize>,
    /// Virtual surface of each boundary face; `None` for far-field faces.
    pub face_surfaces: Vec<Option<usize>>,
    /// Faces kept straight-sided; their nodes are fixed.
    pub frozen_faces: Vec<bool>,
}

impl NodeTargets {
    pub fn count(&self, pred: impl Fn(NodeTarget) -> bool) -> usize {
        self.targets.iter().filter(|&&t| pred(t)).count()
    }

    /// Freezes boundary faces: all their nodes become fixed.
    pub fn freeze_faces(&mut self, mesh: &HighOrderMesh, faces: &[usize]) {
        for &f in faces {
            self.frozen_faces[f] = true;
            for &n in &mesh.faces()[f].nodes {
                self.targets[n] = NodeTarget::Fixed;
            }
        }
    }
}

/// Virtual surface of every boundary face, or `None` for far-field faces.
pub fn face_surfaces(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
) -> Result<Vec<Option<usize>>> {
    mesh.faces()
        .iter()
        .map(|f| match classification.class_of(f.mark) {
            None => Err(Error::Classification(format!("mark {} is not classified", f.mark))),
            Some(BoundaryClass::Farfield) => Ok(None),
            Some(_) => model.surface_for_mark(f.mark).map(Some).ok_or_else(|| {
                Error::Classification(format!("mark {} has no virtual surface in the geometry model", f.mark))
            }),
        })
        .collect()
}

pub fn classify_boundary_nodes(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
) -> Result<NodeTargets> {
    let face_surfaces = face_surfaces(mesh, model, classification)?;
    let n = mesh.num_nodes();
    let mut surfaces: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut fixed = vec![false; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        for &node in &face.nodes {
            match face_surfaces[f] {
                None => fixed[node] = true,
                Some(s) => {
                    surfaces[node].insert(s);
                }
            }
        }
    }
    let tol = 1e-9 * mesh.characteristic_length();
    for v in &model.fixed_vertices {
        let v = v3(v);
        for (node, set) in surfaces.iter().enumerate() {
            if !set.is_empty() && (v3(&mesh.nodes()[node]) - v).norm() <= tol {
                fixed[node] = true;
            }
        }
    }
    let mut targets = vec![NodeTarget::Free; n];
    let mut corners = Vec::new();
    for node in 0..n {
        let set = &surfaces[node];
        targets[node] = if fixed[node] {
            NodeTarget::Fixed
        } else {
            match set.len() {
                0 => NodeTarget::Free,
                1 => NodeTarget::Surface(*set.first().unwrap()),
                2 => {
                    let mut it = set.iter();
                    let (a, b) = (*it.next().unwrap(), *it.next().unwrap());
                    match model.curve_between(a, b) {
                        Some(c) => NodeTarget::Curve(c),
                        None => {
                            return Err(Error::Classification(format!(
                                "node {node} at {:?} lies between virtual surfaces {a} and {b}, which share no virtual curve",
                                mesh.nodes()[node]
                            )))
                        }
                    }
                }
                _ => {
                    let ids: Vec<usize> = set.iter().copied().collect();
                    let has_curve = ids
                        .iter()
                        .enumerate()
                        .any(|(i, &a)| ids[i + 1..].iter().any(|&b| model.curve_between(a, b).is_some()));
                    if !has_curve {
                        return Err(Error::Classification(format!(
                            "node {node} at {:?} touches virtual surfaces {ids:?} with no declared curve",
                            mesh.nodes()[node]
                        )));
                    }
                    corners.push(node);
                    NodeTarget::Fixed
                }
            }
        };
    }
    let frozen_faces = vec![false; mesh.faces().len()];
    Ok(NodeTargets {
        targets,
        corners,
        face_surfaces,
        frozen_faces,
    })
}

/// Boundary condition targets for the current node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSnapshot {
    /// Projected position for surface and curve nodes, current position
    /// otherwise.
    pub positions: Vec<[f64; 3]>,
    /// Nodes whose projection fell back to a low-precision search.
    pub low_precision: Vec<usize>,
}

pub fn project_targets(nodes: &[[f64; 3]], model: &GeometryModel, targets: &NodeTargets) -> Result<TargetSnapshot> {
    use rayon::prelude::*;
    let projected: Vec<([f64; 3], bool)> = nodes
        .par_iter()
        .zip(&targets.targets)
        .map(|(x, t)| match *t {
            NodeTarget::Surface(s) => model.project_to_virtual_surface(s, x).map(|p| (p.point, p.low_precision)),
            NodeTarget::Curve(c) => model.project_to_virtual_curve(c, x).map(|p| (p.point, p.low_precision)),
            _ => Ok((*x, false)),
        })
        .collect::<Result<_>>()?;
    let low_precision = projected.iter().enumerate().filter(|(_, p)| p.1).map(|(i, _)| i).collect();
    Ok(TargetSnapshot {
        positions: projected.into_iter().map(|p| p.0).collect(),
        low_precision,
    })
}
