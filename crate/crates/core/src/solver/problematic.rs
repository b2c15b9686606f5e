use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryModel, NodeTargets};
use crate::mesh::{high_order::to_vec, HighOrderMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Boundary triangle with two or more edges on virtual curves.
    TwoCurveEdges,
    /// Tetrahedron with two wall faces on the same or on tangent surfaces.
    TwoWallFaces,
    /// Two curve edges of one triangle meeting at a small angle.
    TangentCurves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub kind: ProblemKind,
    pub element: usize,
    /// Boundary faces involved.
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrozenSet {
    pub problems: Vec<Problem>,
    /// Sorted, deduplicated boundary faces to keep straight-sided.
    pub faces: Vec<usize>,
}

impl FrozenSet {
    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Finds boundary configurations that cannot be curved reliably.
pub fn detect_problematic_configurations(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    targets: &NodeTargets,
    tangency_threshold_deg: f64,
) -> FrozenSet {
    let cos_tangent = tangency_threshold_deg.to_radians().cos();
    let faces = mesh.faces();
    let verts = mesh.initial_vertices();
    let corner = |f: usize| -> [usize; 3] { std::array::from_fn(|i| faces[f].nodes[i]) };

    let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for f in 0..faces.len() {
        if targets.face_surfaces[f].is_none() {
            continue;
        }
        let c = corner(f);
        for i in 0..3 {
            let (a, b) = (c[i], c[(i + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let on_curve = |a: usize, b: usize| -> bool {
        edge_faces.get(&(a.min(b), a.max(b))).is_some_and(|fs| {
            let surfaces: BTreeSet<usize> = fs.iter().filter_map(|&f| targets.face_surfaces[f]).collect();
            let ids: Vec<usize> = surfaces.into_iter().collect();
            ids.len() >= 2 && model.curve_between(ids[0], ids[1]).is_some()
        })
    };

    let mut problems = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        if targets.face_surfaces[f].is_none() {
            continue;
        }
        let c = corner(f);
        let curve_edges: Vec<usize> = (0..3).filter(|&i| on_curve(c[i], c[(i + 1) % 3])).collect();
        if curve_edges.len() < 2 {
            continue;
        }
        problems.push(Problem {
            kind: ProblemKind::TwoCurveEdges,
            element: face.element,
            faces: vec![f],
        });
        // edge i runs c[i] -> c[i+1]; consecutive curve edges share a vertex
        let mut tangent = false;
        for (k, &i) in curve_edges.iter().enumerate() {
            for &j in &curve_edges[k + 1..] {
                let shared = if (i + 1) % 3 == j { c[j] } else { c[i] };
                let other = |e: usize| if c[e] == shared { c[(e + 1) % 3] } else { c[e] };
                let p = to_vec(verts[shared]);
                let u = (to_vec(verts[other(i)]) - p).normalize();
                let v = (to_vec(verts[other(j)]) - p).normalize();
                if u.dot(&v) > cos_tangent {
                    tangent = true;
                }
            }
        }
        if tangent {
            problems.push(Problem {
                kind: ProblemKind::TangentCurves,
                element: face.element,
                faces: vec![f],
            });
        }
    }

    let mut by_element: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (f, face) in faces.iter().enumerate() {
        if targets.face_surfaces[f].is_some() {
            by_element.entry(face.element).or_default().push(f);
        }
    }
    for (element, fs) in by_element {
        if fs.len() < 2 {
            continue;
        }
        let normal = |f: usize| {
            let p = mesh.initial_face_corners(f).map(to_vec);
            (p[1] - p[0]).cross(&(p[2] - p[0])).normalize()
        };
        let mut flagged = false;
        for (k, &a) in fs.iter().enumerate() {
            for &b in &fs[k + 1..] {
                let same = targets.face_surfaces[a] == targets.face_surfaces[b];
                // faces meeting at a cusp between tangent surfaces
                let cusp = normal(a).dot(&normal(b)) < -cos_tangent;
                flagged |= same || cusp;
            }
        }
        if flagged {
            problems.push(Problem {
                kind: ProblemKind::TwoWallFaces,
                element,
                faces: fs,
            });
        }
    }
    let faces: BTreeSet<usize> = problems.iter().flat_map(|p| p.faces.iter().copied()).collect();
    FrozenSet {
        problems,
        faces: faces.into_iter().collect(),
    }
}
