use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::reference::TET_FACES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryTriangle {
    pub vertices: [usize; 3],
    pub mark: u32,
}

/// Straight-sided tetrahedral mesh with marked boundary triangles.
#[derive(Debug, Clone, Default)]
pub struct LinearMesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub boundary: Vec<BoundaryTriangle>,
}

pub fn tet_volume6(p: [[f64; 3]; 4]) -> f64 {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    dot(a, cross(b, c))
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

impl LinearMesh {
    pub fn new(vertices: Vec<[f64; 3]>, tets: Vec<[usize; 4]>, boundary: Vec<BoundaryTriangle>) -> Self {
        Self {
            vertices,
            tets,
            boundary,
        }
    }

    pub fn tet_points(&self, t: usize) -> [[f64; 3]; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    /// Bounding-box diagonal.
    pub fn characteristic_length(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    pub fn marks(&self) -> BTreeSet<u32> {
        self.boundary.iter().map(|b| b.mark).collect()
    }

    /// Maps each sorted face to the (tet, local face) pairs containing it.
    pub(crate) fn face_map(&self) -> HashMap<[usize; 3], Vec<(usize, usize)>> {
        let mut map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::with_capacity(self.tets.len() * 2);
        for (t, tet) in self.tets.iter().enumerate() {
            for (f, face) in TET_FACES.iter().enumerate() {
                let key = sorted3(face.map(|i| tet[i]));
                map.entry(key).or_default().push((t, f));
            }
        }
        map
    }

    /// Checks the mesh invariants: ids in range, positive orientation, and
    /// every boundary triangle being a face of exactly one tetrahedron.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.tets.is_empty() {
            return Err(Error::InvalidInput("mesh has no tetrahedra".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (t, tet) in self.tets.iter().enumerate() {
            if tet.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidInput(format!("tetrahedron {t} references a missing vertex")));
            }
            let vol = tet_volume6(self.tet_points(t));
            if !(vol > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "tetrahedron {t} is not positively oriented (6V = {vol:e})"
                )));
            }
        }
        let faces = self.face_map();
        for (b, tri) in self.boundary.iter().enumerate() {
            if tri.vertices.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidInput(format!("boundary triangle {b} references a missing vertex")));
            }
            match faces.get(&sorted3(tri.vertices)).map(Vec::len) {
                Some(1) => {}
                Some(n) => {
                    return Err(Error::InvalidInput(format!(
                        "boundary triangle {b} is shared by {n} tetrahedra"
                    )))
                }
                None => {
                    return Err(Error::InvalidInput(format!(
                        "boundary triangle {b} is not a face of any tetrahedron"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Swaps two vertices of every negatively oriented tetrahedron.
    pub fn orient_positively(&mut self) {
        for t in 0..self.tets.len() {
            if tet_volume6(self.tet_points(t)) < 0.0 {
                self.tets[t].swap(2, 3);
            }
        }
    }
}

pub(crate) fn bbox_diagonal(points: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if points.is_empty() {
        return 0.0;
    }
    dot(sub(hi, lo), sub(hi, lo)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    Wall,
    Symmetry,
    Farfield,
}

impl BoundaryClass {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryClass::Wall => "wall",
            BoundaryClass::Symmetry => "symmetry",
            BoundaryClass::Farfield => "farfield",
        }
    }
}

/// Partition of boundary marks into wall, symmetry and far-field sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryClassification {
    #[serde(default)]
    pub wall: BTreeSet<u32>,
    #[serde(default)]
    pub symmetry: BTreeSet<u32>,
    #[serde(default)]
    pub farfield: BTreeSet<u32>,
}

impl BoundaryClassification {
    pub fn class_of(&self, mark: u32) -> Option<BoundaryClass> {
        if self.wall.contains(&mark) {
            Some(BoundaryClass::Wall)
        } else if self.symmetry.contains(&mark) {
            Some(BoundaryClass::Symmetry)
        } else if self.farfield.contains(&mark) {
            Some(BoundaryClass::Farfield)
        } else {
            None
        }
    }

    /// Checks disjointness and that every mark in `marks` is classified.
    pub fn validate<'a>(&self, marks: impl IntoIterator<Item = &'a u32>) -> Result<()> {
        let overlap = self
            .wall
            .intersection(&self.symmetry)
            .chain(self.wall.intersection(&self.farfield))
            .chain(self.symmetry.intersection(&self.farfield))
            .next();
        if let Some(m) = overlap {
            return Err(Error::Classification(format!("mark {m} appears in more than one class")));
        }
        for m in marks {
            if self.class_of(*m).is_none() {
                return Err(Error::Classification(format!("mark {m} is not classified")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_tet() -> LinearMesh {
        let vertices = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let boundary = TET_FACES
            .iter()
            .enumerate()
            .map(|(i, f)| BoundaryTriangle {
                vertices: *f,
                mark: i as u32,
            })
            .collect();
        LinearMesh::new(vertices, vec![[0, 1, 2, 3]], boundary)
    }

    #[test]
    fn unit_tet_is_valid() {
        let m = unit_tet();
        m.validate().unwrap();
        assert!((m.characteristic_length() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn faces_point_outward() {
        let m = unit_tet();
        let centroid = [0.25; 3];
        for f in TET_FACES {
            let p = f.map(|i| m.vertices[i]);
            let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            assert!(dot(n, sub(p[0], centroid)) > 0.0);
        }
    }

    #[test]
    fn rejects_inverted_tet() {
        let mut m = unit_tet();
        m.tets[0].swap(0, 1);
        assert!(m.validate().is_err());
        m.orient_positively();
        m.validate().unwrap();
    }

    #[test]
    fn rejects_interior_boundary_triangle() {
        let mut m = unit_tet();
        m.vertices.push([1.0, 1.0, 1.0]);
        m.tets.push([1, 2, 3, 4]);
        m.orient_positively();
        m.boundary[3].vertices = [1, 2, 3];
        assert!(m.validate().is_err());
    }

    #[test]
    fn classification_checks() {
        let c = BoundaryClassification {
            wall: [1, 2].into(),
            symmetry: [3].into(),
            farfield: [4].into(),
        };
        c.validate(&[1, 2, 3, 4]).unwrap();
        assert!(c.validate(&[5]).is_err());
        let bad = BoundaryClassification {
            wall: [1].into(),
            symmetry: [1].into(),
            farfield: BTreeSet::new(),
        };
        assert!(bad.validate(&[]).is_err());
        assert_eq!(c.class_of(3), Some(BoundaryClass::Symmetry));
    }
}
