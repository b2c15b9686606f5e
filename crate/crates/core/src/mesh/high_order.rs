use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::linear::{bbox_diagonal, sorted3, tet_volume6, LinearMesh};
use crate::mesh::reference::{ReferenceSimplex, MAX_DEGREE, TET_FACES};

/// A boundary face of a high-order mesh, oriented outward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub local_face: usize,
    pub mark: u32,
    /// Node ids in triangle lattice order.
    pub nodes: Vec<usize>,
}

/// Degree-q tetrahedral mesh. Nodes `0..num_vertices` are the vertices of
/// the initial linear mesh; the element map is measured against the
/// straight-sided element spanned by their initial positions.
#[derive(Debug, Clone)]
pub struct HighOrderMesh {
    degree: usize,
    nodes: Vec<[f64; 3]>,
    initial_vertices: Vec<[f64; 3]>,
    elements: Vec<usize>,
    faces: Vec<BoundaryFace>,
    characteristic_length: f64,
    initial_inverse: Vec<Matrix3<f64>>,
    initial_det: Vec<f64>,
    tet: ReferenceSimplex,
    tri: ReferenceSimplex,
    face_local: [Vec<usize>; 4],
}

/// Identifies a lattice node by its global vertex support and weights.
type NodeKey = [(u32, u8); 4];

fn node_key(vertices: &[usize; 4], m: &[usize; 4]) -> NodeKey {
    let mut key = [(u32::MAX, 0u8); 4];
    let mut n = 0;
    for i in 0..4 {
        if m[i] > 0 {
            key[n] = (vertices[i] as u32, m[i] as u8);
            n += 1;
        }
    }
    key[..n].sort_unstable();
    key
}

fn face_local_indices(tet: &ReferenceSimplex, tri: &ReferenceSimplex) -> [Vec<usize>; 4] {
    std::array::from_fn(|f| {
        let face = TET_FACES[f];
        tri.lattice()
            .iter()
            .map(|t| {
                let mut m = [0; 4];
                for (slot, &v) in face.iter().enumerate() {
                    m[v] = t[slot];
                }
                tet.index_of(&m).expect("face lattice node inside tet lattice")
            })
            .collect()
    })
}

pub(crate) fn to_vec(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

impl HighOrderMesh {
    /// Degree-1 mesh equal to the linear mesh.
    pub fn from_linear(linear: &LinearMesh) -> Result<Self> {
        linear.validate()?;
        let faces = linear.face_map();
        let mut boundary = Vec::with_capacity(linear.boundary.len());
        for tri in &linear.boundary {
            let (element, local_face) = faces[&sorted3(tri.vertices)][0];
            boundary.push((element, local_face, tri.mark));
        }
        let elements = linear.tets.iter().flat_map(|t| t.iter().copied()).collect();
        Self::from_parts(1, linear.vertices.clone(), linear.vertices.clone(), elements, &boundary)
    }

    /// Linear mesh elevated to degree `degree` with straight sides.
    pub fn straight(linear: &LinearMesh, degree: usize) -> Result<Self> {
        let mut mesh = Self::from_linear(linear)?;
        while mesh.degree < degree {
            mesh = mesh.elevate_degree(mesh.degree + 1)?;
        }
        Ok(mesh)
    }

    /// Assembles a mesh from raw arrays. Element node lists follow the
    /// reference lattice order, and their first four entries must be vertex
    /// ids below `initial_vertices.len()`.
    pub fn from_parts(
        degree: usize,
        nodes: Vec<[f64; 3]>,
        initial_vertices: Vec<[f64; 3]>,
        elements: Vec<usize>,
        boundary: &[(usize, usize, u32)],
    ) -> Result<Self> {
        let tet = ReferenceSimplex::new(3, degree)?;
        let tri = ReferenceSimplex::new(2, degree)?;
        let npe = tet.num_nodes();
        if !elements.len().is_multiple_of(npe) {
            return Err(Error::InvalidInput(format!(
                "element array length {} is not a multiple of {npe}",
                elements.len()
            )));
        }
        let nv = initial_vertices.len();
        if nv > nodes.len() {
            return Err(Error::InvalidInput("more initial vertices than nodes".into()));
        }
        if let Some(&bad) = elements.iter().find(|&&n| n >= nodes.len()) {
            return Err(Error::InvalidInput(format!("element references missing node {bad}")));
        }
        let n_el = elements.len() / npe;
        let mut initial_inverse = Vec::with_capacity(n_el);
        let mut initial_det = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let verts = &elements[e * npe..e * npe + 4];
            if verts.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidInput(format!("element {e} has a non-vertex corner node")));
            }
            let p: [[f64; 3]; 4] = std::array::from_fn(|i| initial_vertices[verts[i]]);
            let det = tet_volume6(p);
            if !(det > 0.0) {
                return Err(Error::InvalidInput(format!("initial element {e} has determinant {det:e}")));
            }
            let ji = Matrix3::from_columns(&[
                to_vec(p[1]) - to_vec(p[0]),
                to_vec(p[2]) - to_vec(p[0]),
                to_vec(p[3]) - to_vec(p[0]),
            ]);
            let inv = ji
                .try_inverse()
                .ok_or_else(|| Error::InvalidInput(format!("initial element {e} is singular")))?;
            initial_inverse.push(inv);
            initial_det.push(det);
        }
        let face_local = face_local_indices(&tet, &tri);
        let mut faces = Vec::with_capacity(boundary.len());
        for &(element, local_face, mark) in boundary {
            if element >= n_el || local_face >= 4 {
                return Err(Error::InvalidInput(format!(
                    "boundary face refers to element {element} face {local_face}"
                )));
            }
            let en = &elements[element * npe..(element + 1) * npe];
            faces.push(BoundaryFace {
                element,
                local_face,
                mark,
                nodes: face_local[local_face].iter().map(|&i| en[i]).collect(),
            });
        }
        let characteristic_length = bbox_diagonal(&initial_vertices);
        if !(characteristic_length > 0.0) {
            return Err(Error::InvalidInput("degenerate bounding box".into()));
        }
        Ok(Self {
            degree,
            nodes,
            initial_vertices,
            elements,
            faces,
            characteristic_length,
            initial_inverse,
            initial_det,
            tet,
            tri,
            face_local,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.initial_vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.initial_det.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.tet.num_nodes()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.nodes
    }

    pub fn initial_vertices(&self) -> &[[f64; 3]] {
        &self.initial_vertices
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let n = self.nodes_per_element();
        &self.elements[e * n..(e + 1) * n]
    }

    pub fn element_array(&self) -> &[usize] {
        &self.elements
    }

    pub fn faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn characteristic_length(&self) -> f64 {
        self.characteristic_length
    }

    pub fn tet_reference(&self) -> &ReferenceSimplex {
        &self.tet
    }

    pub fn triangle_reference(&self) -> &ReferenceSimplex {
        &self.tri
    }

    /// Tet-local node indices of local face `f`, in triangle lattice order.
    pub fn face_local_nodes(&self, f: usize) -> &[usize] {
        &self.face_local[f]
    }

    /// Inverse Jacobian of the initial straight element.
    pub fn initial_inverse(&self, e: usize) -> &Matrix3<f64> {
        &self.initial_inverse[e]
    }

    /// Jacobian determinant of the initial straight element (six times its volume).
    pub fn initial_det(&self, e: usize) -> f64 {
        self.initial_det[e]
    }

    /// Total volume of the initial mesh.
    pub fn initial_volume(&self) -> f64 {
        self.initial_det.iter().sum::<f64>() / 6.0
    }

    /// Initial corner positions of element `e`.
    pub fn initial_corners(&self, e: usize) -> [[f64; 3]; 4] {
        let en = self.element_nodes(e);
        std::array::from_fn(|i| self.initial_vertices[en[i]])
    }

    /// Initial corner positions of boundary face `f`, in face order.
    pub fn initial_face_corners(&self, f: usize) -> [[f64; 3]; 3] {
        let face = &self.faces[f];
        std::array::from_fn(|i| self.initial_vertices[face.nodes[i]])
    }

    /// Area of boundary face `f` in the initial mesh.
    pub fn initial_face_area(&self, f: usize) -> f64 {
        let p = self.initial_face_corners(f);
        let a = to_vec(p[1]) - to_vec(p[0]);
        let b = to_vec(p[2]) - to_vec(p[0]);
        0.5 * a.cross(&b).norm()
    }

    /// Node positions of the straight-sided (initial) map at the current degree.
    pub fn straight_nodes(&self) -> Vec<[f64; 3]> {
        let mut out = self.nodes.clone();
        out[..self.num_vertices()].copy_from_slice(&self.initial_vertices);
        for e in 0..self.num_elements() {
            let c = self.initial_corners(e);
            for (i, &n) in self.element_nodes(e).iter().enumerate() {
                let l = self.tet.node(i);
                out[n] = std::array::from_fn(|d| (0..4).map(|k| l[k] * c[k][d]).sum());
            }
        }
        out
    }

    /// Physical position of reference point `bary` in element `e`.
    pub fn map_point(&self, e: usize, bary: &[f64; 4]) -> [f64; 3] {
        let b = self.tet.eval_basis(bary);
        let mut x = [0.0; 3];
        for (n, &id) in self.element_nodes(e).iter().enumerate() {
            for d in 0..3 {
                x[d] += b.values[n] * self.nodes[id][d];
            }
        }
        x
    }

    /// Jacobian of the element map with respect to reference coordinates.
    pub fn reference_jacobian(&self, e: usize, bary: &[f64; 4]) -> Matrix3<f64> {
        let b = self.tet.eval_basis(bary);
        let mut j = Matrix3::zeros();
        for (n, &id) in self.element_nodes(e).iter().enumerate() {
            let x = self.nodes[id];
            let g = b.gradients[n];
            for r in 0..3 {
                for c in 0..3 {
                    j[(r, c)] += x[r] * g[c];
                }
            }
        }
        j
    }

    /// Jacobian of the curved map relative to the initial linear element.
    pub fn element_jacobian(&self, e: usize, bary: &[f64; 4]) -> Result<Matrix3<f64>> {
        if e >= self.num_elements() {
            return Err(Error::Lookup { kind: "element", id: e });
        }
        Ok(self.reference_jacobian(e, bary) * self.initial_inverse[e])
    }

    /// Position and parametric tangents of boundary face `f` at a triangle
    /// barycentric point.
    pub fn face_point(&self, f: usize, bary: &[f64; 4]) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let b = self.tri.eval_basis(bary);
        let mut x = [0.0; 3];
        let mut xu = [0.0; 3];
        let mut xv = [0.0; 3];
        for (n, &id) in self.faces[f].nodes.iter().enumerate() {
            let p = self.nodes[id];
            for d in 0..3 {
                x[d] += b.values[n] * p[d];
                xu[d] += b.gradients[n][0] * p[d];
                xv[d] += b.gradients[n][1] * p[d];
            }
        }
        (x, xu, xv)
    }

    /// Ids of all nodes lying on boundary faces, flagged per node.
    pub fn boundary_node_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for f in &self.faces {
            for &n in &f.nodes {
                mask[n] = true;
            }
        }
        mask
    }

    /// Degree elevation by one. New nodes sample the current map, so the
    /// elevated mesh represents exactly the same geometry.
    pub fn elevate_degree(&self, to_degree: usize) -> Result<Self> {
        if to_degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(to_degree));
        }
        if to_degree != self.degree + 1 {
            return Err(Error::InvalidInput(format!(
                "degree elevation must go from {} to {}, got {to_degree}",
                self.degree,
                self.degree + 1
            )));
        }
        let new_tet = ReferenceSimplex::new(3, to_degree)?;
        let npe = new_tet.num_nodes();
        let tab = self.tet.tabulate(&new_tet.nodes());
        let nv = self.num_vertices();
        let mut nodes: Vec<[f64; 3]> = self.nodes[..nv].to_vec();
        let mut ids: HashMap<NodeKey, usize> = HashMap::with_capacity(self.num_elements() * npe / 3);
        for v in 0..nv {
            ids.insert(node_key(&[v, 0, 0, 0], &[to_degree, 0, 0, 0]), v);
        }
        let mut elements = Vec::with_capacity(self.num_elements() * npe);
        for e in 0..self.num_elements() {
            let old = self.element_nodes(e);
            let corners = [old[0], old[1], old[2], old[3]];
            for (i, m) in new_tet.lattice().iter().enumerate() {
                let key = node_key(&corners, m);
                let id = *ids.entry(key).or_insert_with(|| {
                    let vals = tab.values_at(i);
                    let mut x = [0.0; 3];
                    for (n, &oid) in old.iter().enumerate() {
                        for d in 0..3 {
                            x[d] += vals[n] * self.nodes[oid][d];
                        }
                    }
                    nodes.push(x);
                    nodes.len() - 1
                });
                elements.push(id);
            }
        }
        let boundary: Vec<_> = self.faces.iter().map(|f| (f.element, f.local_face, f.mark)).collect();
        Self::from_parts(to_degree, nodes, self.initial_vertices.clone(), elements, &boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::linear::BoundaryTriangle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_tets() -> LinearMesh {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let mut m = LinearMesh::new(vertices, vec![[0, 1, 2, 3], [1, 2, 3, 4]], Vec::new());
        m.orient_positively();
        let faces = m.face_map();
        m.boundary = faces
            .iter()
            .filter(|(_, v)| v.len() == 1)
            .map(|(k, _)| BoundaryTriangle { vertices: *k, mark: 1 })
            .collect();
        m
    }

    fn random_bary(rng: &mut ChaCha8Rng) -> [f64; 4] {
        let mut b: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>());
        let s: f64 = b.iter().sum();
        b.iter_mut().for_each(|x| *x /= s);
        b
    }

    #[test]
    fn linear_to_quadratic_midpoints() {
        let lin = two_tets();
        let m = HighOrderMesh::straight(&lin, 2).unwrap();
        assert_eq!(m.num_vertices(), 5);
        // 9 edges
        assert_eq!(m.num_nodes(), 5 + 9);
        for e in 0..m.num_elements() {
            let en = m.element_nodes(e);
            for (k, [a, b]) in crate::mesh::reference::TET_EDGES.iter().enumerate() {
                let mid = m.nodes()[en[4 + k]];
                let pa = m.nodes()[en[*a]];
                let pb = m.nodes()[en[*b]];
                for d in 0..3 {
                    assert!((mid[d] - 0.5 * (pa[d] + pb[d])).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn shared_face_nodes_are_identical() {
        let lin = two_tets();
        for q in 2..=4 {
            let m = HighOrderMesh::straight(&lin, q).unwrap();
            let interior = if q >= 4 { (q - 1) * (q - 2) * (q - 3) / 6 } else { 0 };
            let expected = 5 + 9 * (q - 1) + 7 * (q - 1) * (q - 2) / 2 + 2 * interior;
            assert_eq!(m.num_nodes(), expected, "degree {q}");
        }
    }

    #[test]
    fn elevation_preserves_curved_map() {
        let lin = two_tets();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = HighOrderMesh::straight(&lin, 2).unwrap();
        for n in m.num_vertices()..m.num_nodes() {
            for d in 0..3 {
                m.nodes_mut()[n][d] += 0.05 * (rng.gen::<f64>() - 0.5);
            }
        }
        let mut prev = m;
        for q in 3..=4 {
            let next = prev.elevate_degree(q).unwrap();
            for e in 0..prev.num_elements() {
                for _ in 0..100 {
                    let b = random_bary(&mut rng);
                    let a = prev.map_point(e, &b);
                    let c = next.map_point(e, &b);
                    for d in 0..3 {
                        assert!((a[d] - c[d]).abs() < 1e-12);
                    }
                }
            }
            prev = next;
        }
        assert!(prev.elevate_degree(5).is_err());
    }

    #[test]
    fn identity_map_has_identity_jacobian() {
        let lin = two_tets();
        let m = HighOrderMesh::straight(&lin, 3).unwrap();
        let rule = crate::mesh::quadrature::quadrature(3, 6).unwrap();
        for e in 0..m.num_elements() {
            for p in &rule.points {
                let j = m.element_jacobian(e, p).unwrap();
                assert!((j - Matrix3::identity()).abs().max() < 1e-13);
            }
        }
    }

    #[test]
    fn scaled_nodes_give_twice_identity() {
        let lin = two_tets();
        let mut m = HighOrderMesh::straight(&lin, 2).unwrap();
        m.nodes_mut().iter_mut().for_each(|p| p.iter_mut().for_each(|c| *c *= 2.0));
        let j = m.element_jacobian(1, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((j - Matrix3::<f64>::identity() * 2.0).abs().max() < 1e-13);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let lin = two_tets();
        let mut m = HighOrderMesh::straight(&lin, 2).unwrap();
        // displace the midpoint of edge (0,1) of element 0 along its normal
        let id = m.element_nodes(0)[4];
        m.nodes_mut()[id][1] += 0.1;
        let k = *m.initial_inverse(0);
        let b = [0.3, 0.3, 0.2, 0.2];
        let j = m.element_jacobian(0, &b).unwrap();
        // physical-to-physical Jacobian by central differences in initial coordinates
        let h = 1e-5;
        let mut fd = Matrix3::zeros();
        for c in 0..3 {
            let mut dxi = Vector3::zeros();
            for r in 0..3 {
                dxi[r] = k[(r, c)] * h;
            }
            let shift = |s: f64| {
                let mut p = b;
                p[1] += s * dxi[0];
                p[2] += s * dxi[1];
                p[3] += s * dxi[2];
                p[0] = 1.0 - p[1] - p[2] - p[3];
                m.map_point(0, &p)
            };
            let (xp, xm) = (shift(1.0), shift(-1.0));
            for r in 0..3 {
                fd[(r, c)] = (xp[r] - xm[r]) / (2.0 * h);
            }
        }
        assert!((j - fd).abs().max() < 1e-7);
    }

    #[test]
    fn faces_are_subsets_of_their_elements() {
        let m = HighOrderMesh::straight(&two_tets(), 4).unwrap();
        assert_eq!(m.faces().len(), 6);
        for f in m.faces() {
            assert_eq!(f.nodes.len(), 15);
            let en = m.element_nodes(f.element);
            assert!(f.nodes.iter().all(|n| en.contains(n)));
        }
    }
}
