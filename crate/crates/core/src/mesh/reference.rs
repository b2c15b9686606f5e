//! Reference simplices: equispaced barycentric node lattices and their
//! Lagrange bases.
//!
//! Node ordering follows the gmsh convention for high-order simplices:
//! vertices, then edge nodes edge by edge (each edge traversed from its
//! first to its second vertex), then face-interior nodes face by face, then
//! element-interior nodes. Interior nodes of a face (element) are ordered
//! recursively as the lattice of the sub-triangle (sub-tetrahedron) of degree
//! `q - 3` (`q - 4`) obtained by dropping one layer of nodes on each side.

use crate::error::{Error, Result};

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 4;

/// Triangle edges as pairs of local vertex indices.
pub const TRIANGLE_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Tetrahedron edges as pairs of local vertex indices.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [1, 2], [2, 0], [3, 0], [3, 2], [3, 1]];

/// Tetrahedron faces as triples of local vertex indices. Each face is
/// oriented with its normal pointing out of a positively oriented element.
pub const TET_FACES: [[usize; 3]; 4] = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [3, 1, 2]];

/// Integer barycentric coordinates of a lattice node. Only the first
/// `dimension + 1` entries are meaningful.
pub type MultiIndex = [usize; 4];

/// Basis values and reference-coordinate gradients at one point.
///
/// Gradients are taken with respect to the reference coordinates
/// `xi_j = lambda_{j+1}`; the third component is zero for triangles.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct ReferenceSimplex {
    dimension: usize,
    degree: usize,
    lattice: Vec<MultiIndex>,
}

impl ReferenceSimplex {
    pub fn new(dimension: usize, degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let lattice = match dimension {
            2 => triangle_lattice(degree)
                .into_iter()
                .map(|[a, b, c]| [a, b, c, 0])
                .collect(),
            3 => tet_lattice(degree),
            d => return Err(Error::UnsupportedDimension(d)),
        };
        Ok(Self {
            dimension,
            degree,
            lattice,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.lattice.len()
    }

    pub fn lattice(&self) -> &[MultiIndex] {
        &self.lattice
    }

    /// Barycentric position of node `i`.
    pub fn node(&self, i: usize) -> [f64; 4] {
        let q = self.degree as f64;
        let m = self.lattice[i];
        [m[0] as f64 / q, m[1] as f64 / q, m[2] as f64 / q, m[3] as f64 / q]
    }

    pub fn nodes(&self) -> Vec<[f64; 4]> {
        (0..self.num_nodes()).map(|i| self.node(i)).collect()
    }

    /// Local index of the node with the given multi-index.
    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.lattice.iter().position(|l| l == m)
    }

    /// Evaluates all basis functions at a barycentric point.
    pub fn eval_basis(&self, bary: &[f64; 4]) -> BasisEval {
        let n = self.num_nodes();
        let mut values = vec![0.0; n];
        let mut gradients = vec![[0.0; 3]; n];
        self.eval_into(bary, &mut values, &mut gradients);
        BasisEval { values, gradients }
    }

    pub(crate) fn eval_into(&self, bary: &[f64; 4], values: &mut [f64], gradients: &mut [[f64; 3]]) {
        let q = self.degree;
        let nb = self.dimension + 1;
        // factor tables: p[i][a] = P_a(lambda_i), dp[i][a] = P_a'(lambda_i)
        let mut p = [[0.0; MAX_DEGREE + 1]; 4];
        let mut dp = [[0.0; MAX_DEGREE + 1]; 4];
        for i in 0..nb {
            let t = q as f64 * bary[i];
            p[i][0] = 1.0;
            dp[i][0] = 0.0;
            for a in 1..=q {
                let k = (a - 1) as f64;
                let factor = (t - k) / a as f64;
                let dfactor = q as f64 / a as f64;
                dp[i][a] = dp[i][a - 1] * factor + p[i][a - 1] * dfactor;
                p[i][a] = p[i][a - 1] * factor;
            }
        }
        for (node, m) in self.lattice.iter().enumerate() {
            let mut value = 1.0;
            for i in 0..nb {
                value *= p[i][m[i]];
            }
            // d/d lambda_i
            let mut dl = [0.0; 4];
            for i in 0..nb {
                let mut d = dp[i][m[i]];
                for j in 0..nb {
                    if j != i {
                        d *= p[j][m[j]];
                    }
                }
                dl[i] = d;
            }
            values[node] = value;
            let mut g = [0.0; 3];
            for j in 0..self.dimension {
                g[j] = dl[j + 1] - dl[0];
            }
            gradients[node] = g;
        }
    }

    /// Tabulates values and gradients at a list of barycentric points.
    pub fn tabulate(&self, points: &[[f64; 4]]) -> Tabulation {
        let n = self.num_nodes();
        let mut values = vec![0.0; n * points.len()];
        let mut gradients = vec![[0.0; 3]; n * points.len()];
        for (k, pt) in points.iter().enumerate() {
            self.eval_into(pt, &mut values[k * n..(k + 1) * n], &mut gradients[k * n..(k + 1) * n]);
        }
        Tabulation {
            num_nodes: n,
            num_points: points.len(),
            values,
            gradients,
        }
    }
}

/// Basis values and gradients at a fixed set of points, stored point-major.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub num_nodes: usize,
    pub num_points: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn values_at(&self, point: usize) -> &[f64] {
        &self.values[point * self.num_nodes..(point + 1) * self.num_nodes]
    }

    pub fn gradients_at(&self, point: usize) -> &[[f64; 3]] {
        &self.gradients[point * self.num_nodes..(point + 1) * self.num_nodes]
    }
}

/// Full triangle lattice of degree `q` in gmsh order. Degree 0 is the
/// single node `(0,0,0)`, used when recursing into interiors.
pub(crate) fn triangle_lattice(q: usize) -> Vec<[usize; 3]> {
    if q == 0 {
        return vec![[0, 0, 0]];
    }
    let mut out = vec![[q, 0, 0], [0, q, 0], [0, 0, q]];
    for [a, b] in TRIANGLE_EDGES {
        for k in 1..q {
            let mut m = [0; 3];
            m[a] = q - k;
            m[b] = k;
            out.push(m);
        }
    }
    out.extend(triangle_interior(q));
    out
}

/// Interior nodes of a degree-`q` triangle, in gmsh order.
pub(crate) fn triangle_interior(q: usize) -> Vec<[usize; 3]> {
    if q < 3 {
        return Vec::new();
    }
    triangle_lattice(q - 3)
        .into_iter()
        .map(|[a, b, c]| [a + 1, b + 1, c + 1])
        .collect()
}

pub(crate) fn tet_lattice(q: usize) -> Vec<MultiIndex> {
    if q == 0 {
        return vec![[0; 4]];
    }
    let mut out = vec![[q, 0, 0, 0], [0, q, 0, 0], [0, 0, q, 0], [0, 0, 0, q]];
    for [a, b] in TET_EDGES {
        for k in 1..q {
            let mut m = [0; 4];
            m[a] = q - k;
            m[b] = k;
            out.push(m);
        }
    }
    for face in TET_FACES {
        for t in triangle_interior(q) {
            let mut m = [0; 4];
            for (slot, &v) in face.iter().enumerate() {
                m[v] = t[slot];
            }
            out.push(m);
        }
    }
    if q >= 4 {
        for m in tet_lattice(q - 4) {
            out.push([m[0] + 1, m[1] + 1, m[2] + 1, m[3] + 1]);
        }
    }
    out
}

#[cfg(test)]
pub(crate) fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bary(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 4] {
        let mut e = [0.0; 4];
        let mut sum = 0.0;
        for x in e.iter_mut().take(dim + 1) {
            *x = -rng.gen::<f64>().ln();
            sum += *x;
        }
        for x in e.iter_mut().take(dim + 1) {
            *x /= sum;
        }
        e
    }

    #[test]
    fn node_counts_and_vertices() {
        let lin = ReferenceSimplex::new(3, 1).unwrap();
        assert_eq!(lin.num_nodes(), 4);
        let quad = ReferenceSimplex::new(3, 2).unwrap();
        assert_eq!(quad.num_nodes(), 10);
        let tri3 = ReferenceSimplex::new(2, 3).unwrap();
        assert_eq!(tri3.num_nodes(), 10);
        for dim in [2, 3] {
            for q in 1..=4 {
                let r = ReferenceSimplex::new(dim, q).unwrap();
                assert_eq!(r.num_nodes(), binomial(q + dim, dim));
                for i in 0..r.num_nodes() {
                    let n = r.node(i);
                    let s: f64 = n.iter().sum();
                    assert!((s - 1.0).abs() < 1e-15);
                    assert!(n.iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
                // first dim+1 nodes are the vertices
                for v in 0..=dim {
                    assert_eq!(r.lattice()[v][v], q);
                }
            }
        }
    }

    #[test]
    fn triangle_degree_three_matches_enumeration() {
        // every (i,j,k) with i+j+k = 3 appears exactly once
        let r = ReferenceSimplex::new(2, 3).unwrap();
        let mut expected = Vec::new();
        for i in 0..=3 {
            for j in 0..=(3 - i) {
                expected.push([i, j, 3 - i - j, 0]);
            }
        }
        let mut got = r.lattice().to_vec();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn rejects_bad_degree_and_dimension() {
        assert!(matches!(ReferenceSimplex::new(3, 0), Err(Error::UnsupportedDegree(0))));
        assert!(matches!(ReferenceSimplex::new(3, 5), Err(Error::UnsupportedDegree(5))));
        assert!(matches!(ReferenceSimplex::new(4, 2), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn kronecker_property() {
        for dim in [2, 3] {
            for q in 1..=4 {
                let r = ReferenceSimplex::new(dim, q).unwrap();
                for i in 0..r.num_nodes() {
                    let b = r.eval_basis(&r.node(i));
                    for (j, v) in b.values.iter().enumerate() {
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert!((v - expected).abs() < 1e-13, "dim {dim} q {q} node {i} basis {j}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn linear_vertex_zero() {
        let r = ReferenceSimplex::new(3, 1).unwrap();
        let b = r.eval_basis(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn quadratic_edge_midpoint_against_symbolic_form() {
        // On edge 0-1 (lambda_2 = lambda_3 = 0, lambda_1 = t) the quadratic
        // Lagrange polynomials restricted to the edge are
        // (1-t)(1-2t), t(2t-1), 4t(1-t) for vertex 0, vertex 1, midpoint.
        let r = ReferenceSimplex::new(3, 2).unwrap();
        let mid = r.index_of(&[1, 1, 0, 0]).unwrap();
        assert_eq!(mid, 4);
        for &t in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let b = r.eval_basis(&[1.0 - t, t, 0.0, 0.0]);
            assert!((b.values[0] - (1.0 - t) * (1.0 - 2.0 * t)).abs() < 1e-14);
            assert!((b.values[1] - t * (2.0 * t - 1.0)).abs() < 1e-14);
            assert!((b.values[mid] - 4.0 * t * (1.0 - t)).abs() < 1e-14);
        }
        let at_mid = r.eval_basis(&r.node(mid));
        for (j, v) in at_mid.values.iter().enumerate() {
            assert!((v - if j == mid { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_of_unity_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 3] {
            for q in 1..=4 {
                let r = ReferenceSimplex::new(dim, q).unwrap();
                for _ in 0..1000 {
                    let p = random_bary(&mut rng, dim);
                    let b = r.eval_basis(&p);
                    let s: f64 = b.values.iter().sum();
                    assert!((s - 1.0).abs() < 1e-12);
                    let mut g = [0.0; 3];
                    for gr in &b.gradients {
                        for k in 0..3 {
                            g[k] += gr[k];
                        }
                    }
                    assert!(g.iter().all(|x| x.abs() < 1e-10), "{g:?}");
                }
                let c = 1.0 / (dim + 1) as f64;
                let centroid = if dim == 3 { [c; 4] } else { [c, c, c, 0.0] };
                let s: f64 = r.eval_basis(&centroid).values.iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = ReferenceSimplex::new(3, 4).unwrap();
        let h = 1e-6;
        for _ in 0..20 {
            let p = random_bary(&mut rng, 3);
            let b = r.eval_basis(&p);
            for j in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[j + 1] += h;
                pp[0] -= h;
                pm[j + 1] -= h;
                pm[0] += h;
                let bp = r.eval_basis(&pp);
                let bm = r.eval_basis(&pm);
                for n in 0..r.num_nodes() {
                    let fd = (bp.values[n] - bm.values[n]) / (2.0 * h);
                    assert!((fd - b.gradients[n][j]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn gmsh_quadratic_tet_order() {
        // independently written table of the quadratic tet node order:
        // vertices, then edges 01, 12, 20, 30, 32, 31
        let expected: [[usize; 4]; 10] = [
            [2, 0, 0, 0],
            [0, 2, 0, 0],
            [0, 0, 2, 0],
            [0, 0, 0, 2],
            [1, 1, 0, 0],
            [0, 1, 1, 0],
            [1, 0, 1, 0],
            [1, 0, 0, 1],
            [0, 0, 1, 1],
            [0, 1, 0, 1],
        ];
        let r = ReferenceSimplex::new(3, 2).unwrap();
        assert_eq!(r.lattice(), &expected[..]);
    }
}
