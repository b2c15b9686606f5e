//! Point-wise distortion of the element map and element quality measures.
//!
//! An infinite distortion (nonpositive determinant) is represented by
//! `f64::INFINITY`, which orders above every finite value and poisons any
//! sum it enters.

use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::reference::tet_lattice;
use crate::mesh::{quadrature, HighOrderMesh, QuadratureRule, Tabulation};

pub type Matrix9 = SMatrix<f64, 9, 9>;

/// Rectifier `(d + |d|) / 2`.
pub fn det0(d: f64) -> f64 {
    0.5 * (d + d.abs())
}

/// Smoothed determinant `(d + sqrt(d^2 + 4 delta^2)) / 2`; equals `det0` for
/// `delta = 0`.
pub fn det_delta(d: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        det0(d)
    } else {
        0.5 * (d + (d * d + 4.0 * delta * delta).sqrt())
    }
}

pub fn cofactor(j: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)],
        j[(1, 2)] * j[(2, 0)] - j[(1, 0)] * j[(2, 2)],
        j[(1, 0)] * j[(2, 1)] - j[(1, 1)] * j[(2, 0)],
        j[(0, 2)] * j[(2, 1)] - j[(0, 1)] * j[(2, 2)],
        j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(2, 0)],
        j[(0, 1)] * j[(2, 0)] - j[(0, 0)] * j[(2, 1)],
        j[(0, 1)] * j[(1, 2)] - j[(0, 2)] * j[(1, 1)],
        j[(0, 2)] * j[(1, 0)] - j[(0, 0)] * j[(1, 2)],
        j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)],
    )
}

/// `eta(J) = |J|_F^2 / (3 det0(J)^(2/3))`.
pub fn pointwise_eta(j: &Matrix3<f64>) -> f64 {
    eta_delta(j, 0.0)
}

pub fn eta_delta(j: &Matrix3<f64>, delta: f64) -> f64 {
    let d = det_delta(j.determinant(), delta);
    if d <= 0.0 {
        return f64::INFINITY;
    }
    j.norm_squared() / (3.0 * d.powf(2.0 / 3.0))
}

/// Derivatives of `eta^2` with respect to the Jacobian entries.
#[derive(Debug, Clone, Copy)]
pub struct EtaSquared {
    pub value: f64,
    pub gradient: Matrix3<f64>,
    j: Matrix3<f64>,
    cof: Matrix3<f64>,
    f: f64,
    a: f64,
    // dA/dJ = a1 * cof
    a1: f64,
    // d2A = a2 * cof (x) cof + a1 * d2(det)
    a2: f64,
}

impl EtaSquared {
    /// `None` when the (smoothed) determinant is not positive.
    pub fn new(j: &Matrix3<f64>, delta: f64) -> Option<Self> {
        let det = j.determinant();
        let big_d = det_delta(det, delta);
        if big_d <= 0.0 {
            return None;
        }
        let (dd1, dd2) = if delta == 0.0 {
            (1.0, 0.0)
        } else {
            let s = (det * det + 4.0 * delta * delta).sqrt();
            (0.5 * (1.0 + det / s), 2.0 * delta * delta / (s * s * s))
        };
        let f = j.norm_squared();
        let a = big_d.powf(-4.0 / 3.0);
        let a_d = -4.0 / 3.0 * a / big_d;
        let a_dd = 28.0 / 9.0 * a / (big_d * big_d);
        let a1 = a_d * dd1;
        let a2 = a_dd * dd1 * dd1 + a_d * dd2;
        let cof = cofactor(j);
        let value = f * f * a / 9.0;
        let gradient = (j * (4.0 * f * a) + cof * (f * f * a1)) / 9.0;
        Some(Self {
            value,
            gradient,
            j: *j,
            cof,
            f,
            a,
            a1,
            a2,
        })
    }

    /// Second derivative applied to a direction `dj`.
    pub fn apply_hessian(&self, dj: &Matrix3<f64>) -> Matrix3<f64> {
        let df = 2.0 * self.j.dot(dj);
        let da = self.a1 * self.cof.dot(dj);
        // derivative of the cofactor matrix along dj (cof is quadratic)
        let dcof = cofactor(&(self.j + dj)) - self.cof - cofactor(dj);
        let f = self.f;
        let t = self.j * (2.0 * (2.0 * self.a * df + 2.0 * f * da))
            + dj * (4.0 * f * self.a)
            + self.cof * (2.0 * f * self.a1 * df + f * f * self.a2 * self.cof.dot(dj))
            + dcof * (f * f * self.a1);
        t / 9.0
    }

    /// Full 9x9 Hessian with entries indexed by `3 * row + col` of `J`.
    pub fn hessian(&self) -> Matrix9 {
        let mut h = Matrix9::zeros();
        for k in 0..9 {
            let mut e = Matrix3::zeros();
            e[(k / 3, k % 3)] = 1.0;
            let col = self.apply_hessian(&e);
            for m in 0..9 {
                h[(m, k)] = col[(m / 3, m % 3)];
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementQuality {
    pub element: usize,
    /// Root mean square of the point-wise distortion; infinite if any
    /// sampled determinant is nonpositive.
    pub eta: f64,
    pub shape_quality: f64,
    pub scaled_jacobian: f64,
    pub min_det: f64,
    pub max_det: f64,
}

impl ElementQuality {
    pub fn is_valid(&self) -> bool {
        self.scaled_jacobian > 0.0 && self.shape_quality > 0.0
    }
}

/// Quadrature and sampling tables for quality evaluation at one degree.
#[derive(Debug, Clone)]
pub struct QualitySampler {
    pub rule: QuadratureRule,
    rule_tab: Tabulation,
    sample_tab: Tabulation,
    pub num_samples: usize,
}

impl QualitySampler {
    /// `exactness` sets the quadrature for `q^S`; the determinant sample set
    /// is the quadrature points, the element lattice nodes and the lattice
    /// with `2^subdivision_level` divisions per edge.
    pub fn new(mesh: &HighOrderMesh, exactness: usize, subdivision_level: u32) -> Result<Self> {
        let tet = mesh.tet_reference();
        let rule = quadrature(3, exactness)?;
        let rule_tab = tet.tabulate(&rule.points);
        let mut samples = rule.points.clone();
        samples.extend(tet.nodes());
        let div = 1usize << subdivision_level;
        samples.extend(
            tet_lattice_points(div)
                .into_iter()
                .filter(|p| !samples_contains(&tet.nodes(), p)),
        );
        let sample_tab = tet.tabulate(&samples);
        Ok(Self {
            rule,
            rule_tab,
            num_samples: samples.len(),
            sample_tab,
        })
    }

    pub fn element_quality(&self, mesh: &HighOrderMesh, e: usize) -> ElementQuality {
        let nodes = mesh.element_nodes(e);
        let k = mesh.initial_inverse(e);
        let mut sum = 0.0;
        let mut wsum = 0.0;
        for (p, w) in self.rule.weights.iter().enumerate() {
            let j = jacobian_from(mesh, nodes, self.rule_tab.gradients_at(p)) * k;
            let eta = pointwise_eta(&j);
            sum += w * eta * eta;
            wsum += w;
        }
        let eta = (sum / wsum).sqrt();
        let shape_quality = if eta.is_finite() { 1.0 / eta } else { 0.0 };
        let mut min_det = f64::INFINITY;
        let mut max_det = f64::NEG_INFINITY;
        for p in 0..self.num_samples {
            let d = (jacobian_from(mesh, nodes, self.sample_tab.gradients_at(p)) * k).determinant();
            min_det = min_det.min(d);
            max_det = max_det.max(d);
        }
        ElementQuality {
            element: e,
            eta,
            shape_quality,
            scaled_jacobian: scaled_jacobian(min_det, max_det),
            min_det,
            max_det,
        }
    }
}

/// `min / max` for positive samples. When some sample is nonpositive the
/// result is `min / max|det|`, which is nonpositive.
pub fn scaled_jacobian(min_det: f64, max_det: f64) -> f64 {
    if min_det > 0.0 {
        min_det / max_det
    } else {
        let m = min_det.abs().max(max_det.abs());
        if m > 0.0 {
            min_det / m
        } else {
            0.0
        }
    }
}

fn samples_contains(list: &[[f64; 4]], p: &[f64; 4]) -> bool {
    list.iter()
        .any(|q| (0..4).all(|i| (q[i] - p[i]).abs() < 1e-14))
}

/// Barycentric points of the degree-`div` lattice.
pub fn tet_lattice_points(div: usize) -> Vec<[f64; 4]> {
    let d = div as f64;
    tet_lattice(div)
        .into_iter()
        .map(|m| m.map(|c| c as f64 / d))
        .collect()
}

/// Reference Jacobian `sum_n x_n (grad N_n)^T` of an element.
pub(crate) fn jacobian_from(mesh: &HighOrderMesh, nodes: &[usize], grads: &[[f64; 3]]) -> Matrix3<f64> {
    jacobian_from_coords(mesh.nodes(), nodes, grads)
}

/// `sum_n x[nodes[n]] g_n^T`
pub(crate) fn jacobian_from_coords(coords: &[[f64; 3]], nodes: &[usize], grads: &[[f64; 3]]) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for (&id, g) in nodes.iter().zip(grads) {
        add_outer(&mut j, &coords[id], g);
    }
    j
}

/// `sum_n x_n g_n^T` for element-local coordinates.
pub(crate) fn jacobian_local(coords: &[[f64; 3]], grads: &[[f64; 3]]) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for (x, g) in coords.iter().zip(grads) {
        add_outer(&mut j, x, g);
    }
    j
}

#[inline]
fn add_outer(j: &mut Matrix3<f64>, x: &[f64; 3], g: &[f64; 3]) {
    for r in 0..3 {
        for c in 0..3 {
            j[(r, c)] += x[r] * g[c];
        }
    }
}

/// Quality of every element, in element order.
pub fn mesh_quality(mesh: &HighOrderMesh, exactness: usize, subdivision_level: u32) -> Result<Vec<ElementQuality>> {
    use rayon::prelude::*;
    let sampler = QualitySampler::new(mesh, exactness, subdivision_level)?;
    Ok((0..mesh.num_elements())
        .into_par_iter()
        .map(|e| sampler.element_quality(mesh, e))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.gen::<f64>() - 0.5) + Matrix3::identity()
    }

    #[test]
    fn det0_examples() {
        assert_eq!(det0(2.0), 2.0);
        assert_eq!(det0(-3.0), 0.0);
        assert_eq!(det0(0.0), 0.0);
    }

    #[test]
    fn eta_examples() {
        assert!((pointwise_eta(&Matrix3::identity()) - 1.0).abs() < 1e-15);
        let j = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 1.0));
        // 6 / (3 * 2^(2/3)) computed independently
        let expected = 6.0 / (3.0 * 4f64.cbrt());
        assert!((pointwise_eta(&j) - expected).abs() < 1e-12);
        assert!((pointwise_eta(&j) - 1.259_921_049_894_873).abs() < 1e-12);
        let neg = Matrix3::from_diagonal(&nalgebra::Vector3::new(-0.5, 1.0, 1.0));
        assert_eq!(pointwise_eta(&neg), f64::INFINITY);
    }

    #[test]
    fn cofactor_is_adjugate_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let j = random_matrix(&mut rng);
            let c = cofactor(&j);
            let expected = j.try_inverse().unwrap().transpose() * j.determinant();
            assert!((c - expected).abs().max() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for delta in [0.0, 0.1] {
            for _ in 0..20 {
                let j = random_matrix(&mut rng);
                let Some(e) = EtaSquared::new(&j, delta) else { continue };
                let h = 1e-6;
                for k in 0..9 {
                    let mut jp = j;
                    let mut jm = j;
                    jp[(k / 3, k % 3)] += h;
                    jm[(k / 3, k % 3)] -= h;
                    let fd = (eta_delta(&jp, delta).powi(2) - eta_delta(&jm, delta).powi(2)) / (2.0 * h);
                    let g = e.gradient[(k / 3, k % 3)];
                    assert!((fd - g).abs() < 1e-6 * (1.0 + g.abs()), "{fd} vs {g}");
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for delta in [0.0, 0.05] {
            for _ in 0..20 {
                let j = random_matrix(&mut rng);
                let Some(e) = EtaSquared::new(&j, delta) else { continue };
                let hm = e.hessian();
                assert!((hm - hm.transpose()).abs().max() < 1e-10 * (1.0 + hm.abs().max()));
                let h = 1e-6;
                for k in 0..9 {
                    let mut jp = j;
                    let mut jm = j;
                    jp[(k / 3, k % 3)] += h;
                    jm[(k / 3, k % 3)] -= h;
                    let gp = EtaSquared::new(&jp, delta).unwrap().gradient;
                    let gm = EtaSquared::new(&jm, delta).unwrap().gradient;
                    for m in 0..9 {
                        let fd = (gp[(m / 3, m % 3)] - gm[(m / 3, m % 3)]) / (2.0 * h);
                        assert!((fd - hm[(m, k)]).abs() < 1e-5 * (1.0 + fd.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn scaled_jacobian_sign_rules() {
        assert_eq!(scaled_jacobian(1.0, 1.0), 1.0);
        assert!(scaled_jacobian(-2.0, -1.0) <= 0.0);
        assert!(scaled_jacobian(-1.0, 2.0) < 0.0);
        assert_eq!(scaled_jacobian(0.0, 2.0), 0.0);
    }
}
