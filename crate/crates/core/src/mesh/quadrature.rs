//! Quadrature on the reference triangle and tetrahedron.
//!
//! Low orders use small symmetric tables; everything else is a collapsed
//! (conical product) Gauss-Jacobi rule, which exists for every exactness
//! degree and has positive weights.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dimension: usize,
    pub exactness: usize,
    /// Barycentric points; only the first `dimension + 1` entries are used.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to the reference measure (1/2 or 1/6).
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reference_measure(&self) -> f64 {
        if self.dimension == 2 {
            0.5
        } else {
            1.0 / 6.0
        }
    }
}

/// Returns a rule exact for polynomials of total degree `exactness`.
pub fn quadrature(dimension: usize, exactness: usize) -> Result<QuadratureRule> {
    let exactness = exactness.max(1);
    match dimension {
        2 => Ok(triangle_rule(exactness)),
        3 => Ok(tet_rule(exactness)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn triangle_rule(exactness: usize) -> QuadratureRule {
    let sym3 = |a: f64| -> Vec<[f64; 4]> {
        let b = 1.0 - 2.0 * a;
        vec![[b, a, a, 0.0], [a, b, a, 0.0], [a, a, b, 0.0]]
    };
    let (points, weights): (Vec<[f64; 4]>, Vec<f64>) = match exactness {
        1 => (vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]], vec![0.5]),
        2 => (sym3(1.0 / 6.0), vec![1.0 / 6.0; 3]),
        4 => {
            let mut p = sym3(0.445_948_490_915_965);
            p.extend(sym3(0.091_576_213_509_771));
            let mut w = vec![0.5 * 0.223_381_589_678_011; 3];
            w.extend([0.5 * 0.109_951_743_655_322; 3]);
            (p, w)
        }
        5 => {
            let mut p = vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]];
            p.extend(sym3(0.470_142_064_105_115));
            p.extend(sym3(0.101_286_507_323_456));
            let mut w = vec![0.5 * 0.225];
            w.extend([0.5 * 0.132_394_152_788_506; 3]);
            w.extend([0.5 * 0.125_939_180_544_827; 3]);
            (p, w)
        }
        _ => return collapsed_triangle(exactness),
    };
    QuadratureRule {
        dimension: 2,
        exactness,
        points,
        weights,
    }
}

fn tet_rule(exactness: usize) -> QuadratureRule {
    match exactness {
        1 => QuadratureRule {
            dimension: 3,
            exactness,
            points: vec![[0.25; 4]],
            weights: vec![1.0 / 6.0],
        },
        2 => {
            let a = (5.0 - 5f64.sqrt()) / 20.0;
            let b = 1.0 - 3.0 * a;
            QuadratureRule {
                dimension: 3,
                exactness,
                points: vec![[b, a, a, a], [a, b, a, a], [a, a, b, a], [a, a, a, b]],
                weights: vec![1.0 / 24.0; 4],
            }
        }
        _ => collapsed_tet(exactness),
    }
}

fn collapsed_triangle(exactness: usize) -> QuadratureRule {
    let n = (exactness + 2) / 2;
    let (tu, wu) = gauss_jacobi_unit(n, 1);
    let (tv, wv) = gauss_jacobi_unit(n, 0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = tu[i];
            let y = (1.0 - tu[i]) * tv[j];
            points.push([1.0 - x - y, x, y, 0.0]);
            weights.push(wu[i] * wv[j]);
        }
    }
    QuadratureRule {
        dimension: 2,
        exactness,
        points,
        weights,
    }
}

fn collapsed_tet(exactness: usize) -> QuadratureRule {
    let n = (exactness + 2) / 2;
    let (tu, wu) = gauss_jacobi_unit(n, 2);
    let (tv, wv) = gauss_jacobi_unit(n, 1);
    let (tw, ww) = gauss_jacobi_unit(n, 0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = tu[i];
                let y = (1.0 - tu[i]) * tv[j];
                let z = (1.0 - tu[i]) * (1.0 - tv[j]) * tw[k];
                points.push([1.0 - x - y - z, x, y, z]);
                weights.push(wu[i] * wv[j] * ww[k]);
            }
        }
    }
    QuadratureRule {
        dimension: 3,
        exactness,
        points,
        weights,
    }
}

/// Gauss-Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^alpha`,
/// computed with the Golub-Welsch eigenvalue method.
pub(crate) fn gauss_jacobi_unit(n: usize, alpha: usize) -> (Vec<f64>, Vec<f64>) {
    let a = alpha as f64;
    // Jacobi weight (1-x)^a (1+x)^0 on [-1, 1]
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a;
        let diag = if k == 0 {
            -a / (a + 2.0)
        } else {
            -(a * a) / (s * (s + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let s1 = 2.0 * m + a;
            let beta = 4.0 * m * (m + a) * m * (m + a) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    // total mass of (1-x)^a on [-1,1]
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let scale = 2f64.powf(-a - 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let weights = pairs.iter().map(|p| p.1 * scale).collect();
    (nodes, weights)
}
