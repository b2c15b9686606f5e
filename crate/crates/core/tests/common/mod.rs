#![allow(dead_code)]

pub mod oracle;

use hocurve::fixtures::{bullet, Bullet, BulletParams};
use hocurve::geometry::{classify_boundary_nodes, project_targets, NodeTargets};
use hocurve::mesh::HighOrderMesh;
use hocurve::objective::{Discretization, DiscretizationOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn coarse_bullet(jump: f64) -> Bullet {
    bullet(&BulletParams {
        h: 0.8,
        normal_jump_deg: jump,
        ..Default::default()
    })
    .unwrap()
}

/// Straight degree-`q` mesh of a fixture with its node classification.
pub struct Setup {
    pub bullet: Bullet,
    pub mesh: HighOrderMesh,
    pub targets: NodeTargets,
}

pub fn setup(q: usize, jump: f64) -> Setup {
    let bullet = coarse_bullet(jump);
    let mesh = HighOrderMesh::straight(&bullet.mesh, q).unwrap();
    let targets = classify_boundary_nodes(&mesh, &bullet.model, &bullet.classification).unwrap();
    Setup { bullet, mesh, targets }
}

pub fn discretization(s: &Setup, delta: f64) -> Discretization {
    let q = s.mesh.degree();
    Discretization::new(
        &s.mesh,
        &s.targets,
        DiscretizationOptions {
            exactness: 2 * q,
            boundary_exactness: 2 * q + 2,
            delta,
        },
    )
    .unwrap()
}

pub fn snapshot(s: &Setup) -> Vec<[f64; 3]> {
    project_targets(s.mesh.nodes(), &s.bullet.model, &s.targets)
        .unwrap()
        .positions
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn add_scaled(x: &[f64], s: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + s * b).collect()
}
