mod common;

use hocurve::distortion::{mesh_quality, pointwise_eta, QualitySampler};
use hocurve::mesh::{quadrature, BoundaryTriangle, HighOrderMesh, LinearMesh};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;

fn unit_tet() -> LinearMesh {
    let boundary = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [3, 1, 2]]
        .iter()
        .map(|&vertices| BoundaryTriangle { vertices, mark: 1 })
        .collect();
    LinearMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.2, 0.9, 0.0], [0.3, 0.1, 0.8]],
        vec![[0, 1, 2, 3]],
        boundary,
    )
}

fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Uniform random barycentric point in the reference tet.
fn random_bary(rng: &mut impl Rng) -> [f64; 4] {
    let mut c = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    c.sort_by(f64::total_cmp);
    [c[0], c[1] - c[0], c[2] - c[1], 1.0 - c[2]]
}

#[test]
fn distortion_identities() {
    let mut rng = common::rng(21);
    assert!((pointwise_eta(&Matrix3::identity()) - 1.0).abs() < 1e-12);
    for _ in 0..100 {
        let s = rng.gen_range(0.1..10.0);
        let j = random_rotation(&mut rng).matrix() * s;
        assert!((pointwise_eta(&j) - 1.0).abs() < 1e-12);
    }
    let j = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0));
    assert!((pointwise_eta(&j) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    for det in [0.0, -0.5, -3.0] {
        let j = Matrix3::from_diagonal(&Vector3::new(det, 1.0, 1.0));
        assert_eq!(pointwise_eta(&j), f64::INFINITY);
    }
}

#[test]
fn straight_elements_have_unit_quality() {
    for jump in [0.0, 7.0] {
        let b = common::coarse_bullet(jump);
        for q in 1..=4 {
            let mesh = HighOrderMesh::straight(&b.mesh, q).unwrap();
            for e in mesh_quality(&mesh, 2 * q + 4, 2).unwrap() {
                assert!((e.shape_quality - 1.0).abs() < 1e-12, "q={q} element {}", e.element);
                assert!((e.scaled_jacobian - 1.0).abs() < 1e-12, "q={q} element {}", e.element);
            }
        }
    }
}

fn bumped(q: usize, amount: f64) -> HighOrderMesh {
    let linear = unit_tet();
    let mut mesh = HighOrderMesh::straight(&linear, q).unwrap();
    // push the first edge node off the edge, along the face normal
    let n = mesh.element_nodes(0)[4];
    let len = 1.0;
    mesh.nodes_mut()[n][2] += amount * len;
    mesh
}

#[test]
fn scaled_and_rotated_meshes_keep_quality() {
    let mesh = bumped(3, 0.1);
    let base = mesh_quality(&mesh, 10, 3).unwrap()[0];
    let mut rng = common::rng(22);
    let r = random_rotation(&mut rng);
    let mut moved = mesh.clone();
    for p in moved.nodes_mut() {
        let v = r * Vector3::from(*p) * 2.0;
        *p = v.into();
    }
    let other = mesh_quality(&moved, 10, 3).unwrap()[0];
    assert!((base.shape_quality - other.shape_quality).abs() < 1e-12);
    assert!((base.scaled_jacobian - other.scaled_jacobian).abs() < 1e-12);
    assert!(base.shape_quality < 1.0);
}

#[test]
fn shape_quality_matches_refined_quadrature() {
    let mesh = bumped(2, 0.1);
    let sampler = QualitySampler::new(&mesh, 8, 4).unwrap();
    let got = sampler.element_quality(&mesh, 0).shape_quality;
    let rule = quadrature(3, 20).unwrap();
    let (mut sum, mut wsum) = (0.0, 0.0);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let eta = pointwise_eta(&mesh.element_jacobian(0, p).unwrap());
        sum += w * eta * eta;
        wsum += w;
    }
    let oracle = 1.0 / (sum / wsum).sqrt();
    assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
}

#[test]
fn scaled_jacobian_matches_dense_sampling() {
    let mesh = bumped(2, 0.1);
    let got = mesh_quality(&mesh, 8, 4).unwrap()[0].scaled_jacobian;
    let mut rng = common::rng(23);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    // fine lattice, which includes the corners and edges, plus random interior points
    let n = 60;
    let mut points = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            for k in 0..=n - i - j {
                let (a, b, c) = (i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64);
                points.push([1.0 - a - b - c, a, b, c]);
            }
        }
    }
    points.extend((0..100_000).map(|_| random_bary(&mut rng)));
    for p in &points {
        let d = mesh.element_jacobian(0, p).unwrap().determinant();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    assert!((got - lo / hi).abs() < 1e-3, "{got} vs {}", lo / hi);
}

#[test]
fn reflected_element_is_invalid() {
    let mut mesh = HighOrderMesh::straight(&unit_tet(), 2).unwrap();
    for p in mesh.nodes_mut() {
        p[0] = -p[0];
    }
    let e = mesh_quality(&mesh, 8, 2).unwrap()[0];
    assert!(e.scaled_jacobian <= 0.0);
    assert_eq!(e.shape_quality, 0.0);
    assert!(!e.is_valid());
}
