mod common;

use hocurve::accuracy::{accuracy, normal_gradient_variation};
use hocurve::geometry::GeometryModel;
use hocurve::mesh::{BoundaryClassification, BoundaryTriangle, HighOrderMesh, LinearMesh};
use rand::Rng;

/// Corner tet; the slanted face (mark 4) is the only wall face.
fn corner_tet() -> LinearMesh {
    let boundary = [([0, 2, 1], 1), ([0, 1, 3], 2), ([0, 3, 2], 3), ([3, 1, 2], 4)]
        .iter()
        .map(|&(vertices, mark)| BoundaryTriangle { vertices, mark })
        .collect();
    LinearMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 1, 2, 3]],
        boundary,
    )
}

fn classification(wall: u32) -> BoundaryClassification {
    BoundaryClassification {
        wall: [wall].into(),
        farfield: (1..=4).filter(|&m| m != wall).collect(),
        ..Default::default()
    }
}

fn model(patch: &str, mark: u32) -> GeometryModel {
    GeometryModel::from_json_str(&format!(
        r#"{{"virtual_surfaces": [{{"id": 1, "patches": [{patch}]}}], "mark_map": [{{"mark": {mark}, "surface": 1}}]}}"#
    ))
    .unwrap()
}

fn floor(z: f64) -> String {
    format!(r#"{{"kind": "plane", "origin": [0, 0, {z:?}], "u_axis": [1, 0, 0], "v_axis": [0, 1, 0]}}"#)
}

#[test]
fn face_on_its_surface_has_zero_distance() {
    let mesh = HighOrderMesh::straight(&corner_tet(), 3).unwrap();
    let a = accuracy(&mesh, &model(&floor(0.0), 1), &classification(1), 10, 4).unwrap();
    assert_eq!((a.sc, a.d2, a.dinf), (0.0, 0.0, 0.0));
    assert!((a.wall_area - 0.5).abs() < 1e-14);
}

#[test]
fn constant_offset_gives_equal_norms() {
    let h = 0.125;
    let mesh = HighOrderMesh::straight(&corner_tet(), 2).unwrap();
    let a = accuracy(&mesh, &model(&floor(-h), 1), &classification(1), 8, 4).unwrap();
    for v in [a.sc, a.d2, a.dinf] {
        assert!((v - h).abs() < 1e-14, "{v}");
    }
    let lc = mesh.characteristic_length();
    assert!((a.sc_relative - h / lc).abs() < 1e-14);
    assert_eq!(a.per_surface.len(), 1);
}

const UNIT_SPHERE: &str = r#"{"kind": "sphere", "center": [0, 0, 0], "radius": 1}"#;

#[test]
fn flat_triangle_under_sphere_matches_monte_carlo() {
    // the slanted face has its vertices on the unit sphere and lies inside it
    let mesh = HighOrderMesh::straight(&corner_tet(), 1).unwrap();
    let a = accuracy(&mesh, &model(UNIT_SPHERE, 4), &classification(4), 12, 8).unwrap();

    let mut rng = common::rng(31);
    let n = 400_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
        if u + v > 1.0 {
            (u, v) = (1.0 - u, 1.0 - v);
        }
        let p = [1.0 - u - v, u, v];
        let d = 1.0 - p.iter().map(|c| c * c).sum::<f64>().sqrt();
        s1 += d;
        s2 += d * d;
    }
    let sc = s1 / n as f64;
    let d2 = (s2 / n as f64).sqrt();
    assert!((a.sc - sc).abs() < 5e-3 * sc, "{} vs {sc}", a.sc);
    assert!((a.d2 - d2).abs() < 5e-3 * d2, "{} vs {d2}", a.d2);
    assert!(a.d2 >= a.sc && a.dinf >= a.d2);

    // farthest point is the centroid, within a 1/256 lattice spacing
    let dinf = 1.0 - 1.0 / 3f64.sqrt();
    assert!((a.dinf - dinf).abs() < 1e-3, "{} vs {dinf}", a.dinf);
    let at = a.dinf_location.unwrap().point;
    assert!(at.iter().all(|c| (c - 1.0 / 3.0).abs() < 4e-3), "{at:?}");
}

#[test]
fn flat_face_has_no_normal_variation() {
    let mut mesh = HighOrderMesh::straight(&corner_tet(), 3).unwrap();
    for f in 0..4 {
        assert!(normal_gradient_variation(&mesh, f, 6) < 1e-9);
    }
    // bending a face makes its normal vary
    let node = mesh.faces()[3].nodes[9];
    for c in &mut mesh.nodes_mut()[node] {
        *c += 0.05;
    }
    assert!(normal_gradient_variation(&mesh, 3, 6) > 1e-3);
}
