//! Distance between the curved wall boundary and its virtual surfaces.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryModel;
use crate::mesh::reference::triangle_lattice;
use crate::mesh::{quadrature, BoundaryClass, BoundaryClassification, HighOrderMesh, Tabulation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceLocation {
    pub face: usize,
    pub element: usize,
    /// Barycentric coordinates on the face.
    pub barycentric: [f64; 3],
    pub point: [f64; 3],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceAccuracy {
    pub surface: usize,
    pub faces: usize,
    pub area: f64,
    pub sc: f64,
    pub d2: f64,
    pub dinf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub sc: f64,
    pub d2: f64,
    pub dinf: f64,
    pub characteristic_length: f64,
    pub sc_relative: f64,
    pub d2_relative: f64,
    pub dinf_relative: f64,
    pub dinf_location: Option<DistanceLocation>,
    pub per_surface: Vec<SurfaceAccuracy>,
    pub wall_area: f64,
    /// Points per face in the maximum-distance sample set.
    pub samples_per_face: usize,
    pub low_precision_projections: usize,
}

/// Boundary sampling tables for one degree.
#[derive(Debug, Clone)]
pub struct AccuracySampler {
    weights: Vec<f64>,
    /// Sample points; the first `weights.len()` are the quadrature points.
    points: Vec<[f64; 4]>,
    tab: Tabulation,
}

impl AccuracySampler {
    /// Quadrature of the given exactness, plus the face lattice nodes and the
    /// lattice with `2^subdivision_level` divisions per edge for the maximum.
    pub fn new(mesh: &HighOrderMesh, exactness: usize, subdivision_level: u32) -> Result<Self> {
        let rule = quadrature(2, exactness)?;
        let tri = mesh.triangle_reference();
        let mut points = rule.points.clone();
        points.extend(tri.nodes());
        let div = 1usize << subdivision_level;
        for m in triangle_lattice(div) {
            let p = [m[0] as f64 / div as f64, m[1] as f64 / div as f64, m[2] as f64 / div as f64, 0.0];
            if !points[rule.len()..].iter().any(|q| (0..3).all(|i| (q[i] - p[i]).abs() < 1e-14)) {
                points.push(p);
            }
        }
        let tab = tri.tabulate(&points);
        Ok(Self {
            weights: rule.weights,
            points,
            tab,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.points.len()
    }

    fn eval(&self, mesh: &HighOrderMesh, f: usize, p: usize) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let mut x = Vector3::zeros();
        let mut xu = Vector3::zeros();
        let mut xv = Vector3::zeros();
        let vals = self.tab.values_at(p);
        let grads = self.tab.gradients_at(p);
        for (n, &id) in mesh.faces()[f].nodes.iter().enumerate() {
            let c = Vector3::from(mesh.nodes()[id]);
            x += c * vals[n];
            xu += c * grads[n][0];
            xv += c * grads[n][1];
        }
        (x, xu, xv)
    }
}

struct FaceAccuracy {
    area: f64,
    dist: f64,
    dist2: f64,
    max: DistanceLocation,
    low_precision: usize,
}

/// Wall faces with their virtual surface.
pub fn wall_faces(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        match classification.class_of(face.mark) {
            None => {
                return Err(Error::Classification(format!("mark {} is not classified", face.mark)));
            }
            Some(BoundaryClass::Wall) => {
                let s = model.surface_for_mark(face.mark).ok_or_else(|| {
                    Error::Classification(format!("wall mark {} has no virtual surface", face.mark))
                })?;
                out.push((f, s));
            }
            Some(_) => {}
        }
    }
    Ok(out)
}

pub fn accuracy(
    mesh: &HighOrderMesh,
    model: &GeometryModel,
    classification: &BoundaryClassification,
    exactness: usize,
    subdivision_level: u32,
) -> Result<AccuracyReport> {
    let sampler = AccuracySampler::new(mesh, exactness, subdivision_level)?;
    let faces = wall_faces(mesh, model, classification)?;
    let nq = sampler.weights.len();
    let results: Vec<FaceAccuracy> = faces
        .par_iter()
        .map(|&(f, s)| -> Result<FaceAccuracy> {
            let mut acc = FaceAccuracy {
                area: 0.0,
                dist: 0.0,
                dist2: 0.0,
                max: DistanceLocation {
                    face: f,
                    element: mesh.faces()[f].element,
                    barycentric: [0.0; 3],
                    point: [0.0; 3],
                    distance: -1.0,
                },
                low_precision: 0,
            };
            for p in 0..sampler.num_samples() {
                let (x, xu, xv) = sampler.eval(mesh, f, p);
                let proj = model.project_to_virtual_surface(s, &x.into())?;
                acc.low_precision += proj.low_precision as usize;
                let d = (x - Vector3::from(proj.point)).norm();
                if p < nq {
                    let w = sampler.weights[p] * xu.cross(&xv).norm();
                    acc.area += w;
                    acc.dist += w * d;
                    acc.dist2 += w * d * d;
                }
                if d > acc.max.distance {
                    let b = sampler.points[p];
                    acc.max.barycentric = [b[0], b[1], b[2]];
                    acc.max.point = x.into();
                    acc.max.distance = d;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut per: BTreeMap<usize, (usize, f64, f64, f64, f64)> = BTreeMap::new();
    let (mut area, mut dist, mut dist2) = (0.0, 0.0, 0.0);
    let mut best: Option<DistanceLocation> = None;
    let mut low = 0;
    for (&(_, s), r) in faces.iter().zip(&results) {
        let e = per.entry(s).or_insert((0, 0.0, 0.0, 0.0, 0.0));
        e.0 += 1;
        e.1 += r.area;
        e.2 += r.dist;
        e.3 += r.dist2;
        e.4 = e.4.max(r.max.distance);
        area += r.area;
        dist += r.dist;
        dist2 += r.dist2;
        low += r.low_precision;
        if best.is_none_or(|b| r.max.distance > b.distance) {
            best = Some(r.max);
        }
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let sc = ratio(dist, area);
    let d2 = ratio(dist2, area).sqrt();
    let dinf = best.map_or(0.0, |b| b.distance);
    let lc = mesh.characteristic_length();
    Ok(AccuracyReport {
        sc,
        d2,
        dinf,
        characteristic_length: lc,
        sc_relative: sc / lc,
        d2_relative: d2 / lc,
        dinf_relative: dinf / lc,
        dinf_location: best,
        per_surface: per
            .into_iter()
            .map(|(surface, (n, a, d, d2s, m))| SurfaceAccuracy {
                surface,
                faces: n,
                area: a,
                sc: ratio(d, a),
                d2: ratio(d2s, a).sqrt(),
                dinf: m,
            })
            .collect(),
        wall_area: area,
        samples_per_face: sampler.num_samples(),
        low_precision_projections: low,
    })
}

/// Spread (max minus min) over a face of the axial component of the surface
/// gradient of the normal's axial component, sampled on the lattice with
/// `divisions` intervals per edge.
pub fn normal_gradient_variation(mesh: &HighOrderMesh, face: usize, divisions: usize) -> f64 {
    let tri = mesh.triangle_reference();
    let nodes = &mesh.faces()[face].nodes;
    let eval = |u: f64, v: f64| -> (Vector3<f64>, Vector3<f64>) {
        let b = tri.eval_basis(&[1.0 - u - v, u, v, 0.0]);
        let mut xu = Vector3::zeros();
        let mut xv = Vector3::zeros();
        for (n, &id) in nodes.iter().enumerate() {
            let c = Vector3::from(mesh.nodes()[id]);
            xu += c * b.gradients[n][0];
            xv += c * b.gradients[n][1];
        }
        (xu, xv)
    };
    let nz = |u: f64, v: f64| {
        let (xu, xv) = eval(u, v);
        xu.cross(&xv).normalize().z
    };
    let h = 1e-5;
    let d = divisions as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in triangle_lattice(divisions) {
        // keep the difference stencil inside the triangle
        let u = (m[1] as f64 / d).clamp(h, 1.0 - 3.0 * h);
        let v = (m[2] as f64 / d).clamp(h, (1.0 - u - 2.0 * h).max(h));
        let fu = (nz(u + h, v) - nz(u - h, v)) / (2.0 * h);
        let fv = (nz(u, v + h) - nz(u, v - h)) / (2.0 * h);
        let (xu, xv) = eval(u, v);
        let g = Matrix2::new(xu.dot(&xu), xu.dot(&xv), xu.dot(&xv), xv.dot(&xv));
        let Some(gi) = g.try_inverse() else { continue };
        let c = gi * Vector2::new(fu, fv);
        let grad = xu * c[0] + xv * c[1];
        lo = lo.min(grad.z);
        hi = hi.max(grad.z);
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}
