//! Synthetic test geometry: a bullet made of a hemispherical nose, a
//! cylindrical (or slightly conical) body and a flat base, enclosed in a
//! far-field box, with a structured linear tetrahedral mesh.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryModel, MarkMapping, SurfacePatch, Trim, VirtualCurve, VirtualSurface};
use crate::mesh::linear::tet_volume6;
use crate::mesh::{BoundaryClassification, BoundaryTriangle, LinearMesh};

pub const MARK_NOSE: u32 = 1;
pub const MARK_BODY: u32 = 2;
pub const MARK_BASE: u32 = 3;
pub const MARK_FARFIELD: u32 = 4;

pub const SURFACE_NOSE: usize = 1;
pub const SURFACE_BODY: usize = 2;
pub const SURFACE_BASE: usize = 3;

pub const CURVE_JUNCTION: usize = 1;
pub const CURVE_RIM: usize = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulletParams {
    /// Target edge length on the body surface.
    pub h: f64,
    /// Angle between the nose and body normals at the junction, in degrees.
    /// Nonzero values turn the body into a cone flaring towards the base.
    pub normal_jump_deg: f64,
    /// Nose and body share one virtual surface and no element edge lies on
    /// the junction. Forced on when the normal jump is nonzero.
    pub merged_junction: bool,
    /// Body length below the junction.
    pub length: f64,
    /// Half-width of the far-field box.
    pub far_half_width: f64,
    /// Distance from the body to the far-field box along the axis.
    pub far_axial_margin: f64,
    pub layers: usize,
    pub growth: f64,
    /// Random displacement of interior volume nodes, relative to the local
    /// layer thickness.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for BulletParams {
    fn default() -> Self {
        Self {
            h: 0.5,
            normal_jump_deg: 0.0,
            merged_junction: false,
            length: 1.5,
            far_half_width: 3.0,
            far_axial_margin: 2.5,
            layers: 3,
            growth: 1.6,
            jitter: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bullet {
    pub params: BulletParams,
    pub mesh: LinearMesh,
    pub model: GeometryModel,
    pub classification: BoundaryClassification,
}

impl BulletParams {
    pub fn merged(&self) -> bool {
        self.merged_junction || self.normal_jump_deg != 0.0
    }

    fn slope(&self) -> f64 {
        -self.normal_jump_deg.to_radians().tan()
    }

    fn body_radius(&self, z: f64) -> f64 {
        1.0 + self.slope() * z
    }
}

fn quadrant(k: usize) -> [f64; 2] {
    let lo = -PI + k as f64 * FRAC_PI_2;
    [lo, lo + FRAC_PI_2]
}

pub fn bullet_geometry(p: &BulletParams) -> GeometryModel {
    let nose = (0..4)
        .map(|k| SurfacePatch::Sphere {
            center: [0.0; 3],
            radius: 1.0,
            axis: [0.0, 0.0, 1.0],
            ref_dir: Some([1.0, 0.0, 0.0]),
            trim: Some(Trim {
                u: quadrant(k),
                v: [0.0, FRAC_PI_2],
            }),
        })
        .collect::<Vec<_>>();
    let body = (0..4)
        .map(|k| {
            let trim = Trim {
                u: quadrant(k),
                v: [-p.length, 0.0],
            };
            if p.normal_jump_deg == 0.0 {
                SurfacePatch::Cylinder {
                    center: [0.0; 3],
                    axis: [0.0, 0.0, 1.0],
                    radius: 1.0,
                    ref_dir: Some([1.0, 0.0, 0.0]),
                    trim: Some(trim),
                }
            } else {
                SurfacePatch::Cone {
                    center: [0.0; 3],
                    axis: [0.0, 0.0, 1.0],
                    radius: 1.0,
                    slope: p.slope(),
                    ref_dir: Some([1.0, 0.0, 0.0]),
                    trim,
                }
            }
        })
        .collect::<Vec<_>>();
    let base = VirtualSurface {
        id: SURFACE_BASE,
        name: "base".into(),
        patches: vec![SurfacePatch::Plane {
            origin: [0.0, 0.0, -p.length],
            u_axis: [1.0, 0.0, 0.0],
            v_axis: [0.0, 1.0, 0.0],
            trim: None,
        }],
    };
    if p.merged() {
        let mut patches = nose;
        patches.extend(body);
        GeometryModel {
            virtual_surfaces: vec![
                VirtualSurface {
                    id: SURFACE_NOSE,
                    name: "nose_and_body".into(),
                    patches,
                },
                base,
            ],
            virtual_curves: vec![VirtualCurve {
                id: CURVE_RIM,
                name: "rim".into(),
                left: SURFACE_NOSE,
                right: SURFACE_BASE,
            }],
            mark_map: vec![
                MarkMapping {
                    mark: MARK_NOSE,
                    surface: SURFACE_NOSE,
                },
                MarkMapping {
                    mark: MARK_BODY,
                    surface: SURFACE_NOSE,
                },
                MarkMapping {
                    mark: MARK_BASE,
                    surface: SURFACE_BASE,
                },
            ],
            fixed_vertices: Vec::new(),
        }
    } else {
        GeometryModel {
            virtual_surfaces: vec![
                VirtualSurface {
                    id: SURFACE_NOSE,
                    name: "nose".into(),
                    patches: nose,
                },
                VirtualSurface {
                    id: SURFACE_BODY,
                    name: "body".into(),
                    patches: body,
                },
                base,
            ],
            virtual_curves: vec![
                VirtualCurve {
                    id: CURVE_JUNCTION,
                    name: "junction".into(),
                    left: SURFACE_NOSE,
                    right: SURFACE_BODY,
                },
                VirtualCurve {
                    id: CURVE_RIM,
                    name: "rim".into(),
                    left: SURFACE_BODY,
                    right: SURFACE_BASE,
                },
            ],
            mark_map: vec![
                MarkMapping {
                    mark: MARK_NOSE,
                    surface: SURFACE_NOSE,
                },
                MarkMapping {
                    mark: MARK_BODY,
                    surface: SURFACE_BODY,
                },
                MarkMapping {
                    mark: MARK_BASE,
                    surface: SURFACE_BASE,
                },
            ],
            fixed_vertices: Vec::new(),
        }
    }
}

pub fn bullet_classification() -> BoundaryClassification {
    BoundaryClassification {
        wall: [MARK_NOSE, MARK_BODY, MARK_BASE].into(),
        symmetry: Default::default(),
        farfield: [MARK_FARFIELD].into(),
    }
}

/// Side rows from the base rim (`-length`) to the top of the side band.
/// Negative values are heights on the body; values in `[0, 1]` are the
/// normalized elevation parameter of the nose band.
fn side_rows(p: &BulletParams, n: usize) -> Vec<f64> {
    let band = n.div_ceil(2);
    let arc = FRAC_PI_2 / n as f64;
    let m = ((p.length / arc).round() as usize).max(1);
    let dz = p.length / m as f64;
    let mut rows: Vec<f64> = (0..m).map(|j| -p.length + j as f64 * dz).collect();
    if p.merged() {
        rows.push(-0.5 * dz);
        rows.extend((1..=band).map(|k| (k as f64 - 0.5) / band as f64));
        rows.push(1.0);
    } else {
        rows.push(0.0);
        rows.extend((1..=band).map(|k| k as f64 / band as f64));
    }
    rows
}

struct Lattice {
    n: usize,
    rows: Vec<f64>,
}

impl Lattice {
    fn top(&self) -> usize {
        self.rows.len() - 1
    }

    /// Equiangular coordinate of lattice index `i` in `[-1, 1]`.
    fn tan_coord(&self, i: usize) -> f64 {
        (FRAC_PI_4 * (2.0 * i as f64 / self.n as f64 - 1.0)).tan()
    }

    fn is_surface(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0 || i == self.n || j == 0 || j == self.n || k == 0 || k == self.top()
    }

    fn body_point(&self, p: &BulletParams, i: usize, j: usize, k: usize) -> [f64; 3] {
        let x = self.tan_coord(i);
        let y = self.tan_coord(j);
        let m = x.abs().max(y.abs());
        let r = x.hypot(y);
        if k == self.top() {
            let s = (x * x + y * y + 1.0).sqrt();
            return [x / s, y / s, 1.0 / s];
        }
        if k == 0 {
            let scale = if r > 0.0 { m / r } else { 0.0 } * p.body_radius(-p.length);
            return [x * scale, y * scale, -p.length];
        }
        let t = self.rows[k];
        if t >= 0.0 {
            let z = (FRAC_PI_4 * t).tan();
            let s = (x * x + y * y + z * z).sqrt();
            [x / s, y / s, z / s]
        } else {
            let rad = p.body_radius(t) / r;
            [x * rad, y * rad, t]
        }
    }

    fn far_point(&self, p: &BulletParams, i: usize, j: usize, k: usize) -> [f64; 3] {
        let x = self.tan_coord(i);
        let y = self.tan_coord(j);
        let lo = -p.length - p.far_axial_margin;
        let hi = 1.0 + p.far_axial_margin;
        let z = lo + (hi - lo) * k as f64 / self.top() as f64;
        [p.far_half_width * x, p.far_half_width * y, z]
    }
}

/// Surface quad of the logical box with corners in (low,low), (high,low),
/// (high,high), (low,high) order of its global-axis-aligned local axes.
struct Quad {
    corners: [[usize; 3]; 4],
    mark: u32,
}

fn surface_quads(lat: &Lattice) -> Vec<(Quad, bool)> {
    let n = lat.n;
    let top = lat.top();
    let mut out = Vec::new();
    let mark_for_row = |k: usize, rows: &[f64]| {
        if rows[k] >= 0.0 {
            MARK_NOSE
        } else {
            MARK_BODY
        }
    };
    // faces normal to z: local axes (x, y); outward flag by side
    for &(k, mark, outward_positive) in &[(top, MARK_NOSE, true), (0, MARK_BASE, false)] {
        for i in 0..n {
            for j in 0..n {
                out.push((
                    Quad {
                        corners: [[i, j, k], [i + 1, j, k], [i + 1, j + 1, k], [i, j + 1, k]],
                        mark,
                    },
                    outward_positive,
                ));
            }
        }
    }
    // faces normal to x: local axes (y, z)
    for &(i, pos) in &[(n, true), (0, false)] {
        for j in 0..n {
            for k in 0..top {
                out.push((
                    Quad {
                        corners: [[i, j, k], [i, j + 1, k], [i, j + 1, k + 1], [i, j, k + 1]],
                        mark: mark_for_row(k, &lat.rows),
                    },
                    pos,
                ));
            }
        }
    }
    // faces normal to y: local axes (x, z)
    for &(j, pos) in &[(n, true), (0, false)] {
        for i in 0..n {
            for k in 0..top {
                out.push((
                    Quad {
                        corners: [[i, j, k], [i + 1, j, k], [i + 1, j, k + 1], [i, j, k + 1]],
                        mark: mark_for_row(k, &lat.rows),
                    },
                    pos,
                ));
            }
        }
    }
    out
}

/// Reverses the x and y local axes of quads in the upper half of the
/// lattice. The mirrored diagonals stay conforming and keep every base
/// corner triangle off two rim edges.
fn mirrored(c: &[[usize; 3]; 4], n: usize) -> [[usize; 3]; 4] {
    let mut c = *c;
    let axis = |a: &[usize; 3], b: &[usize; 3]| (0..3).find(|&d| a[d] != b[d]).expect("distinct corners");
    let d1 = axis(&c[0], &c[1]);
    if d1 < 2 && 2 * c[0][d1] >= n {
        c = [c[1], c[0], c[3], c[2]];
    }
    let d2 = axis(&c[0], &c[3]);
    if d2 < 2 && 2 * c[0][d2] >= n {
        c = [c[3], c[2], c[1], c[0]];
    }
    c
}

/// Kuhn split of a hexahedron given as `v[a][b][c]` with binary local
/// coordinates; all six tets share the main diagonal.
const KUHN_PARITY: [f64; 6] = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0];

fn kuhn_tets(v: &[[[usize; 2]; 2]; 2]) -> [[usize; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS.map(|perm| {
        let mut c = [0usize; 3];
        let mut tet = [0; 4];
        tet[0] = v[0][0][0];
        for (s, &axis) in perm.iter().enumerate() {
            c[axis] = 1;
            tet[s + 1] = v[c[0]][c[1]][c[2]];
        }
        tet
    })
}

pub fn bullet(p: &BulletParams) -> Result<Bullet> {
    if !(p.h > 0.0) || p.layers == 0 || !(p.growth >= 1.0) || !(p.length > 0.0) {
        return Err(Error::InvalidInput("bullet parameters out of range".into()));
    }
    if p.normal_jump_deg.abs() >= 45.0 {
        return Err(Error::InvalidInput("normal jump must be below 45 degrees".into()));
    }
    if p.far_half_width <= p.body_radius(-p.length) + 0.5 {
        return Err(Error::InvalidInput("far field too close to the body".into()));
    }
    let n = ((FRAC_PI_2 / p.h).round() as usize).max(2);
    let lat = Lattice {
        n,
        rows: side_rows(p, n),
    };
    let top = lat.top();

    // number the logical surface lattice
    let mut surface_id: HashMap<[usize; 3], usize> = HashMap::new();
    let mut surface_nodes = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=top {
                if lat.is_surface(i, j, k) {
                    surface_id.insert([i, j, k], surface_nodes.len());
                    surface_nodes.push([i, j, k]);
                }
            }
        }
    }
    let ns = surface_nodes.len();
    let nl = p.layers;
    let s_of = |l: usize| {
        if p.growth == 1.0 {
            l as f64 / nl as f64
        } else {
            (p.growth.powi(l as i32) - 1.0) / (p.growth.powi(nl as i32) - 1.0)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut vertices = Vec::with_capacity(ns * (nl + 1));
    for l in 0..=nl {
        let s = s_of(l);
        for &[i, j, k] in &surface_nodes {
            let a = lat.body_point(p, i, j, k);
            let b = lat.far_point(p, i, j, k);
            let mut x: [f64; 3] = std::array::from_fn(|d| a[d] + s * (b[d] - a[d]));
            if p.jitter > 0.0 && l > 0 && l < nl {
                let thickness = (s_of(l + 1) - s_of(l)).min(s_of(l) - s_of(l - 1))
                    * (0..3).map(|d| (b[d] - a[d]).powi(2)).sum::<f64>().sqrt();
                for c in x.iter_mut() {
                    *c += p.jitter * thickness * (rng.gen::<f64>() - 0.5);
                }
            }
            vertices.push(x);
        }
    }
    let vid = |c: &[usize; 3], l: usize| l * ns + surface_id[c];

    let quads = surface_quads(&lat);
    let mut tets = Vec::with_capacity(quads.len() * nl * 6);
    let mut boundary = Vec::new();
    for (quad, _) in &quads {
        let c = &mirrored(&quad.corners, n);
        for l in 0..nl {
            // local axes: quad axis 1, quad axis 2, layer direction
            let v = [
                [[vid(&c[0], l), vid(&c[0], l + 1)], [vid(&c[3], l), vid(&c[3], l + 1)]],
                [[vid(&c[1], l), vid(&c[1], l + 1)], [vid(&c[2], l), vid(&c[2], l + 1)]],
            ];
            let split = kuhn_tets(&v);
            // the Kuhn tets alternate orientation with permutation parity
            let signs: Vec<f64> = split
                .iter()
                .zip(KUHN_PARITY)
                .map(|(t, par)| par * tet_volume6(t.map(|i| vertices[i])))
                .collect();
            if !(signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)) {
                return Err(Error::Internal(format!(
                    "bullet hex {:?} at layer {l} is too distorted to split",
                    quad.corners
                )));
            }
            for mut t in split {
                if tet_volume6(t.map(|i| vertices[i])) < 0.0 {
                    t.swap(2, 3);
                }
                tets.push(t);
            }
        }
        // boundary triangles along the (low,low)-(high,high) diagonal
        for (layer, mark) in [(0, quad.mark), (nl, MARK_FARFIELD)] {
            let q = [vid(&c[0], layer), vid(&c[1], layer), vid(&c[2], layer), vid(&c[3], layer)];
            boundary.push(BoundaryTriangle {
                vertices: [q[0], q[1], q[2]],
                mark,
            });
            boundary.push(BoundaryTriangle {
                vertices: [q[0], q[2], q[3]],
                mark,
            });
        }
    }
    let mesh = LinearMesh::new(vertices, tets, boundary);
    mesh.validate()?;
    Ok(Bullet {
        params: p.clone(),
        mesh,
        model: bullet_geometry(p),
        classification: bullet_classification(),
    })
}
