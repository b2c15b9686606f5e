//! Analytic surface patches and their closest-point projections.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type V3 = Vector3<f64>;

/// Closed interval in one parameter direction.
pub type Interval = [f64; 2];

/// Rectangular trimming box in parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trim {
    pub u: Interval,
    pub v: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfacePatch {
    /// `origin + u * u_axis + v * v_axis`.
    Plane {
        origin: [f64; 3],
        u_axis: [f64; 3],
        v_axis: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trim: Option<Trim>,
    },
    /// Parameters: azimuth about `axis` measured from `ref_dir`, and polar
    /// angle from `axis` in `[0, pi]`.
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_axis")]
        axis: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_dir: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trim: Option<Trim>,
    },
    /// Parameters: azimuth and height along `axis` from `center`.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_dir: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trim: Option<Trim>,
    },
    /// Radius `radius + slope * h` at height `h`. Parameters: azimuth and
    /// height. The height range must keep the radius nonnegative.
    Cone {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_dir: Option<[f64; 3]>,
        trim: Trim,
    },
    /// Parameters: azimuth about `axis` and tube angle.
    Torus {
        center: [f64; 3],
        axis: [f64; 3],
        major_radius: f64,
        minor_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_dir: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trim: Option<Trim>,
    },
    /// Tensor-product Bezier patch over `[0,1]^2`; `control_points[i][j]`
    /// multiplies `B_i(u) B_j(v)`.
    Bezier { control_points: Vec<Vec<[f64; 3]>> },
    Triangulated {
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
    },
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: [f64; 3],
    /// Unit surface normal at `point` (orientation unspecified).
    pub normal: [f64; 3],
    /// Set when the iterative search fell back to grid sampling.
    pub low_precision: bool,
}

impl Projection {
    fn exact(point: V3, normal: V3) -> Self {
        Self {
            point: point.into(),
            normal: normal.into(),
            low_precision: false,
        }
    }

    pub fn distance_to(&self, x: &[f64; 3]) -> f64 {
        (v3(&self.point) - v3(x)).norm()
    }
}

pub(crate) fn v3(p: &[f64; 3]) -> V3 {
    V3::new(p[0], p[1], p[2])
}

/// Orthonormal frame with `e3` along the axis.
#[derive(Debug, Clone, Copy)]
struct Frame {
    origin: V3,
    e1: V3,
    e2: V3,
    e3: V3,
}

impl Frame {
    fn new(origin: &[f64; 3], axis: &[f64; 3], ref_dir: Option<&[f64; 3]>) -> Self {
        let e3 = v3(axis).normalize();
        let seed = match ref_dir {
            Some(r) => v3(r),
            None => {
                let a = e3.abs();
                if a.x <= a.y && a.x <= a.z {
                    V3::x()
                } else if a.y <= a.z {
                    V3::y()
                } else {
                    V3::z()
                }
            }
        };
        let e1 = (seed - e3 * seed.dot(&e3)).normalize();
        let e2 = e3.cross(&e1);
        Self {
            origin: v3(origin),
            e1,
            e2,
            e3,
        }
    }

    /// Cylindrical coordinates (rho, theta, z) of `x`.
    fn cylindrical(&self, x: &V3) -> (f64, f64, f64) {
        let r = x - self.origin;
        let a = r.dot(&self.e1);
        let b = r.dot(&self.e2);
        (a.hypot(b), b.atan2(a), r.dot(&self.e3))
    }

    fn radial(&self, theta: f64) -> V3 {
        self.e1 * theta.cos() + self.e2 * theta.sin()
    }
}

/// `target` shifted by whole turns into `[lo, lo + 2 pi)`.
fn wrap_from(target: f64, lo: f64) -> f64 {
    let mut t = target;
    while t < lo {
        t += 2.0 * PI;
    }
    while t >= lo + 2.0 * PI {
        t -= 2.0 * PI;
    }
    t
}

/// Angle in `[lo, hi]` maximizing `cos(angle - target)`.
fn best_angle(target: f64, lo: f64, hi: f64) -> f64 {
    let t = wrap_from(target, lo);
    if t <= hi {
        return t;
    }
    if (lo - target).cos() >= (hi - target).cos() {
        lo
    } else {
        hi
    }
}

fn angle_in(target: f64, lo: f64, hi: f64) -> bool {
    wrap_from(target, lo) <= hi
}

const FULL_TURN: Interval = [-PI, PI];

fn check_trim(t: &Trim) -> Result<()> {
    let ok = |i: &Interval| i[0].is_finite() && i[1].is_finite() && i[0] <= i[1];
    if ok(&t.u) && ok(&t.v) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("empty or non-finite trimming box {t:?}")))
    }
}

impl SurfacePatch {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        let unit = |a: &[f64; 3]| v3(a).norm() > 0.0 && a.iter().all(|c| c.is_finite());
        match self {
            SurfacePatch::Plane { u_axis, v_axis, trim, .. } => {
                if v3(u_axis).cross(&v3(v_axis)).norm() == 0.0 {
                    return bad("plane axes are parallel");
                }
                if let Some(t) = trim {
                    check_trim(t)?;
                }
            }
            SurfacePatch::Sphere { radius, axis, trim, .. } => {
                if !(*radius > 0.0) || !unit(axis) {
                    return bad("sphere needs a positive radius and nonzero axis");
                }
                if let Some(t) = trim {
                    check_trim(t)?;
                    if t.v[0] < 0.0 || t.v[1] > PI {
                        return bad("sphere polar range must lie in [0, pi]");
                    }
                }
            }
            SurfacePatch::Cylinder { radius, axis, trim, .. } => {
                if !(*radius > 0.0) || !unit(axis) {
                    return bad("cylinder needs a positive radius and nonzero axis");
                }
                if let Some(t) = trim {
                    check_trim(t)?;
                }
            }
            SurfacePatch::Cone {
                radius,
                slope,
                axis,
                trim,
                ..
            } => {
                check_trim(trim)?;
                if !unit(axis) || !radius.is_finite() || !slope.is_finite() {
                    return bad("cone needs a nonzero axis");
                }
                if radius + slope * trim.v[0] < 0.0 || radius + slope * trim.v[1] < 0.0 {
                    return bad("cone radius becomes negative inside the trimming box");
                }
            }
            SurfacePatch::Torus {
                major_radius,
                minor_radius,
                axis,
                trim,
                ..
            } => {
                if !(*minor_radius > 0.0) || !(major_radius > minor_radius) || !unit(axis) {
                    return bad("torus needs 0 < minor radius < major radius");
                }
                if let Some(t) = trim {
                    check_trim(t)?;
                }
            }
            SurfacePatch::Bezier { control_points } => {
                let m = control_points.len();
                if !(2..=4).contains(&m) {
                    return bad("Bezier patch degree must be 1..=3 in u");
                }
                let n = control_points[0].len();
                if !(2..=4).contains(&n) || control_points.iter().any(|r| r.len() != n) {
                    return bad("Bezier patch degree must be 1..=3 in v with a rectangular net");
                }
            }
            SurfacePatch::Triangulated { vertices, triangles } => {
                if triangles.is_empty() {
                    return bad("triangulated patch has no triangles");
                }
                if triangles.iter().flatten().any(|&i| i >= vertices.len()) {
                    return bad("triangulated patch references a missing vertex");
                }
            }
        }
        Ok(())
    }

    /// Closest point on the patch to `x`.
    pub fn project(&self, x: &[f64; 3]) -> Projection {
        let p = v3(x);
        match self {
            SurfacePatch::Plane {
                origin,
                u_axis,
                v_axis,
                trim,
            } => project_plane(&v3(origin), &v3(u_axis), &v3(v_axis), trim.as_ref(), &p),
            SurfacePatch::Sphere {
                center,
                radius,
                axis,
                ref_dir,
                trim,
            } => {
                let frame = Frame::new(center, axis, ref_dir.as_ref());
                let trim = trim.unwrap_or(Trim {
                    u: FULL_TURN,
                    v: [0.0, PI],
                });
                project_sphere(&frame, *radius, &trim, &p)
            }
            SurfacePatch::Cylinder {
                center,
                axis,
                radius,
                ref_dir,
                trim,
            } => {
                let frame = Frame::new(center, axis, ref_dir.as_ref());
                let (_, theta, z) = frame.cylindrical(&p);
                let (theta, z) = match trim {
                    Some(t) => (best_angle(theta, t.u[0], t.u[1]), z.clamp(t.v[0], t.v[1])),
                    None => (theta, z),
                };
                let d = frame.radial(theta);
                Projection::exact(frame.origin + d * *radius + frame.e3 * z, d)
            }
            SurfacePatch::Cone {
                center,
                axis,
                radius,
                slope,
                ref_dir,
                trim,
            } => {
                let frame = Frame::new(center, axis, ref_dir.as_ref());
                let (rho, theta_p, z) = frame.cylindrical(&p);
                let theta = best_angle(theta_p, trim.u[0], trim.u[1]);
                let d = frame.radial(theta);
                let c = rho * (theta - theta_p).cos();
                let h = ((z + slope * (c - radius)) / (1.0 + slope * slope)).clamp(trim.v[0], trim.v[1]);
                let r = radius + slope * h;
                let n = (d - frame.e3 * *slope).normalize();
                Projection::exact(frame.origin + d * r + frame.e3 * h, n)
            }
            SurfacePatch::Torus {
                center,
                axis,
                major_radius,
                minor_radius,
                ref_dir,
                trim,
            } => {
                let frame = Frame::new(center, axis, ref_dir.as_ref());
                let (rho, theta_p, z) = frame.cylindrical(&p);
                let trim = trim.unwrap_or(Trim {
                    u: FULL_TURN,
                    v: FULL_TURN,
                });
                let theta = best_angle(theta_p, trim.u[0], trim.u[1]);
                let s = rho * (theta - theta_p).cos();
                let psi = best_angle(z.atan2(s - major_radius), trim.v[0], trim.v[1]);
                let d = frame.radial(theta);
                let n = d * psi.cos() + frame.e3 * psi.sin();
                Projection::exact(frame.origin + d * *major_radius + n * *minor_radius, n)
            }
            SurfacePatch::Bezier { control_points } => project_bezier(control_points, &p),
            SurfacePatch::Triangulated { vertices, triangles } => {
                let mut best: Option<(f64, V3, V3)> = None;
                for t in triangles {
                    let [a, b, c] = t.map(|i| v3(&vertices[i]));
                    let q = closest_on_triangle(&p, &a, &b, &c);
                    let d = (q - p).norm_squared();
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        let n = (b - a).cross(&(c - a)).normalize();
                        best = Some((d, q, n));
                    }
                }
                let (_, q, n) = best.expect("validated patch has triangles");
                Projection::exact(q, n)
            }
        }
    }

    /// Parameter box, when the patch is bounded and parametric.
    pub fn parameter_box(&self) -> Option<Trim> {
        match self {
            SurfacePatch::Plane { trim, .. } | SurfacePatch::Cylinder { trim, .. } => *trim,
            SurfacePatch::Sphere { trim, .. } => Some(trim.unwrap_or(Trim {
                u: FULL_TURN,
                v: [0.0, PI],
            })),
            SurfacePatch::Cone { trim, .. } => Some(*trim),
            SurfacePatch::Torus { trim, .. } => Some(trim.unwrap_or(Trim {
                u: FULL_TURN,
                v: FULL_TURN,
            })),
            SurfacePatch::Bezier { .. } => Some(Trim {
                u: [0.0, 1.0],
                v: [0.0, 1.0],
            }),
            SurfacePatch::Triangulated { .. } => None,
        }
    }

    /// Surface point at parameters `(u, v)`; `None` for triangulated patches.
    pub fn evaluate(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        let p = match self {
            SurfacePatch::Plane {
                origin, u_axis, v_axis, ..
            } => v3(origin) + v3(u_axis) * u + v3(v_axis) * v,
            SurfacePatch::Sphere {
                center,
                radius,
                axis,
                ref_dir,
                ..
            } => {
                let f = Frame::new(center, axis, ref_dir.as_ref());
                f.origin + (f.radial(u) * v.sin() + f.e3 * v.cos()) * *radius
            }
            SurfacePatch::Cylinder {
                center,
                axis,
                radius,
                ref_dir,
                ..
            } => {
                let f = Frame::new(center, axis, ref_dir.as_ref());
                f.origin + f.radial(u) * *radius + f.e3 * v
            }
            SurfacePatch::Cone {
                center,
                axis,
                radius,
                slope,
                ref_dir,
                ..
            } => {
                let f = Frame::new(center, axis, ref_dir.as_ref());
                f.origin + f.radial(u) * (radius + slope * v) + f.e3 * v
            }
            SurfacePatch::Torus {
                center,
                axis,
                major_radius,
                minor_radius,
                ref_dir,
                ..
            } => {
                let f = Frame::new(center, axis, ref_dir.as_ref());
                let d = f.radial(u);
                f.origin + d * *major_radius + (d * v.cos() + f.e3 * v.sin()) * *minor_radius
            }
            SurfacePatch::Bezier { control_points } => bezier_eval(control_points, u, v).0,
            SurfacePatch::Triangulated { .. } => return None,
        };
        Some(p.into())
    }
}

fn project_plane(o: &V3, a: &V3, b: &V3, trim: Option<&Trim>, p: &V3) -> Projection {
    let n = a.cross(b).normalize();
    let g = Matrix2::new(a.dot(a), a.dot(b), a.dot(b), b.dot(b));
    let r = p - o;
    let rhs = Vector2::new(r.dot(a), r.dot(b));
    let uv = g.lu().solve(&rhs).unwrap_or_else(Vector2::zeros);
    let at = |u: f64, v: f64| o + a * u + b * v;
    let Some(t) = trim else {
        return Projection::exact(at(uv[0], uv[1]), n);
    };
    if (t.u[0]..=t.u[1]).contains(&uv[0]) && (t.v[0]..=t.v[1]).contains(&uv[1]) {
        return Projection::exact(at(uv[0], uv[1]), n);
    }
    let mut best = (f64::INFINITY, V3::zeros());
    for &u in &t.u {
        let v = ((p - o - a * u).dot(b) / b.dot(b)).clamp(t.v[0], t.v[1]);
        let q = at(u, v);
        let d = (q - p).norm_squared();
        if d < best.0 {
            best = (d, q);
        }
    }
    for &v in &t.v {
        let u = ((p - o - b * v).dot(a) / a.dot(a)).clamp(t.u[0], t.u[1]);
        let q = at(u, v);
        let d = (q - p).norm_squared();
        if d < best.0 {
            best = (d, q);
        }
    }
    Projection::exact(best.1, n)
}

fn project_sphere(f: &Frame, radius: f64, t: &Trim, p: &V3) -> Projection {
    let (rho, theta, z) = f.cylindrical(p);
    let phi = rho.atan2(z);
    let point = |theta: f64, phi: f64| {
        let n = f.radial(theta) * phi.sin() + f.e3 * phi.cos();
        (f.origin + n * radius, n)
    };
    if angle_in(theta, t.u[0], t.u[1]) && phi >= t.v[0] && phi <= t.v[1] {
        let (q, n) = point(theta, phi);
        return Projection::exact(q, n);
    }
    let mut best: Option<(f64, V3, V3)> = None;
    let mut consider = |theta: f64, phi: f64| {
        let (q, n) = point(theta, phi);
        let d = (q - p).norm_squared();
        if best.is_none_or(|(bd, _, _)| d < bd) {
            best = Some((d, q, n));
        }
    };
    let r = p - f.origin;
    for &th in &t.u {
        let s = r.dot(&f.radial(th));
        consider(th, best_angle(s.atan2(z), t.v[0], t.v[1]));
    }
    for &ph in &t.v {
        consider(best_angle(theta, t.u[0], t.u[1]), ph);
    }
    let (_, q, n) = best.expect("four candidates");
    Projection::exact(q, n)
}

fn bernstein(n: usize, t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s = 1.0 - t;
    let mut b = [0.0; 4];
    let mut d1 = [0.0; 4];
    let mut d2 = [0.0; 4];
    match n {
        1 => {
            b[..2].copy_from_slice(&[s, t]);
            d1[..2].copy_from_slice(&[-1.0, 1.0]);
        }
        2 => {
            b[..3].copy_from_slice(&[s * s, 2.0 * s * t, t * t]);
            d1[..3].copy_from_slice(&[-2.0 * s, 2.0 * (s - t), 2.0 * t]);
            d2[..3].copy_from_slice(&[2.0, -4.0, 2.0]);
        }
        _ => {
            b = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
            d1 = [-3.0 * s * s, 3.0 * s * (s - 2.0 * t), 3.0 * t * (2.0 * s - t), 3.0 * t * t];
            d2 = [6.0 * s, 6.0 * (3.0 * t - 2.0), 6.0 * (1.0 - 3.0 * t), 6.0 * t];
        }
    }
    (b, d1, d2)
}

/// Point, first derivatives and second derivatives (uu, uv, vv).
fn bezier_eval(cp: &[Vec<[f64; 3]>], u: f64, v: f64) -> (V3, [V3; 2], [V3; 3]) {
    let (bu, du, ddu) = bernstein(cp.len() - 1, u);
    let (bv, dv, ddv) = bernstein(cp[0].len() - 1, v);
    let mut s = V3::zeros();
    let mut d = [V3::zeros(); 2];
    let mut dd = [V3::zeros(); 3];
    for (i, row) in cp.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let c = v3(c);
            s += c * (bu[i] * bv[j]);
            d[0] += c * (du[i] * bv[j]);
            d[1] += c * (bu[i] * dv[j]);
            dd[0] += c * (ddu[i] * bv[j]);
            dd[1] += c * (du[i] * dv[j]);
            dd[2] += c * (bu[i] * ddv[j]);
        }
    }
    (s, d, dd)
}

fn bezier_normal(cp: &[Vec<[f64; 3]>], u: f64, v: f64) -> V3 {
    let (_, d, _) = bezier_eval(cp, u, v);
    let n = d[0].cross(&d[1]);
    if n.norm() > 0.0 {
        n.normalize()
    } else {
        V3::z()
    }
}

/// Projected Newton on `0.5 |S(u,v) - p|^2` over the unit square.
fn bezier_newton(cp: &[Vec<[f64; 3]>], p: &V3, start: Vector2<f64>) -> (Vector2<f64>, f64, bool) {
    let dist = |uv: &Vector2<f64>| (bezier_eval(cp, uv[0], uv[1]).0 - p).norm_squared();
    let mut uv = start;
    let mut f = dist(&uv);
    for _ in 0..100 {
        let (s, d, dd) = bezier_eval(cp, uv[0], uv[1]);
        let r = s - p;
        let g = Vector2::new(r.dot(&d[0]), r.dot(&d[1]));
        let h = Matrix2::new(
            d[0].dot(&d[0]) + r.dot(&dd[0]),
            d[0].dot(&d[1]) + r.dot(&dd[1]),
            d[0].dot(&d[1]) + r.dot(&dd[1]),
            d[1].dot(&d[1]) + r.dot(&dd[2]),
        );
        // directions blocked by active bounds are dropped
        let free = |k: usize| !((uv[k] <= 0.0 && g[k] > 0.0) || (uv[k] >= 1.0 && g[k] < 0.0));
        let mut step = Vector2::zeros();
        let newton = match (free(0), free(1)) {
            (true, true) if h.determinant() > 0.0 && h[(0, 0)] > 0.0 => h.lu().solve(&(-g)),
            (true, false) if h[(0, 0)] > 0.0 => Some(Vector2::new(-g[0] / h[(0, 0)], 0.0)),
            (false, true) if h[(1, 1)] > 0.0 => Some(Vector2::new(0.0, -g[1] / h[(1, 1)])),
            (false, false) => return (uv, f, true),
            _ => None,
        };
        match newton {
            Some(s) => step = s,
            None => {
                let scale = d[0].norm_squared().max(d[1].norm_squared()).max(1e-300);
                for k in 0..2 {
                    if free(k) {
                        step[k] = -g[k] / scale;
                    }
                }
            }
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = (uv + step * alpha).map(|c| c.clamp(0.0, 1.0));
            let ft = dist(&trial);
            if ft <= f {
                let moved = (trial - uv).norm();
                uv = trial;
                f = ft;
                accepted = true;
                if moved < 1e-15 {
                    return (uv, f, true);
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (uv, f, true);
        }
    }
    (uv, f, false)
}

fn project_bezier(cp: &[Vec<[f64; 3]>], p: &V3) -> Projection {
    let mut best: Option<(f64, Vector2<f64>)> = None;
    let mut any_converged = false;
    for i in 0..4 {
        for j in 0..4 {
            let start = Vector2::new((i as f64 + 0.5) / 4.0, (j as f64 + 0.5) / 4.0);
            let (uv, f, converged) = bezier_newton(cp, p, start);
            any_converged |= converged;
            if converged && best.is_none_or(|(bf, _)| f < bf) {
                best = Some((f, uv));
            }
        }
    }
    if let (Some((_, uv)), true) = (best, any_converged) {
        let q = bezier_eval(cp, uv[0], uv[1]).0;
        return Projection::exact(q, bezier_normal(cp, uv[0], uv[1]));
    }
    let n = 400;
    let mut grid_best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let d = (bezier_eval(cp, u, v).0 - p).norm_squared();
            if d < grid_best.0 {
                grid_best = (d, u, v);
            }
        }
    }
    let (_, u, v) = grid_best;
    Projection {
        point: bezier_eval(cp, u, v).0.into(),
        normal: bezier_normal(cp, u, v).into(),
        low_precision: true,
    }
}

/// Closest point on triangle `abc` (Ericson, Real-Time Collision Detection).
pub(crate) fn closest_on_triangle(p: &V3, a: &V3, b: &V3, c: &V3) -> V3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
