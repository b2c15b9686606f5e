//! Dense-sampling projection oracles.

use hocurve::fixtures::{bullet_geometry, BulletParams};
use hocurve::geometry::{GeometryModel, SurfacePatch, Trim, VirtualSurface};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|d| (a[d] - b[d]).powi(2)).sum()
}

/// Closest point on a parametric patch by grid sampling followed by
/// repeated local refinement of the sampling box. Returns the point and
/// the coarse-grid parameters to refine from.
fn coarse(patch: &SurfacePatch, x: [f64; 3]) -> (f64, f64, f64, Trim) {
    let bx = patch.parameter_box().unwrap_or(Trim {
        u: [-10.0, 10.0],
        v: [-10.0, 10.0],
    });
    let n = 60;
    let (mut bu, mut bv, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            let u = bx.u[0] + (bx.u[1] - bx.u[0]) * i as f64 / n as f64;
            let v = bx.v[0] + (bx.v[1] - bx.v[0]) * j as f64 / n as f64;
            let d = dist2(patch.evaluate(u, v).unwrap(), x);
            if d < best {
                (bu, bv, best) = (u, v, d);
            }
        }
    }
    (bu, bv, best.sqrt(), bx)
}

fn refine(patch: &SurfacePatch, x: [f64; 3], start: (f64, f64, f64, Trim)) -> [f64; 3] {
    let (mut bu, mut bv, _, bx) = start;
    let eval = |u: f64, v: f64| patch.evaluate(u, v).unwrap();
    let mut best = dist2(eval(bu, bv), x);
    let (mut hu, mut hv) = ((bx.u[1] - bx.u[0]) / 30.0, (bx.v[1] - bx.v[0]) / 30.0);
    let m = 4;
    for _ in 0..45 {
        let (cu, cv) = (bu, bv);
        for i in -m..=m {
            for j in -m..=m {
                let u = (cu + hu * i as f64 / m as f64).clamp(bx.u[0], bx.u[1]);
                let v = (cv + hv * j as f64 / m as f64).clamp(bx.v[0], bx.v[1]);
                let d = dist2(eval(u, v), x);
                if d < best {
                    (bu, bv, best) = (u, v, d);
                }
            }
        }
        hu *= 0.6;
        hv *= 0.6;
    }
    eval(bu, bv)
}

pub fn patch_oracle(patch: &SurfacePatch, x: [f64; 3]) -> [f64; 3] {
    refine(patch, x, coarse(patch, x))
}

pub fn surface_oracle(s: &VirtualSurface, x: [f64; 3]) -> [f64; 3] {
    let starts: Vec<_> = s.patches.iter().map(|p| coarse(p, x)).collect();
    let nearest = starts.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    s.patches
        .iter()
        .zip(starts)
        .filter(|(_, c)| c.2 < nearest + 0.2)
        .map(|(p, c)| refine(p, x, c))
        .min_by(|a, b| dist2(*a, x).total_cmp(&dist2(*b, x)))
        .unwrap()
}

/// Averaged composed projection with oracle surface projections, repeated
/// to its fixed point.
pub fn curve_oracle(model: &GeometryModel, curve: usize, x: [f64; 3]) -> [f64; 3] {
    let c = model.curve(curve).unwrap();
    let s1 = model.surface(c.left).unwrap();
    let s2 = model.surface(c.right).unwrap();
    let mut p = x;
    for _ in 0..30 {
        let b12 = surface_oracle(s1, surface_oracle(s2, p));
        let b21 = surface_oracle(s2, surface_oracle(s1, p));
        let next = std::array::from_fn(|d| 0.5 * (b12[d] + b21[d]));
        let step = dist2(next, p).sqrt();
        p = next;
        if step < 1e-12 {
            break;
        }
    }
    p
}

/// Point within `offset` of a random point of a random wall surface.
pub fn near_surface(rng: &mut ChaCha8Rng, model: &GeometryModel, offset: f64) -> (usize, [f64; 3]) {
    let s = &model.virtual_surfaces[rng.gen_range(0..model.virtual_surfaces.len())];
    let patch = &s.patches[rng.gen_range(0..s.patches.len())];
    let bx = patch.parameter_box().unwrap_or(Trim {
        u: [-2.0, 2.0],
        v: [-2.0, 2.0],
    });
    let u = rng.gen_range(bx.u[0]..bx.u[1]);
    let v = rng.gen_range(bx.v[0]..bx.v[1]);
    let p = patch.evaluate(u, v).unwrap();
    (s.id, std::array::from_fn(|d| p[d] + rng.gen_range(-offset..offset)))
}

pub fn variants() -> Vec<GeometryModel> {
    [0.0, 7.0]
        .iter()
        .map(|&j| {
            bullet_geometry(&BulletParams {
                normal_jump_deg: j,
                ..Default::default()
            })
        })
        .collect()
}

