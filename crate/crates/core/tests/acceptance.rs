//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::oracle::{curve_oracle, dist2, near_surface, surface_oracle, variants};
use hocurve::accuracy::{normal_gradient_variation, wall_faces, AccuracyReport};
use hocurve::distortion::{pointwise_eta, ElementQuality};
use hocurve::fixtures::{bullet, Bullet, BulletParams};
use hocurve::io::{measure, QualitySummary};
use hocurve::mesh::HighOrderMesh;
use hocurve::objective::{Objective, PenaltyProblem};
use hocurve::solver::{curve_high_order, curve_mesh, DegreeSummary, SolverConfig};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;

const RESOLUTIONS: [f64; 3] = [0.8, 0.5, 0.4];
const DEGREES: [usize; 3] = [2, 3, 4];
const CASE_BUDGET_S: f64 = 300.0;

struct Run {
    h: f64,
    q: usize,
    mesh: HighOrderMesh,
    degree: DegreeSummary,
    converged: bool,
    /// Curving time including the lower degrees it continued from.
    seconds: f64,
    newton_at_degree: usize,
    qualities: Vec<ElementQuality>,
    summary: QualitySummary,
    accuracy: AccuracyReport,
}

struct Case {
    bullet: Bullet,
    runs: Vec<Run>,
}

fn fixture(h: f64, jump: f64) -> Bullet {
    bullet(&BulletParams {
        h,
        normal_jump_deg: jump,
        ..Default::default()
    })
    .unwrap()
}

/// Curves degree by degree, carrying the penalty over, and measures each
/// degree on the way.
fn run_case(h: f64) -> Case {
    let b = fixture(h, 0.0);
    let mut config = SolverConfig::default();
    let mut mesh = HighOrderMesh::straight(&b.mesh, DEGREES[0]).unwrap();
    let mut elapsed = 0.0;
    let mut runs = Vec::new();
    for q in DEGREES {
        config.degree = q;
        let t = Instant::now();
        let r = curve_high_order(&mut mesh, &b.model, &b.classification, &config, &[q]).unwrap();
        elapsed += t.elapsed().as_secs_f64();
        let (qualities, summary, accuracy) = measure(&r.mesh, &b.model, &b.classification, &config).unwrap();
        let degree = r.degrees[0].clone();
        config.initial_penalty = degree.final_mu;
        runs.push(Run {
            h,
            q,
            mesh: r.mesh.clone(),
            converged: r.converged,
            seconds: elapsed,
            newton_at_degree: r.trace.newton_iterations_at(q),
            degree,
            qualities,
            summary,
            accuracy,
        });
        println!(
            "  h={h} q={q}: {:.1}s, {} stages, {} Newton iterations",
            elapsed,
            runs.last().unwrap().degree.stages,
            runs.last().unwrap().newton_at_degree
        );
    }
    Case { bullet: b, runs }
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn convergence_ok(d: &DegreeSummary, converged: bool, lc: f64) -> bool {
    converged && d.boundary_error < 1e-12 * lc && d.gradient_inf < 1e-8
}

fn validity(cases: &[Case]) -> Outcome {
    let mut bad = Vec::new();
    let mut slowest: f64 = 0.0;
    for r in cases.iter().flat_map(|c| &c.runs) {
        let valid = r.qualities.iter().all(|e| e.scaled_jacobian > 0.0 && e.shape_quality > 0.0);
        slowest = slowest.max(r.seconds);
        if !valid || r.seconds >= CASE_BUDGET_S {
            bad.push(format!(
                "h={} q={}: min qS {:.3} min qSJ {:.3} {:.0}s",
                r.h, r.q, r.summary.min_shape_quality.value, r.summary.min_scaled_jacobian.value, r.seconds
            ));
        }
    }
    let min_sj = cases
        .iter()
        .flat_map(|c| &c.runs)
        .map(|r| r.summary.min_scaled_jacobian.value)
        .fold(f64::INFINITY, f64::min);
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("all elements valid, min qSJ {min_sj:.3}, slowest case {slowest:.1}s")
        } else {
            bad.join("; ")
        },
    )
}

fn convergence(cases: &[Case], extra: &[(&str, &DegreeSummary, bool, f64)]) -> Outcome {
    let mut bad = Vec::new();
    let (mut worst_b, mut worst_g): (f64, f64) = (0.0, 0.0);
    for r in cases.iter().flat_map(|c| &c.runs) {
        let lc = r.mesh.characteristic_length();
        worst_b = worst_b.max(r.degree.boundary_error / lc);
        worst_g = worst_g.max(r.degree.gradient_inf);
        if !convergence_ok(&r.degree, r.converged, lc) {
            bad.push(format!("h={} q={}", r.h, r.q));
        }
    }
    for (name, d, converged, lc) in extra {
        worst_b = worst_b.max(d.boundary_error / lc);
        worst_g = worst_g.max(d.gradient_inf);
        if !convergence_ok(d, *converged, *lc) {
            bad.push(name.to_string());
        }
    }
    let detail = format!("max boundary error/l_c {worst_b:.2e}, max |g| {worst_g:.2e}");
    check(bad.is_empty(), if bad.is_empty() { detail } else { format!("{detail}; failed: {}", bad.join(", ")) })
}

fn accuracy_vs_degree(case: &Case, config: &SolverConfig) -> Outcome {
    let b = &case.bullet;
    let straight = HighOrderMesh::straight(&b.mesh, 1).unwrap();
    let (_, _, a1) = measure(&straight, &b.model, &b.classification, config).unwrap();
    let all: Vec<&AccuracyReport> = std::iter::once(&a1).chain(case.runs.iter().map(|r| &r.accuracy)).collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, f) in [
        ("SC", (|a: &AccuracyReport| a.sc) as fn(&AccuracyReport) -> f64),
        ("d2", |a| a.d2),
        ("dinf", |a| a.dinf),
    ] {
        let v: Vec<f64> = all.iter().map(|a| f(a)).collect();
        let drops: Vec<f64> = v.windows(2).map(|w| w[0] / w[1]).collect();
        let decreasing = drops.iter().all(|&d| d > 1.0);
        let first_largest = drops[1..].iter().all(|&d| d < drops[0]);
        ok &= decreasing && first_largest && drops[0] >= 10.0;
        lines.push(format!(
            "{name} {} (drops {})",
            v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" "),
            drops.iter().map(|x| format!("{x:.1}x")).collect::<Vec<_>>().join(" ")
        ));
    }
    check(ok, format!("h={}: {}", case.runs[0].h, lines.join("; ")))
}

fn derivatives() -> Outcome {
    let s = common::setup(2, 0.0);
    let disc = common::discretization(&s, 0.0);
    let targets = common::snapshot(&s);
    let x0 = disc.unknowns_from(s.mesh.nodes());
    let n = disc.dim();
    let mut rng = common::rng(41);
    let (mut g_err, mut hv_err, mut sym_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let mu = 10f64.powf(rng.gen_range(0.0..3.0));
        let p = PenaltyProblem::new(&disc, targets.clone(), mu).unwrap();
        let x = common::add_scaled(&x0, 1.0, &common::random_vector(&mut rng, n, 0.02));
        let v = common::random_vector(&mut rng, n, 1.0);
        let w = common::random_vector(&mut rng, n, 1.0);
        let eps = 1e-6;
        let mut g = vec![0.0; n];
        p.gradient(&x, &mut g);
        let fd = (p.value(&common::add_scaled(&x, eps, &v)) - p.value(&common::add_scaled(&x, -eps, &v))) / (2.0 * eps);
        let gv = common::dot(&g, &v);
        g_err = g_err.max((fd - gv).abs() / gv.abs().max(1.0));

        let h = p.hessian(&x);
        let (mut hv, mut hw) = (vec![0.0; n], vec![0.0; n]);
        h.apply(&v, &mut hv);
        h.apply(&w, &mut hw);
        let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
        p.gradient(&common::add_scaled(&x, eps, &v), &mut gp);
        p.gradient(&common::add_scaled(&x, -eps, &v), &mut gm);
        let diff: Vec<f64> = (0..n).map(|i| (gp[i] - gm[i]) / (2.0 * eps) - hv[i]).collect();
        hv_err = hv_err.max(common::norm(&diff) / common::norm(&hv));
        let (a, b) = (common::dot(&hv, &w), common::dot(&v, &hw));
        sym_err = sym_err.max((a - b).abs() / a.abs().max(b.abs()));
    }
    check(
        g_err <= 1e-6 && hv_err <= 1e-5 && sym_err <= 1e-10,
        format!("gradient {g_err:.1e}, Hv {hv_err:.1e}, symmetry {sym_err:.1e} over 20 states"),
    )
}

fn identities() -> Outcome {
    let mut rng = common::rng(42);
    let mut worst: f64 = (pointwise_eta(&Matrix3::identity()) - 1.0).abs();
    for _ in 0..100 {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.0..std::f64::consts::TAU));
        worst = worst.max((pointwise_eta(&(r.matrix() * rng.gen_range(0.1..10.0))) - 1.0).abs());
    }
    let stretch = (pointwise_eta(&Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0))) - 2f64.powf(1.0 / 3.0)).abs();
    let degenerate = [0.0, -1.0]
        .iter()
        .all(|&d| pointwise_eta(&Matrix3::from_diagonal(&Vector3::new(d, 1.0, 1.0))) == f64::INFINITY);
    let mut straight: f64 = 0.0;
    for jump in [0.0, 7.0] {
        let b = fixture(0.8, jump);
        for q in 1..=4 {
            let mesh = HighOrderMesh::straight(&b.mesh, q).unwrap();
            for e in hocurve::distortion::mesh_quality(&mesh, 2 * q + 4, 4).unwrap() {
                straight = straight.max((e.shape_quality - 1.0).abs()).max((e.scaled_jacobian - 1.0).abs());
            }
        }
    }
    check(
        worst < 1e-12 && stretch < 1e-12 && degenerate && straight < 1e-12,
        format!("similarity {worst:.1e}, diag(2,1,1) {stretch:.1e}, straight elements {straight:.1e}"),
    )
}

fn projections() -> Outcome {
    let (mut surface, mut curve, mut idem): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut low = 0;
    for model in variants() {
        let mut rng = common::rng(43);
        for _ in 0..1000 {
            let (s, x) = near_surface(&mut rng, &model, 0.2);
            let p = model.project_to_virtual_surface(s, &x).unwrap();
            low += p.low_precision as usize;
            surface = surface.max(dist2(p.point, surface_oracle(model.surface(s).unwrap(), x)).sqrt());
            let again = model.project_to_virtual_surface(s, &p.point).unwrap();
            idem = idem.max(dist2(again.point, p.point).sqrt());
        }
        let per_curve = 1000 / model.virtual_curves.len();
        for c in &model.virtual_curves {
            // points near the circle where the two surfaces meet
            let z0 = if c.name == "junction" { 0.0 } else { -BulletParams::default().length };
            let r0 = model.project_to_virtual_curve(c.id, &[1.0, 0.0, z0]).unwrap().point[0];
            for _ in 0..per_curve {
                let t = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let r = r0 + rng.gen_range(-0.15..0.15);
                let x = [r * t.cos(), r * t.sin(), z0 + rng.gen_range(-0.15..0.15)];
                let p = model.project_to_virtual_curve(c.id, &x).unwrap();
                low += p.low_precision as usize;
                curve = curve.max(dist2(p.point, curve_oracle(&model, c.id, x)).sqrt());
                let again = model.project_to_virtual_curve(c.id, &p.point).unwrap();
                idem = idem.max(dist2(again.point, p.point).sqrt());
            }
        }
    }
    check(
        surface < 1e-6 && curve < 1e-6 && idem < 1e-10 && low == 0,
        format!("surface {surface:.1e}, curve {curve:.1e}, idempotence {idem:.1e}, low precision {low}"),
    )
}

/// Counts the nonzeros of the assembled Hessian column by column from
/// Hessian-vector products.
fn preconditioner_memory() -> Outcome {
    let s = common::setup(2, 0.0);
    let disc = common::discretization(&s, 0.0);
    let p = PenaltyProblem::new(&disc, common::snapshot(&s), 100.0).unwrap();
    let n = disc.dim();
    let mut rng = common::rng(44);
    let x = common::add_scaled(&disc.unknowns_from(s.mesh.nodes()), 1.0, &common::random_vector(&mut rng, n, 0.02));
    let h = p.hessian(&x);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut full = 0;
    for j in 0..n {
        e[j] = 1.0;
        h.apply(&e, &mut col);
        e[j] = 0.0;
        full += col.iter().filter(|v| **v != 0.0).count();
    }
    let stored = p.hessian_blocks(&x).unwrap().nnz();
    let ratio = stored as f64 / full as f64;
    check(
        (0.30..=0.37).contains(&ratio),
        format!("{stored} / {full} = {ratio:.4} ({n} unknowns)"),
    )
}

/// Mean normal variation on faces straddling the junction plane and on faces
/// sharing no vertex with them.
fn junction_contrast(b: &Bullet, mesh: &HighOrderMesh) -> (f64, f64, usize, usize) {
    let faces = wall_faces(mesh, &b.model, &b.classification).unwrap();
    let mut interface = Vec::new();
    let mut touched = BTreeSet::new();
    for &(f, _) in &faces {
        let z = mesh.initial_face_corners(f).map(|p| p[2]);
        let (lo, hi) = (z.iter().cloned().fold(f64::INFINITY, f64::min), z.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        if lo <= 0.0 && hi >= 0.0 {
            interface.push(f);
            touched.extend(mesh.faces()[f].nodes[..3].iter().copied());
        }
    }
    let smooth: Vec<usize> = faces
        .iter()
        .map(|&(f, _)| f)
        .filter(|&f| mesh.faces()[f].nodes[..3].iter().all(|v| !touched.contains(v)))
        .collect();
    let mean = |fs: &[usize]| fs.iter().map(|&f| normal_gradient_variation(mesh, f, 8)).sum::<f64>() / fs.len() as f64;
    (mean(&interface), mean(&smooth), interface.len(), smooth.len())
}

fn g1_discontinuity(smooth_case: &Case, kinked: &(Bullet, HighOrderMesh)) -> Outcome {
    let q4 = smooth_case.runs.iter().find(|r| r.q == 4).unwrap();
    let (si, ss, sn, ssn) = junction_contrast(&smooth_case.bullet, &q4.mesh);
    let (ki, ks, kn, ksn) = junction_contrast(&kinked.0, &kinked.1);
    let (smooth_ratio, kinked_ratio) = (si / ss, ki / ks);
    check(
        kinked_ratio >= 10.0 && smooth_ratio < 10.0,
        format!(
            "7 deg: interface {ki:.3e} / smooth {ks:.3e} = {kinked_ratio:.1}x ({kn}/{ksn} faces); 0 deg: {si:.3e} / {ss:.3e} = {smooth_ratio:.1}x ({sn}/{ssn} faces)"
        ),
    )
}

fn continuation_benefit(with: &Run, without: &DegreeSummary, without_converged: bool) -> Outcome {
    let lc = with.mesh.characteristic_length();
    let both = convergence_ok(&with.degree, with.converged, lc) && convergence_ok(without, without_converged, lc);
    check(
        with.newton_at_degree <= without.newton_iterations && both,
        format!(
            "h={} q=3: {} Newton iterations at q=3 with continuation, {} without",
            with.h, with.newton_at_degree, without.newton_iterations
        ),
    )
}

fn quality_distribution(cases: &[Case]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for r in cases.iter().flat_map(|c| &c.runs).filter(|r| r.q <= 3) {
        let top = *r.summary.shape_histogram.counts.last().unwrap();
        let n = r.summary.elements;
        ok &= 2 * top > n;
        lines.push(format!("h={} q={}: {top}/{n}", r.h, r.q));
    }
    check(ok, format!("top bin {}", lines.join(", ")))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |id: usize, name: &'static str, o: Outcome| {
        let (tag, detail) = match &o {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} {name:<24} {tag}  {detail}");
        results.push((id, name, o));
    };

    println!("curving bullet fixtures");
    let cases: Vec<Case> = RESOLUTIONS.iter().map(|&h| run_case(h)).collect();

    let mid = &cases[1];
    let t = Instant::now();
    let no_continuation = curve_mesh(
        &mid.bullet.mesh,
        &mid.bullet.model,
        &mid.bullet.classification,
        &SolverConfig {
            degree: 3,
            p_continuation: false,
            ..Default::default()
        },
    )
    .unwrap();
    println!("  h={} q=3 without continuation: {:.1}s", mid.runs[0].h, t.elapsed().as_secs_f64());
    let fine = RESOLUTIONS[2];
    let kinked_bullet = fixture(fine, 7.0);
    let t = Instant::now();
    let kinked = curve_mesh(
        &kinked_bullet.mesh,
        &kinked_bullet.model,
        &kinked_bullet.classification,
        &SolverConfig {
            degree: 4,
            ..Default::default()
        },
    )
    .unwrap();
    println!("  h={fine} q=4 7-degree variant: {:.1}s", t.elapsed().as_secs_f64());
    let lc_mid = mid.runs[0].mesh.characteristic_length();
    let lc_kinked = kinked.mesh.characteristic_length();
    let kinked_last = kinked.degrees.last().unwrap().clone();

    report(1, "validity", validity(&cases));
    report(
        2,
        "convergence contract",
        convergence(
            &cases,
            &[
                ("q=3 without continuation", &no_continuation.degrees[0], no_continuation.converged, lc_mid),
                ("7-degree q=4", &kinked_last, kinked.converged, lc_kinked),
            ],
        ),
    );
    report(3, "accuracy vs degree", accuracy_vs_degree(&cases[2], &SolverConfig::default()));
    report(4, "derivatives", derivatives());
    report(5, "distortion identities", identities());
    report(6, "projection oracles", projections());
    report(7, "preconditioner memory", preconditioner_memory());
    report(
        8,
        "G1 discontinuity",
        g1_discontinuity(&cases[2], &(kinked_bullet, kinked.mesh.clone())),
    );
    report(
        9,
        "p-continuation benefit",
        continuation_benefit(&mid.runs[1], &no_continuation.degrees[0], no_continuation.converged),
    );
    report(10, "quality distribution", quality_distribution(&cases));

    let failed: Vec<_> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.0}s",
        results.len() - failed.len(),
        failed.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
