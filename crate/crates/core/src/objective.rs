//! Penalty functional over the free node coordinates.
//!
//! `F(x) = E(x) / Vol + mu * B(x) / Area` where `E` integrates the squared
//! distortion over the initial mesh and `B` is the squared L2 deviation of
//! the boundary trace from a frozen target interpolant.

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;

use crate::distortion::{jacobian_from_coords, jacobian_local, EtaSquared};
use crate::error::{Error, Result};
use crate::geometry::NodeTargets;
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::mesh::{quadrature, HighOrderMesh, Tabulation};

const INACTIVE: u32 = u32::MAX;
const CHUNK: usize = 32;

/// Smooth function of the free coordinates, minimized by the Newton solver.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// `f64::INFINITY` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient and returns the value.
    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn hessian<'a>(&'a self, x: &[f64]) -> Box<dyn LinearOperator + Sync + 'a>;

    /// Same-dimension diagonal blocks of the Hessian, if available.
    fn hessian_blocks(&self, _x: &[f64]) -> Option<DimensionBlocks> {
        None
    }
}

/// Block `r` couples the unknowns `stride * k + r`.
#[derive(Debug, Clone)]
pub struct DimensionBlocks {
    pub stride: usize,
    pub blocks: Vec<CsrMatrix>,
}

impl DimensionBlocks {
    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(CsrMatrix::nnz).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationOptions {
    pub exactness: usize,
    pub boundary_exactness: usize,
    /// Determinant regularization; zero gives the exact rectifier.
    pub delta: f64,
}

/// Per-degree data shared by every penalty subproblem: unknown numbering,
/// quadrature tables, boundary mass matrix and the block sparsity pattern.
#[derive(Debug, Clone)]
pub struct Discretization {
    num_nodes: usize,
    npe: usize,
    elements: Vec<usize>,
    inverse: Vec<Matrix3<f64>>,
    det: Vec<f64>,
    dof_of: Vec<u32>,
    active_nodes: Vec<usize>,
    active_elements: Vec<usize>,
    /// Position of each element in `active_elements`.
    element_rank: Vec<u32>,
    base: Vec<[f64; 3]>,
    weights: Vec<f64>,
    tab: Tabulation,
    face_mass: DMatrix<f64>,
    /// Boundary faces with a projected node, with their `2 * area` scale.
    penalty_faces: Vec<(Vec<usize>, f64)>,
    volume: f64,
    area: f64,
    pattern: CsrMatrix,
    slots: Vec<u32>,
    delta: f64,
}

impl Discretization {
    pub fn new(mesh: &HighOrderMesh, targets: &NodeTargets, options: DiscretizationOptions) -> Result<Self> {
        let n = mesh.num_nodes();
        if targets.targets.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} node targets for {} nodes",
                targets.targets.len(),
                n
            )));
        }
        let mut dof_of = vec![INACTIVE; n];
        let mut active_nodes = Vec::new();
        for (node, t) in targets.targets.iter().enumerate() {
            if t.is_active() {
                dof_of[node] = active_nodes.len() as u32;
                active_nodes.push(node);
            }
        }
        let npe = mesh.nodes_per_element();
        let ne = mesh.num_elements();
        let active_elements: Vec<usize> = (0..ne)
            .filter(|&e| mesh.element_nodes(e).iter().any(|&v| dof_of[v] != INACTIVE))
            .collect();

        let rule = quadrature(3, options.exactness)?;
        let tab = mesh.tet_reference().tabulate(&rule.points);

        let brule = quadrature(2, options.boundary_exactness)?;
        let tri = mesh.triangle_reference();
        let btab = tri.tabulate(&brule.points);
        let nt = tri.num_nodes();
        let mut face_mass = DMatrix::zeros(nt, nt);
        for (p, w) in brule.weights.iter().enumerate() {
            let v = btab.values_at(p);
            for i in 0..nt {
                for j in 0..nt {
                    face_mass[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let area: f64 = (0..mesh.faces().len()).map(|f| mesh.initial_face_area(f)).sum();
        let penalty_faces = mesh
            .faces()
            .iter()
            .enumerate()
            .filter(|(f, face)| {
                !targets.frozen_faces[*f] && face.nodes.iter().any(|&v| targets.targets[v].is_projected())
            })
            .map(|(f, face)| (face.nodes.clone(), 2.0 * mesh.initial_face_area(f)))
            .collect();

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); active_nodes.len()];
        for &e in &active_elements {
            let en = mesh.element_nodes(e);
            for &a in en {
                let da = dof_of[a];
                if da == INACTIVE {
                    continue;
                }
                rows[da as usize].extend(en.iter().map(|&b| dof_of[b]).filter(|&d| d != INACTIVE).map(|d| d as usize));
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_rows(&rows);
        let mut slots = Vec::with_capacity(active_elements.len() * npe * npe);
        for &e in &active_elements {
            let en = mesh.element_nodes(e);
            for &a in en {
                for &b in en {
                    let (da, db) = (dof_of[a], dof_of[b]);
                    slots.push(if da == INACTIVE || db == INACTIVE {
                        INACTIVE
                    } else {
                        pattern.slot(da as usize, db as usize).expect("pattern covers element pairs") as u32
                    });
                }
            }
        }

        let mut element_rank = vec![INACTIVE; ne];
        for (k, &e) in active_elements.iter().enumerate() {
            element_rank[e] = k as u32;
        }
        Ok(Self {
            num_nodes: n,
            element_rank,
            npe,
            elements: mesh.element_array().to_vec(),
            inverse: (0..ne).map(|e| *mesh.initial_inverse(e)).collect(),
            det: (0..ne).map(|e| mesh.initial_det(e)).collect(),
            dof_of,
            active_nodes,
            active_elements,
            base: mesh.nodes().to_vec(),
            weights: rule.weights,
            tab,
            face_mass,
            penalty_faces,
            volume: mesh.initial_volume(),
            area,
            pattern,
            slots,
            delta: options.delta,
        })
    }

    pub fn dim(&self) -> usize {
        3 * self.active_nodes.len()
    }

    pub fn active_nodes(&self) -> &[usize] {
        &self.active_nodes
    }

    /// Unknown index block of `node`, if it is free.
    pub fn dof_of(&self, node: usize) -> Option<usize> {
        let d = self.dof_of[node];
        (d != INACTIVE).then_some(d as usize)
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Area of the whole initial boundary.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn num_quadrature_points(&self) -> usize {
        self.weights.len()
    }

    /// Unknowns are displacements of the free nodes from the positions the
    /// discretization was built with.
    pub fn unknowns_from(&self, nodes: &[[f64; 3]]) -> Vec<f64> {
        self.active_nodes
            .iter()
            .flat_map(|&n| std::array::from_fn::<f64, 3, _>(|c| nodes[n][c] - self.base[n][c]))
            .collect()
    }

    /// All node positions for unknowns `x`.
    pub fn positions(&self, x: &[f64]) -> Vec<[f64; 3]> {
        let mut p = self.base.clone();
        for (k, &n) in self.active_nodes.iter().enumerate() {
            for c in 0..3 {
                p[n][c] += x[3 * k + c];
            }
        }
        p
    }

    pub fn write_back(&self, x: &[f64], mesh: &mut HighOrderMesh) {
        let p = self.positions(x);
        let nodes = mesh.nodes_mut();
        for &n in &self.active_nodes {
            nodes[n] = p[n];
        }
    }

    fn displacement(&self, x: &[f64], node: usize) -> [f64; 3] {
        match self.dof_of[node] {
            INACTIVE => [0.0; 3],
            k => {
                let k = 3 * k as usize;
                [x[k], x[k + 1], x[k + 2]]
            }
        }
    }

    fn element(&self, e: usize) -> &[usize] {
        &self.elements[e * self.npe..(e + 1) * self.npe]
    }

    fn physical_gradients(&self, e: usize, p: usize, out: &mut [[f64; 3]]) {
        let k = &self.inverse[e];
        for (o, g) in out.iter_mut().zip(self.tab.gradients_at(p)) {
            for c in 0..3 {
                o[c] = k[(0, c)] * g[0] + k[(1, c)] * g[1] + k[(2, c)] * g[2];
            }
        }
    }

    /// Integral of the squared distortion over the initial mesh; infinite
    /// if any quadrature determinant is nonpositive.
    pub fn energy(&self, positions: &[[f64; 3]]) -> f64 {
        let ne = self.det.len();
        let chunks: Vec<f64> = (0..ne.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut s = 0.0;
                let mut g = vec![[0.0; 3]; self.npe];
                for e in c * CHUNK..((c + 1) * CHUNK).min(ne) {
                    let en = self.element(e);
                    for (p, w) in self.weights.iter().enumerate() {
                        self.physical_gradients(e, p, &mut g);
                        let j = jacobian_from_coords(positions, en, &g);
                        match EtaSquared::new(&j, self.delta) {
                            Some(eta) => s += w * self.det[e] * eta.value,
                            None => return f64::INFINITY,
                        }
                    }
                }
                s
            })
            .collect();
        chunks.into_iter().sum()
    }

    /// Squared L2 deviation of the boundary trace from `targets`.
    pub fn boundary_deviation(&self, positions: &[[f64; 3]], targets: &[[f64; 3]]) -> f64 {
        self.deviation_with(|v| std::array::from_fn(|c| positions[v][c] - targets[v][c]))
    }

    fn deviation_with(&self, residual: impl Fn(usize) -> [f64; 3]) -> f64 {
        let nt = self.face_mass.nrows();
        let mut diff = vec![[0.0; 3]; nt];
        let mut total = 0.0;
        for (nodes, scale) in &self.penalty_faces {
            for (d, &v) in diff.iter_mut().zip(nodes) {
                *d = residual(v);
            }
            let mut s = 0.0;
            for i in 0..nt {
                for j in 0..nt {
                    let m = self.face_mass[(i, j)];
                    s += m * (diff[i][0] * diff[j][0] + diff[i][1] * diff[j][1] + diff[i][2] * diff[j][2]);
                }
            }
            total += scale * s;
        }
        total
    }

    /// Relative boundary error `||tr x - g|| / ||1||` over the boundary.
    pub fn boundary_error(&self, positions: &[[f64; 3]], targets: &[[f64; 3]]) -> f64 {
        (self.boundary_deviation(positions, targets).max(0.0) / self.area).sqrt()
    }

    /// Sums per-chunk sparse contributions in a fixed order so results do not
    /// depend on the thread count.
    fn accumulate<F>(&self, out: &mut [f64], kernel: F)
    where
        F: Fn(usize, &mut Vec<(u32, f64)>) + Sync,
    {
        let ae = &self.active_elements;
        let parts: Vec<Vec<(u32, f64)>> = ae
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut buf = Vec::new();
                for &e in chunk {
                    kernel(e, &mut buf);
                }
                buf
            })
            .collect();
        for part in parts {
            for (i, v) in part {
                out[i as usize] += v;
            }
        }
    }

    fn add_boundary_gradient(&self, residual: impl Fn(usize) -> [f64; 3], scale: f64, out: &mut [f64]) {
        let nt = self.face_mass.nrows();
        for (nodes, area2) in &self.penalty_faces {
            for i in 0..nt {
                let Some(di) = self.dof_of(nodes[i]) else { continue };
                for (j, &vj) in nodes.iter().enumerate() {
                    let m = 2.0 * scale * area2 * self.face_mass[(i, j)];
                    let r = residual(vj);
                    for c in 0..3 {
                        out[3 * di + c] += m * r[c];
                    }
                }
            }
        }
    }

    fn add_boundary_hv(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        let nt = self.face_mass.nrows();
        for (nodes, area2) in &self.penalty_faces {
            for i in 0..nt {
                let Some(di) = self.dof_of(nodes[i]) else { continue };
                for j in 0..nt {
                    let Some(dj) = self.dof_of(nodes[j]) else { continue };
                    let m = 2.0 * scale * area2 * self.face_mass[(i, j)];
                    for c in 0..3 {
                        out[3 * di + c] += m * v[3 * dj + c];
                    }
                }
            }
        }
    }
}

/// One penalty subproblem: the discretization plus a frozen boundary
/// target snapshot and penalty parameter.
#[derive(Debug, Clone)]
pub struct PenaltyProblem<'d> {
    pub disc: &'d Discretization,
    /// Target position of every node; unused for nodes off the penalized
    /// boundary.
    pub targets: Vec<[f64; 3]>,
    pub mu: f64,
    /// Reference position minus target, so the boundary residual of a node
    /// is `offset + displacement` without cancellation.
    offset: Vec<[f64; 3]>,
}

impl<'d> PenaltyProblem<'d> {
    pub fn new(disc: &'d Discretization, targets: Vec<[f64; 3]>, mu: f64) -> Result<Self> {
        if targets.len() != disc.num_nodes {
            return Err(Error::InvalidInput("target snapshot has the wrong length".into()));
        }
        let offset = disc
            .base
            .iter()
            .zip(&targets)
            .map(|(b, t)| std::array::from_fn(|c| b[c] - t[c]))
            .collect();
        Ok(Self {
            disc,
            targets,
            mu,
            offset,
        })
    }

    fn energy_scale(&self) -> f64 {
        1.0 / self.disc.volume
    }

    fn penalty_scale(&self) -> f64 {
        self.mu / self.disc.area
    }

    /// Distortion part `E / Vol`.
    pub fn distortion_term(&self, x: &[f64]) -> f64 {
        self.disc.energy(&self.disc.positions(x)) * self.energy_scale()
    }

    pub fn boundary_error(&self, x: &[f64]) -> f64 {
        (self.boundary_deviation(x).max(0.0) / self.disc.area).sqrt()
    }

    fn residual<'x>(&'x self, x: &'x [f64]) -> impl Fn(usize) -> [f64; 3] + 'x {
        move |v| {
            let u = self.disc.displacement(x, v);
            std::array::from_fn(|c| self.offset[v][c] + u[c])
        }
    }

    pub fn boundary_deviation(&self, x: &[f64]) -> f64 {
        self.disc.deviation_with(self.residual(x))
    }
}

impl Objective for PenaltyProblem<'_> {
    fn dim(&self) -> usize {
        self.disc.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let pos = self.disc.positions(x);
        let e = self.disc.energy(&pos);
        if !e.is_finite() {
            return f64::INFINITY;
        }
        e * self.energy_scale() + self.penalty_scale() * self.boundary_deviation(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.disc;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let pos = d.positions(x);
        let value = self.value(x);
        if !value.is_finite() {
            return value;
        }
        let es = self.energy_scale();
        d.accumulate(grad, |e, buf| {
            let en = d.element(e);
            let mut g = vec![[0.0; 3]; d.npe];
            let mut local = vec![[0.0; 3]; d.npe];
            for (p, w) in d.weights.iter().enumerate() {
                d.physical_gradients(e, p, &mut g);
                let j = jacobian_from_coords(&pos, en, &g);
                let eta = EtaSquared::new(&j, d.delta).expect("finite value implies valid points");
                let s = w * d.det[e] * es;
                let pm = eta.gradient * s;
                for (l, gn) in local.iter_mut().zip(&g) {
                    for r in 0..3 {
                        l[r] += pm[(r, 0)] * gn[0] + pm[(r, 1)] * gn[1] + pm[(r, 2)] * gn[2];
                    }
                }
            }
            for (&v, l) in en.iter().zip(&local) {
                let dv = d.dof_of[v];
                if dv != INACTIVE {
                    for r in 0..3 {
                        buf.push((3 * dv + r as u32, l[r]));
                    }
                }
            }
        });
        d.add_boundary_gradient(self.residual(x), self.penalty_scale(), grad);
        value
    }

    fn hessian<'a>(&'a self, x: &[f64]) -> Box<dyn LinearOperator + Sync + 'a> {
        Box::new(PenaltyHessian::new(self, x))
    }

    fn hessian_blocks(&self, x: &[f64]) -> Option<DimensionBlocks> {
        Some(self.assemble_blocks(x))
    }
}

impl PenaltyProblem<'_> {
    fn assemble_blocks(&self, x: &[f64]) -> DimensionBlocks {
        let d = self.disc;
        let pos = d.positions(x);
        let npe = d.npe;
        let es = self.energy_scale();
        let mut blocks = vec![d.pattern.clone(); 3];
        let parts: Vec<Vec<[f64; 3]>> = d
            .active_elements
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len() * npe * npe);
                let mut g = vec![[0.0; 3]; npe];
                let mut u = vec![[0.0; 3]; npe];
                for &e in chunk {
                    let en = d.element(e);
                    let start = out.len();
                    out.resize(start + npe * npe, [0.0; 3]);
                    let local = &mut out[start..];
                    for (p, w) in d.weights.iter().enumerate() {
                        d.physical_gradients(e, p, &mut g);
                        let j = jacobian_from_coords(&pos, en, &g);
                        let Some(eta) = EtaSquared::new(&j, d.delta) else { continue };
                        let h = eta.hessian();
                        let s = w * d.det[e] * es;
                        for r in 0..3 {
                            for (ua, ga) in u.iter_mut().zip(&g) {
                                for c in 0..3 {
                                    ua[c] = s
                                        * (h[(3 * r + c, 3 * r)] * ga[0]
                                            + h[(3 * r + c, 3 * r + 1)] * ga[1]
                                            + h[(3 * r + c, 3 * r + 2)] * ga[2]);
                                }
                            }
                            for a in 0..npe {
                                let ua = u[a];
                                for b in 0..npe {
                                    let gb = g[b];
                                    local[a * npe + b][r] += ua[0] * gb[0] + ua[1] * gb[1] + ua[2] * gb[2];
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut k = 0;
        for part in parts {
            for v in part {
                let slot = d.slots[k];
                k += 1;
                if slot != INACTIVE {
                    for r in 0..3 {
                        blocks[r].values[slot as usize] += v[r];
                    }
                }
            }
        }
        let ps = self.penalty_scale();
        let nt = d.face_mass.nrows();
        for (nodes, area2) in &d.penalty_faces {
            for i in 0..nt {
                let Some(di) = d.dof_of(nodes[i]) else { continue };
                for j in 0..nt {
                    let Some(dj) = d.dof_of(nodes[j]) else { continue };
                    let m = 2.0 * ps * area2 * d.face_mass[(i, j)];
                    let slot = d.pattern.slot(di, dj).expect("face pairs share an element");
                    for b in &mut blocks {
                        b.values[slot] += m;
                    }
                }
            }
        }
        DimensionBlocks { stride: 3, blocks }
    }
}

/// Hessian of a penalty problem at a fixed state, with the point-wise
/// distortion derivatives cached.
pub struct PenaltyHessian<'a> {
    problem: &'a PenaltyProblem<'a>,
    cache: Vec<Option<EtaSquared>>,
}

impl<'a> PenaltyHessian<'a> {
    fn new(problem: &'a PenaltyProblem<'a>, x: &[f64]) -> Self {
        let d = problem.disc;
        let pos = d.positions(x);
        let nq = d.weights.len();
        let cache: Vec<Option<EtaSquared>> = d
            .active_elements
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                let mut g = vec![[0.0; 3]; d.npe];
                let mut out = Vec::with_capacity(chunk.len() * nq);
                for &e in chunk {
                    for p in 0..nq {
                        d.physical_gradients(e, p, &mut g);
                        let j = jacobian_from_coords(&pos, d.element(e), &g);
                        out.push(EtaSquared::new(&j, d.delta));
                    }
                }
                out
            })
            .collect();
        Self { problem, cache }
    }
}

impl LinearOperator for PenaltyHessian<'_> {
    fn dim(&self) -> usize {
        self.problem.disc.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.problem.disc;
        let es = self.problem.energy_scale();
        let nq = d.weights.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        d.accumulate(out, |e, buf| {
            let en = d.element(e);
            let ve: Vec<[f64; 3]> = en
                .iter()
                .map(|&n| match d.dof_of[n] {
                    INACTIVE => [0.0; 3],
                    k => {
                        let k = 3 * k as usize;
                        [v[k], v[k + 1], v[k + 2]]
                    }
                })
                .collect();
            let mut g = vec![[0.0; 3]; d.npe];
            let mut local = vec![[0.0; 3]; d.npe];
            let base = d.element_rank[e] as usize * nq;
            for (p, w) in d.weights.iter().enumerate() {
                let Some(eta) = &self.cache[base + p] else { continue };
                d.physical_gradients(e, p, &mut g);
                let dj = jacobian_local(&ve, &g);
                let pm = eta.apply_hessian(&dj) * (w * d.det[e] * es);
                for (l, gn) in local.iter_mut().zip(&g) {
                    for r in 0..3 {
                        l[r] += pm[(r, 0)] * gn[0] + pm[(r, 1)] * gn[1] + pm[(r, 2)] * gn[2];
                    }
                }
            }
            for (&n, l) in en.iter().zip(&local) {
                let dn = d.dof_of[n];
                if dn != INACTIVE {
                    for r in 0..3 {
                        buf.push((3 * dn + r as u32, l[r]));
                    }
                }
            }
        });
        d.add_boundary_hv(v, self.problem.penalty_scale(), out);
    }
}
