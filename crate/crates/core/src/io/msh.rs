//! Gmsh ASCII mesh files: versions 4.1 (read and write) and 2.2 (read).
//!
//! High-order elements use the node order of [`ReferenceSimplex`]:
//! vertices, edge nodes per edge in `TET_EDGES` order, face-interior nodes
//! per face in `TET_FACES` order, then interior nodes. Vertex positions of
//! the initial straight mesh are stored as a node data view named
//! `initial_position` so quality can be measured after reloading.
//!
//! [`ReferenceSimplex`]: crate::mesh::ReferenceSimplex

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::linear::sorted3;
use crate::mesh::reference::TET_FACES;
use crate::mesh::{BoundaryClassification, BoundaryTriangle, HighOrderMesh, LinearMesh};

pub const INITIAL_POSITION_VIEW: &str = "initial_position";

/// Gmsh element type numbers for triangles and tetrahedra of degree 1..=4.
pub const TRIANGLE_TYPES: [u32; 4] = [2, 9, 21, 23];
pub const TET_TYPES: [u32; 4] = [4, 11, 29, 30];
/// Points and lines, which are skipped when reading.
const IGNORED_TYPES: [u32; 5] = [15, 1, 8, 26, 27];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Triangle,
    Tet,
}

fn element_kind(t: u32) -> Option<(Shape, usize)> {
    if let Some(i) = TRIANGLE_TYPES.iter().position(|&x| x == t) {
        return Some((Shape::Triangle, i + 1));
    }
    TET_TYPES.iter().position(|&x| x == t).map(|i| (Shape::Tet, i + 1))
}

fn nodes_of(shape: Shape, q: usize) -> usize {
    match shape {
        Shape::Triangle => (q + 1) * (q + 2) / 2,
        Shape::Tet => (q + 1) * (q + 2) * (q + 3) / 6,
    }
}

#[derive(Debug, Clone)]
struct RawElement {
    shape: Shape,
    degree: usize,
    nodes: Vec<u64>,
    mark: u32,
    line: usize,
}

/// Contents of a mesh file before conversion.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    path: PathBuf,
    node_tags: Vec<u64>,
    coords: Vec<[f64; 3]>,
    elements: Vec<RawElement>,
    pub physical_names: Vec<(u32, u32, String)>,
    initial_positions: HashMap<u64, [f64; 3]>,
}

struct Lines<'a> {
    path: &'a Path,
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.pos,
            message: message.into(),
        }
    }

    /// Next nonblank line, trimmed.
    fn next(&mut self) -> Result<&'a str> {
        while self.pos < self.lines.len() {
            let l = self.lines[self.pos].trim();
            self.pos += 1;
            if !l.is_empty() {
                return Ok(l);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn peek_section(&mut self) -> Option<&'a str> {
        while self.pos < self.lines.len() {
            let l = self.lines[self.pos].trim();
            if !l.is_empty() {
                return Some(l);
            }
            self.pos += 1;
        }
        None
    }

    fn numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let l = self.next()?;
        l.split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| self.err(format!("cannot parse `{t}`"))))
            .collect()
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let l = self.next()?;
        if l == tag {
            Ok(())
        } else {
            Err(self.err(format!("expected {tag}, found `{l}`")))
        }
    }

    fn skip_to(&mut self, end: &str) -> Result<()> {
        while self.next()? != end {}
        Ok(())
    }
}

fn field<T: Copy>(v: &[T], i: usize, lines: &Lines) -> Result<T> {
    v.get(i).copied().ok_or_else(|| lines.err("line is too short"))
}

pub fn read_raw(path: &Path) -> Result<RawMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_raw(path, &text)
}

pub fn parse_raw(path: &Path, text: &str) -> Result<RawMesh> {
    let mut l = Lines::new(path, text);
    let mut raw = RawMesh {
        path: path.to_path_buf(),
        ..Default::default()
    };
    l.expect("$MeshFormat")?;
    let header = l.next()?;
    let version = header.split_whitespace().next().unwrap_or("");
    let v4 = match version {
        "4.1" => true,
        "2.2" => false,
        _ => return Err(l.err(format!("unsupported MSH version `{version}` (expected 4.1 or 2.2)"))),
    };
    if header.split_whitespace().nth(1) != Some("0") {
        return Err(l.err("binary MSH files are not supported"));
    }
    l.expect("$EndMeshFormat")?;
    let mut entity_marks: HashMap<(u32, i64), u32> = HashMap::new();
    while let Some(section) = l.peek_section() {
        l.pos += 1;
        match section {
            "$PhysicalNames" => {
                let n: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                for _ in 0..n {
                    let line = l.next()?;
                    let mut it = line.splitn(3, char::is_whitespace);
                    let dim = it.next().and_then(|t| t.parse().ok());
                    let tag = it.next().and_then(|t| t.trim().parse().ok());
                    let name = it.next().map(|t| t.trim().trim_matches('"').to_string());
                    match (dim, tag, name) {
                        (Some(d), Some(t), Some(nm)) => raw.physical_names.push((d, t, nm)),
                        _ => return Err(l.err("malformed physical name")),
                    }
                }
                l.expect("$EndPhysicalNames")?;
            }
            "$Entities" if v4 => {
                let counts = l.numbers::<usize>()?;
                for dim in 0..4u32 {
                    for _ in 0..field(&counts, dim as usize, &l)? {
                        let v = l.numbers::<f64>()?;
                        let tag = field(&v, 0, &l)? as i64;
                        let at = if dim == 0 { 4 } else { 7 };
                        let np = field(&v, at, &l)? as usize;
                        if np > 0 {
                            entity_marks.insert((dim, tag), field(&v, at + 1, &l)?.abs() as u32);
                        }
                    }
                }
                l.expect("$EndEntities")?;
            }
            "$Nodes" if v4 => {
                let h = l.numbers::<u64>()?;
                let blocks = field(&h, 0, &l)?;
                for _ in 0..blocks {
                    let b = l.numbers::<u64>()?;
                    let dim = field(&b, 0, &l)?;
                    let parametric = field(&b, 2, &l)? == 1;
                    let count = field(&b, 3, &l)? as usize;
                    let start = raw.node_tags.len();
                    for _ in 0..count {
                        raw.node_tags.push(field(&l.numbers::<u64>()?, 0, &l)?);
                    }
                    let need = 3 + if parametric { dim as usize } else { 0 };
                    for k in 0..count {
                        let c = l.numbers::<f64>()?;
                        if c.len() < need {
                            return Err(l.err(format!("node {} has too few coordinates", raw.node_tags[start + k])));
                        }
                        raw.coords.push([c[0], c[1], c[2]]);
                    }
                }
                l.expect("$EndNodes")?;
            }
            "$Nodes" => {
                let n: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                for _ in 0..n {
                    let v: Vec<f64> = l.numbers()?;
                    if v.len() < 4 {
                        return Err(l.err("node line needs a tag and three coordinates"));
                    }
                    raw.node_tags.push(v[0] as u64);
                    raw.coords.push([v[1], v[2], v[3]]);
                }
                l.expect("$EndNodes")?;
            }
            "$Elements" if v4 => {
                let h = l.numbers::<u64>()?;
                for _ in 0..field(&h, 0, &l)? {
                    let b = l.numbers::<i64>()?;
                    let dim = field(&b, 0, &l)? as u32;
                    let tag = field(&b, 1, &l)?;
                    let etype = field(&b, 2, &l)? as u32;
                    let count = field(&b, 3, &l)? as usize;
                    let mark = entity_marks.get(&(dim, tag)).copied().unwrap_or(tag.unsigned_abs() as u32);
                    for _ in 0..count {
                        let v = l.numbers::<u64>()?;
                        push_element(&mut raw, &l, etype, v.get(1..).unwrap_or(&[]).to_vec(), mark)?;
                    }
                }
                l.expect("$EndElements")?;
            }
            "$Elements" => {
                let n: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                for _ in 0..n {
                    let v = l.numbers::<u64>()?;
                    let etype = field(&v, 1, &l)? as u32;
                    let ntags = field(&v, 2, &l)? as usize;
                    let physical = if ntags > 0 { field(&v, 3, &l)? } else { 0 };
                    let elementary = if ntags > 1 { field(&v, 4, &l)? } else { 0 };
                    let mark = if physical != 0 { physical } else { elementary } as u32;
                    let nodes = v.get(3 + ntags..).unwrap_or(&[]).to_vec();
                    push_element(&mut raw, &l, etype, nodes, mark)?;
                }
                l.expect("$EndElements")?;
            }
            "$NodeData" => {
                let ns: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                let mut names = Vec::new();
                for _ in 0..ns {
                    names.push(l.next()?.trim_matches('"').to_string());
                }
                let nr: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                for _ in 0..nr {
                    l.next()?;
                }
                let ni: usize = field(&l.numbers::<usize>()?, 0, &l)?;
                let mut ints = Vec::new();
                for _ in 0..ni {
                    ints.push(field(&l.numbers::<usize>()?, 0, &l)?);
                }
                let components = ints.get(1).copied().unwrap_or(1);
                let entries = ints.get(2).copied().unwrap_or(0);
                let wanted = names.first().map(String::as_str) == Some(INITIAL_POSITION_VIEW) && components == 3;
                for _ in 0..entries {
                    let v = l.numbers::<f64>()?;
                    if wanted {
                        if v.len() < 4 {
                            return Err(l.err("node data entry is too short"));
                        }
                        raw.initial_positions.insert(v[0] as u64, [v[1], v[2], v[3]]);
                    }
                }
                l.expect("$EndNodeData")?;
            }
            s if s.starts_with('$') => {
                let end = format!("$End{}", &s[1..]);
                l.skip_to(&end)?;
            }
            s => return Err(l.err(format!("unexpected line `{s}` outside a section"))),
        }
    }
    if raw.coords.is_empty() {
        return Err(l.err("file has no nodes"));
    }
    Ok(raw)
}

fn push_element(raw: &mut RawMesh, l: &Lines, etype: u32, nodes: Vec<u64>, mark: u32) -> Result<()> {
    if IGNORED_TYPES.contains(&etype) {
        return Ok(());
    }
    let Some((shape, degree)) = element_kind(etype) else {
        return Err(l.err(format!("unsupported element type {etype}")));
    };
    let need = nodes_of(shape, degree);
    if nodes.len() < need {
        return Err(l.err(format!("element of type {etype} needs {need} nodes, found {}", nodes.len())));
    }
    raw.elements.push(RawElement {
        shape,
        degree,
        nodes: nodes[..need].to_vec(),
        mark,
        line: l.pos,
    });
    Ok(())
}

impl RawMesh {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn degree(&self) -> Result<usize> {
        let degrees: BTreeSet<usize> = self
            .elements
            .iter()
            .filter(|e| e.shape == Shape::Tet)
            .map(|e| e.degree)
            .collect();
        match degrees.len() {
            0 => Err(self.err(0, "file has no tetrahedra")),
            1 => Ok(*degrees.first().unwrap()),
            _ => Err(self.err(0, format!("mixed tetrahedron degrees {degrees:?}"))),
        }
    }

    fn index_of_tags(&self) -> HashMap<u64, usize> {
        self.node_tags.iter().enumerate().map(|(i, &t)| (t, i)).collect()
    }

    /// Node index per tag with vertices numbered first, in file order.
    fn renumber(&self, tags: &HashMap<u64, usize>) -> Result<(Vec<usize>, usize)> {
        let mut is_vertex = vec![false; self.coords.len()];
        let mut used = vec![false; self.coords.len()];
        for e in &self.elements {
            for (k, t) in e.nodes.iter().enumerate() {
                let &i = tags
                    .get(t)
                    .ok_or_else(|| self.err(e.line, format!("element references undefined node {t}")))?;
                used[i] = true;
                if e.shape == Shape::Tet && k < 4 {
                    is_vertex[i] = true;
                }
            }
        }
        let mut new = vec![usize::MAX; self.coords.len()];
        let mut next = 0;
        for pass in [true, false] {
            for i in 0..self.coords.len() {
                if used[i] && is_vertex[i] == pass {
                    new[i] = next;
                    next += 1;
                }
            }
        }
        let nv = is_vertex.iter().filter(|&&v| v).count();
        Ok((new, nv))
    }

    pub fn to_linear(&self) -> Result<LinearMesh> {
        let q = self.degree()?;
        if q != 1 {
            return Err(self.err(0, format!("expected a linear mesh, found degree {q} tetrahedra")));
        }
        let tags = self.index_of_tags();
        let (new, nv) = self.renumber(&tags)?;
        let mut vertices = vec![[0.0; 3]; nv];
        for (i, &n) in new.iter().enumerate() {
            if n < nv {
                vertices[n] = self.coords[i];
            }
        }
        let map = |t: &u64| new[tags[t]];
        let mut tets = Vec::new();
        let mut boundary = Vec::new();
        for e in &self.elements {
            match e.shape {
                Shape::Tet => tets.push([map(&e.nodes[0]), map(&e.nodes[1]), map(&e.nodes[2]), map(&e.nodes[3])]),
                Shape::Triangle => {
                    if e.degree != 1 {
                        return Err(self.err(e.line, "high-order triangle in a linear mesh"));
                    }
                    let v = [map(&e.nodes[0]), map(&e.nodes[1]), map(&e.nodes[2])];
                    if v.iter().any(|&i| i >= nv) {
                        return Err(self.err(e.line, "boundary triangle uses a node that is not a tetrahedron vertex"));
                    }
                    boundary.push(BoundaryTriangle {
                        vertices: v,
                        mark: e.mark,
                    });
                }
            }
        }
        let mut mesh = LinearMesh::new(vertices, tets, boundary);
        mesh.orient_positively();
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn to_high_order(&self) -> Result<HighOrderMesh> {
        let q = self.degree()?;
        let tags = self.index_of_tags();
        let (new, nv) = self.renumber(&tags)?;
        let n = new.iter().filter(|&&i| i != usize::MAX).count();
        let mut nodes = vec![[0.0; 3]; n];
        let mut initial = vec![[0.0; 3]; nv];
        for (i, &k) in new.iter().enumerate() {
            if k == usize::MAX {
                continue;
            }
            nodes[k] = self.coords[i];
            if k < nv {
                initial[k] = self
                    .initial_positions
                    .get(&self.node_tags[i])
                    .copied()
                    .unwrap_or(self.coords[i]);
            }
        }
        let map = |t: &u64| new[tags[t]];
        let mut elements = Vec::new();
        let mut faces: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for (ne, e) in self.elements.iter().filter(|e| e.shape == Shape::Tet).enumerate() {
            let en: Vec<usize> = e.nodes.iter().map(map).collect();
            for (lf, f) in TET_FACES.iter().enumerate() {
                faces.insert(sorted3(f.map(|i| en[i])), (ne, lf));
            }
            elements.extend(en);
        }
        let mut boundary = Vec::new();
        for e in self.elements.iter().filter(|e| e.shape == Shape::Triangle) {
            if e.degree != q {
                return Err(self.err(e.line, format!("triangle of degree {} in a degree {q} mesh", e.degree)));
            }
            let key = sorted3([map(&e.nodes[0]), map(&e.nodes[1]), map(&e.nodes[2])]);
            let &(el, lf) = faces
                .get(&key)
                .ok_or_else(|| self.err(e.line, "boundary triangle is not a face of any tetrahedron"))?;
            boundary.push((el, lf, e.mark));
        }
        HighOrderMesh::from_parts(q, nodes, initial, elements, &boundary)
    }
}

pub fn read_linear_mesh(path: &Path) -> Result<LinearMesh> {
    read_raw(path)?.to_linear()
}

pub fn read_high_order_mesh(path: &Path) -> Result<HighOrderMesh> {
    read_raw(path)?.to_high_order()
}

fn bbox(points: impl Iterator<Item = [f64; 3]>) -> [f64; 6] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in points {
        for d in 0..3 {
            b[d] = b[d].min(p[d]);
            b[d + 3] = b[d + 3].max(p[d]);
        }
    }
    b
}

/// Mesh arrays in file order.
struct MeshParts<'a> {
    degree: usize,
    nodes: &'a [[f64; 3]],
    elements: &'a [usize],
    faces: Vec<(&'a [usize], u32)>,
    initial: Option<&'a [[f64; 3]]>,
}

/// MSH 4.1 text of a mesh. Each boundary mark becomes a surface entity
/// carrying the mark as its first physical tag and its class group
/// (`wall`, `symmetry` or `farfield`) as the second. Boundary faces keep
/// their order, one element block per run of equal marks.
pub fn format_msh41(mesh: &HighOrderMesh, classification: &BoundaryClassification) -> String {
    format_parts(
        &MeshParts {
            degree: mesh.degree(),
            nodes: mesh.nodes(),
            elements: mesh.element_array(),
            faces: mesh.faces().iter().map(|f| (f.nodes.as_slice(), f.mark)).collect(),
            initial: Some(mesh.initial_vertices()),
        },
        classification,
    )
}

fn format_parts(m: &MeshParts, classification: &BoundaryClassification) -> String {
    let q = m.degree;
    let mut marks: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (f, &(_, mark)) in m.faces.iter().enumerate() {
        marks.entry(mark).or_default().push(f);
    }
    let first_group = marks.keys().next_back().map_or(1, |k| k + 1);
    let groups = [
        ("wall", &classification.wall),
        ("symmetry", &classification.symmetry),
        ("farfield", &classification.farfield),
    ];
    let group_tag = |mark: u32| {
        groups
            .iter()
            .position(|(_, set)| set.contains(&mark))
            .map(|i| first_group + i as u32)
    };
    let mut s = String::new();
    s.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    s.push_str("$PhysicalNames\n");
    let _ = writeln!(s, "{}", marks.len() + groups.len() + 1);
    for k in marks.keys() {
        let _ = writeln!(s, "2 {k} \"mark_{k}\"");
    }
    for (i, (name, _)) in groups.iter().enumerate() {
        let _ = writeln!(s, "2 {} \"{name}\"", first_group + i as u32);
    }
    s.push_str("3 1 \"domain\"\n$EndPhysicalNames\n");

    s.push_str("$Entities\n");
    let _ = writeln!(s, "0 0 {} 1", marks.len());
    for (k, fs) in &marks {
        let b = bbox(fs.iter().flat_map(|&f| m.faces[f].0.iter().map(|&n| m.nodes[n])));
        let phys: Vec<u32> = std::iter::once(*k).chain(group_tag(*k)).collect();
        let _ = write!(s, "{k} {:?} {:?} {:?} {:?} {:?} {:?} {}", b[0], b[1], b[2], b[3], b[4], b[5], phys.len());
        for p in phys {
            let _ = write!(s, " {p}");
        }
        s.push_str(" 0\n");
    }
    let b = bbox(m.nodes.iter().copied());
    let _ = write!(s, "1 {:?} {:?} {:?} {:?} {:?} {:?} 1 1 {}", b[0], b[1], b[2], b[3], b[4], b[5], marks.len());
    for k in marks.keys() {
        let _ = write!(s, " {k}");
    }
    s.push_str("\n$EndEntities\n");

    let n = m.nodes.len();
    s.push_str("$Nodes\n");
    let _ = writeln!(s, "1 {n} 1 {n}");
    let _ = writeln!(s, "3 1 0 {n}");
    for i in 1..=n {
        let _ = writeln!(s, "{i}");
    }
    for p in m.nodes {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n");

    let mut runs: Vec<(u32, std::ops::Range<usize>)> = Vec::new();
    for (f, &(_, mark)) in m.faces.iter().enumerate() {
        match runs.last_mut() {
            Some((k, r)) if *k == mark => r.end = f + 1,
            _ => runs.push((mark, f..f + 1)),
        }
    }
    let npe = nodes_of(Shape::Tet, q);
    let nf = m.faces.len();
    let ne = m.elements.len() / npe;
    s.push_str("$Elements\n");
    let _ = writeln!(s, "{} {} 1 {}", runs.len() + 1, nf + ne, nf + ne);
    let mut tag = 1;
    for (k, r) in runs {
        let _ = writeln!(s, "2 {k} {} {}", TRIANGLE_TYPES[q - 1], r.len());
        for (nodes, _) in &m.faces[r] {
            let _ = write!(s, "{tag}");
            for &v in *nodes {
                let _ = write!(s, " {}", v + 1);
            }
            s.push('\n');
            tag += 1;
        }
    }
    let _ = writeln!(s, "3 1 {} {ne}", TET_TYPES[q - 1]);
    for e in m.elements.chunks(npe) {
        let _ = write!(s, "{tag}");
        for &v in e {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        tag += 1;
    }
    s.push_str("$EndElements\n");

    if let Some(initial) = m.initial {
        s.push_str("$NodeData\n1\n");
        let _ = writeln!(s, "\"{INITIAL_POSITION_VIEW}\"");
        s.push_str("1\n0.0\n3\n0\n3\n");
        let _ = writeln!(s, "{}", initial.len());
        for (i, p) in initial.iter().enumerate() {
            let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p[0], p[1], p[2]);
        }
        s.push_str("$EndNodeData\n");
    }
    s
}

pub fn write_msh41(mesh: &HighOrderMesh, classification: &BoundaryClassification, path: &Path) -> Result<()> {
    std::fs::write(path, format_msh41(mesh, classification)).map_err(|e| Error::io(path, e))
}

/// Linear mesh as MSH 4.1, with marks as physical tags.
pub fn format_linear_msh41(mesh: &LinearMesh, classification: &BoundaryClassification) -> String {
    let elements: Vec<usize> = mesh.tets.iter().flatten().copied().collect();
    format_parts(
        &MeshParts {
            degree: 1,
            nodes: &mesh.vertices,
            elements: &elements,
            faces: mesh.boundary.iter().map(|t| (t.vertices.as_slice(), t.mark)).collect(),
            initial: None,
        },
        classification,
    )
}

pub fn write_linear_msh41(mesh: &LinearMesh, classification: &BoundaryClassification, path: &Path) -> Result<()> {
    std::fs::write(path, format_linear_msh41(mesh, classification)).map_err(|e| Error::io(path, e))
}
