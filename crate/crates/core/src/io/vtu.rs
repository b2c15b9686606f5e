//! Unstructured-grid XML export of linear sub-tets sampling the element maps.

use std::fmt::Write as _;
use std::path::Path;

use crate::distortion::ElementQuality;
use crate::error::{Error, Result};
use crate::mesh::linear::tet_volume6;
use crate::mesh::HighOrderMesh;

/// Splits the reference tet into `level^3` sub-tets. Returns the lattice
/// points as barycentric coordinates and the sub-tets as point indices.
pub fn subdivide_reference(level: usize) -> (Vec<[f64; 4]>, Vec<[usize; 4]>) {
    let d = level as f64;
    // Lattice on the Kuhn simplex level >= a >= b >= c >= 0.
    let mut index = std::collections::HashMap::new();
    let mut points = Vec::new();
    for a in 0..=level {
        for b in 0..=a {
            for c in 0..=b {
                index.insert([a, b, c], points.len());
                let (a, b, c) = (a as f64, b as f64, c as f64);
                points.push([1.0 - a / d, (a - b) / d, (b - c) / d, c / d]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::new();
    for i in 0..level {
        for j in 0..=i {
            for k in 0..=j {
                for p in PERMS {
                    let mut v = [i, j, k];
                    let mut ids = [index[&v]; 4];
                    let mut inside = true;
                    for (s, &axis) in p.iter().enumerate() {
                        v[axis] += 1;
                        if !(v[0] >= v[1] && v[1] >= v[2] && v[0] <= level) {
                            inside = false;
                            break;
                        }
                        ids[s + 1] = index[&v];
                    }
                    if !inside {
                        continue;
                    }
                    let bary = |id: usize| {
                        let b = points[id];
                        [b[1], b[2], b[3]]
                    };
                    if tet_volume6(ids.map(bary)) < 0.0 {
                        ids.swap(2, 3);
                    }
                    cells.push(ids);
                }
            }
        }
    }
    (points, cells)
}

/// Writes the mesh as sub-tets with per-element quality as cell data.
pub fn format_vtu(mesh: &HighOrderMesh, quality: &[ElementQuality], level: usize) -> Result<String> {
    if level == 0 {
        return Err(Error::InvalidInput("visualization level must be at least 1".into()));
    }
    let (bary, cells) = subdivide_reference(level);
    let ne = mesh.num_elements();
    let np = bary.len() * ne;
    let nc = cells.len() * ne;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n");
    s.push_str("<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    s.push_str("<UnstructuredGrid>\n");
    let _ = writeln!(s, "<Piece NumberOfPoints=\"{np}\" NumberOfCells=\"{nc}\">");
    s.push_str("<Points>\n<DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for e in 0..ne {
        for b in &bary {
            let p = mesh.map_point(e, b);
            let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
        }
    }
    s.push_str("</DataArray>\n</Points>\n<Cells>\n");
    s.push_str("<DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n");
    for e in 0..ne {
        let base = e * bary.len();
        for c in &cells {
            let _ = writeln!(s, "{} {} {} {}", base + c[0], base + c[1], base + c[2], base + c[3]);
        }
    }
    s.push_str("</DataArray>\n<DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n");
    for i in 1..=nc {
        let _ = writeln!(s, "{}", 4 * i);
    }
    s.push_str("</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n");
    for _ in 0..nc {
        s.push_str("10\n");
    }
    s.push_str("</DataArray>\n</Cells>\n<CellData Scalars=\"shape_quality\">\n");
    let field = |s: &mut String, name: &str, f: &dyn Fn(usize) -> String| {
        let _ = writeln!(s, "<DataArray type=\"Float64\" Name=\"{name}\" format=\"ascii\">");
        for e in 0..ne {
            let v = f(e);
            for _ in 0..cells.len() {
                s.push_str(&v);
                s.push('\n');
            }
        }
        s.push_str("</DataArray>\n");
    };
    let q = |e: usize| quality.get(e).copied();
    field(&mut s, "shape_quality", &|e| format!("{:?}", q(e).map_or(f64::NAN, |q| q.shape_quality)));
    field(&mut s, "scaled_jacobian", &|e| format!("{:?}", q(e).map_or(f64::NAN, |q| q.scaled_jacobian)));
    field(&mut s, "element", &|e| e.to_string());
    s.push_str("</CellData>\n</Piece>\n</UnstructuredGrid>\n</VTKFile>\n");
    Ok(s)
}

pub fn write_vtu(mesh: &HighOrderMesh, quality: &[ElementQuality], level: usize, path: &Path) -> Result<()> {
    let text = format_vtu(mesh, quality, level)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
