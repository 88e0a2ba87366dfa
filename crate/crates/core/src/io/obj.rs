//! Wavefront OBJ for triangle surfaces (positions and faces only).

use std::fmt::Write as _;

use crate::error::Result;
use crate::geom::Vec3;
use crate::io::lines::Lines;
use crate::mesh::SurfaceMesh;

pub fn surface_to_obj(s: &SurfaceMesh) -> String {
    let mut out = String::new();
    for v in &s.vertices {
        let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    for f in &s.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Reads `v` and `f` records; polygons are fan-triangulated and texture or
/// normal references after `/` are ignored.
pub fn surface_from_obj(text: &str) -> Result<SurfaceMesh> {
    let mut lines = Lines::new(text);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    while let Some(l) = lines.next_line() {
        let mut it = l.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = lines.parse(it.next(), "x")?;
                let y = lines.parse(it.next(), "y")?;
                let z = lines.parse(it.next(), "z")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let ids = it
                    .map(|t| {
                        let idx: usize = lines.parse(t.split('/').next(), "face index")?;
                        if idx == 0 {
                            return Err(lines.err("OBJ indices are 1-based"));
                        }
                        Ok(idx - 1)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if ids.len() < 3 {
                    return Err(lines.err("face with fewer than 3 vertices"));
                }
                for k in 1..ids.len() - 1 {
                    faces.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, faces)
}
