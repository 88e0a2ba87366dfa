//! Plain-text mesh, pointcloud and loss-trace formats.

use std::fmt::Write as _;

use crate::error::Result;
use crate::geom::Vec3;
use crate::io::lines::Lines;
use crate::mesh::{BaseFace, Cell, CellKind, LabeledPointCloud, VolumetricMesh};
use crate::pipeline::LossParts;

pub const MESH_MAGIC: &str = "meshtune-mesh";
pub const POINTS_MAGIC: &str = "meshtune-points";
pub const FORMAT_VERSION: u32 = 1;

fn push_vec(out: &mut String, p: &Vec3) {
    // 17 significant digits round-trip every f64
    let _ = write!(out, " {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
}

pub fn mesh_to_string(mesh: &VolumetricMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MESH_MAGIC} {FORMAT_VERSION}\nunits mm");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = write!(s, "{i}");
        push_vec(&mut s, v);
        s.push('\n');
    }
    let _ = writeln!(s, "cells {}", mesh.cells.len());
    for (i, c) in mesh.cells.iter().enumerate() {
        let _ = write!(s, "{i} {} {}", c.kind.code(), c.component);
        for n in &c.nodes {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "base_faces {}", mesh.base_faces.len());
    for b in &mesh.base_faces {
        let _ = writeln!(s, "{} {} {}", b.class, b.cell, b.face);
    }
    let _ = writeln!(s, "component_names {}", mesh.component_names.len());
    for n in &mesh.component_names {
        let _ = writeln!(s, "{n}");
    }
    s
}

fn header(lines: &mut Lines, magic: &str) -> Result<()> {
    let l = lines.expect_line("header")?;
    let mut it = l.split_whitespace();
    if it.next() != Some(magic) {
        return Err(lines.err(format!("expected '{magic}' header")));
    }
    let v: u32 = lines.parse(it.next(), "format version")?;
    if v != FORMAT_VERSION {
        return Err(lines.err(format!("unsupported format version {v}")));
    }
    Ok(())
}

fn parse_vec<'a>(lines: &Lines, it: &mut impl Iterator<Item = &'a str>) -> Result<Vec3> {
    let x = lines.parse(it.next(), "x")?;
    let y = lines.parse(it.next(), "y")?;
    let z = lines.parse(it.next(), "z")?;
    Ok(Vec3::new(x, y, z))
}

fn check_index(lines: &Lines, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(lines.err(format!("expected index {want}, got {got}")));
    }
    Ok(())
}

pub fn mesh_from_str(text: &str) -> Result<VolumetricMesh> {
    let mut lines = Lines::new(text);
    header(&mut lines, MESH_MAGIC)?;
    let units: String = lines.keyed("units")?;
    if units != "mm" {
        return Err(lines.err(format!("unsupported units '{units}'")));
    }
    let nv: usize = lines.keyed("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let l = lines.expect_line("vertex")?;
        let mut it = l.split_whitespace();
        check_index(&lines, lines.parse(it.next(), "vertex index")?, i)?;
        vertices.push(parse_vec(&lines, &mut it)?);
    }
    let nc: usize = lines.keyed("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for i in 0..nc {
        let l = lines.expect_line("cell")?;
        let mut it = l.split_whitespace();
        check_index(&lines, lines.parse(it.next(), "cell index")?, i)?;
        let kind = match it.next() {
            Some("H8") => CellKind::Hex,
            Some("T4") => CellKind::Tet,
            other => return Err(lines.err(format!("unknown cell type {other:?}"))),
        };
        let component = lines.parse(it.next(), "component id")?;
        let nodes = (0..kind.node_count())
            .map(|_| lines.parse(it.next(), "node id"))
            .collect::<Result<Vec<usize>>>()?;
        if it.next().is_some() {
            return Err(lines.err("too many node ids"));
        }
        cells.push(Cell { kind, component, nodes });
    }
    let nb: usize = lines.keyed("base_faces")?;
    let mut base_faces = Vec::with_capacity(nb);
    for _ in 0..nb {
        let l = lines.expect_line("base face")?;
        let mut it = l.split_whitespace();
        base_faces.push(BaseFace {
            class: lines.parse(it.next(), "class")?,
            cell: lines.parse(it.next(), "cell")?,
            face: lines.parse(it.next(), "face")?,
        });
    }
    let nn: usize = lines.keyed("component_names")?;
    let mut names = Vec::with_capacity(nn);
    for _ in 0..nn {
        names.push(lines.expect_line("component name")?.to_string());
    }
    if lines.next_line().is_some() {
        return Err(lines.err("trailing content"));
    }
    VolumetricMesh::new(vertices, cells, base_faces, names)
}

pub fn points_to_string(cloud: &LabeledPointCloud) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{POINTS_MAGIC} {FORMAT_VERSION}\nunits mm");
    let _ = writeln!(s, "classes {}", cloud.num_classes());
    for (c, pts) in cloud.classes.iter().enumerate() {
        let _ = writeln!(s, "class {c} {}", pts.len());
        for p in pts {
            let mut line = String::new();
            push_vec(&mut line, p);
            let _ = writeln!(s, "{}", line.trim_start());
        }
    }
    s
}

pub fn points_from_str(text: &str) -> Result<LabeledPointCloud> {
    let mut lines = Lines::new(text);
    header(&mut lines, POINTS_MAGIC)?;
    let units: String = lines.keyed("units")?;
    if units != "mm" {
        return Err(lines.err(format!("unsupported units '{units}'")));
    }
    let n: usize = lines.keyed("classes")?;
    let mut classes = Vec::with_capacity(n);
    for c in 0..n {
        let l = lines.expect_line("class header")?;
        let mut it = l.split_whitespace();
        if it.next() != Some("class") {
            return Err(lines.err("expected 'class <id> <count>'"));
        }
        check_index(&lines, lines.parse(it.next(), "class id")?, c)?;
        let count: usize = lines.parse(it.next(), "point count")?;
        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            let l = lines.expect_line("point")?;
            pts.push(parse_vec(&lines, &mut l.split_whitespace())?);
        }
        classes.push(pts);
    }
    if lines.next_line().is_some() {
        return Err(lines.err("trailing content"));
    }
    Ok(LabeledPointCloud::new(classes))
}

/// CSV with one row per iteration.
pub fn trace_to_csv(trace: &[LossParts]) -> String {
    let mut s = String::from("iteration,total,d1,d2,reg\n");
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{:e},{:e},{:e},{:e}", l.total, l.d1, l.d2, l.reg);
    }
    s
}
