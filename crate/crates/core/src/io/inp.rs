//! Abaqus-style INP export and a reader for the same subset.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::io::lines::Lines;
use crate::mesh::{base_vertex_ids, Cell, CellKind, VolumetricMesh};

const NSET_PER_LINE: usize = 16;

fn element_type(kind: CellKind) -> &'static str {
    match kind {
        CellKind::Hex => "C3D8",
        CellKind::Tet => "C3D4",
    }
}

/// Set names allow letters, digits and underscores only.
fn set_name(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if s.is_empty() { "PART".into() } else { s }
}

/// Nodes and elements use 1-based ids; element `i + 1` is cell `i`. Each
/// component becomes an element set, each base class a node set
/// `BASE_<class>`.
pub fn mesh_to_inp(mesh: &VolumetricMesh) -> String {
    let mut s = String::from("*HEADING\nmeshtune export, units mm\n*NODE\n");
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{}, {:.16e}, {:.16e}, {:.16e}", i + 1, v.x, v.y, v.z);
    }
    for comp in 0..mesh.num_components() {
        let name = mesh.component_names.get(comp).map_or_else(|| format!("COMPONENT_{comp}"), |n| set_name(n));
        for kind in [CellKind::Hex, CellKind::Tet] {
            let cells: Vec<(usize, &Cell)> = mesh
                .cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.component == comp && c.kind == kind)
                .collect();
            if cells.is_empty() {
                continue;
            }
            let _ = writeln!(s, "*ELEMENT, TYPE={}, ELSET={name}", element_type(kind));
            for (i, c) in cells {
                let _ = write!(s, "{}", i + 1);
                for n in &c.nodes {
                    let _ = write!(s, ", {}", n + 1);
                }
                s.push('\n');
            }
        }
    }
    if let Ok(classes) = base_vertex_ids(mesh) {
        for (c, ids) in classes.iter().enumerate() {
            let _ = writeln!(s, "*NSET, NSET=BASE_{c}");
            for chunk in ids.chunks(NSET_PER_LINE) {
                let line: Vec<String> = chunk.iter().map(|i| (i + 1).to_string()).collect();
                let _ = writeln!(s, "{}", line.join(", "));
            }
        }
    }
    s
}

/// Parsed INP content with 0-based ids. Cells are ordered by element id
/// and components numbered by first appearance of their element set.
#[derive(Debug, Clone, PartialEq)]
pub struct InpMesh {
    pub vertices: Vec<Vec3>,
    pub cells: Vec<Cell>,
    pub elsets: Vec<String>,
    pub nsets: BTreeMap<String, Vec<usize>>,
}

enum Block {
    None,
    Node,
    Element(CellKind, usize),
    Nset(String),
}

fn option<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header.split(',').skip(1).find_map(|kv| {
        let (k, v) = kv.split_once('=')?;
        k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
    })
}

pub fn inp_from_str(text: &str) -> Result<InpMesh> {
    let mut lines = Lines::new(text);
    let mut nodes: BTreeMap<usize, Vec3> = BTreeMap::new();
    let mut elements: BTreeMap<usize, Cell> = BTreeMap::new();
    let mut elsets: Vec<String> = Vec::new();
    let mut nsets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut block = Block::None;
    let one_based = |lines: &Lines, t: &str| -> Result<usize> {
        let v: usize = lines.parse(Some(t.trim()), "id")?;
        v.checked_sub(1).ok_or_else(|| lines.err("ids are 1-based"))
    };
    while let Some(l) = lines.next_line() {
        if l.starts_with("**") {
            continue;
        }
        if let Some(h) = l.strip_prefix('*') {
            let key = h.split(',').next().unwrap_or("").trim().to_ascii_uppercase();
            block = match key.as_str() {
                "NODE" => Block::Node,
                "ELEMENT" => {
                    let kind = match option(h, "TYPE").map(str::to_ascii_uppercase).as_deref() {
                        Some("C3D8") => CellKind::Hex,
                        Some("C3D4") => CellKind::Tet,
                        other => return Err(lines.err(format!("unsupported element type {other:?}"))),
                    };
                    let set = option(h, "ELSET").unwrap_or("PART").to_string();
                    let comp = match elsets.iter().position(|e| *e == set) {
                        Some(c) => c,
                        None => {
                            elsets.push(set);
                            elsets.len() - 1
                        }
                    };
                    Block::Element(kind, comp)
                }
                "NSET" => Block::Nset(option(h, "NSET").ok_or_else(|| lines.err("*NSET without NSET="))?.to_string()),
                _ => Block::None,
            };
            continue;
        }
        let toks: Vec<&str> = l.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
        match &block {
            Block::None => {}
            Block::Node => {
                if toks.len() != 4 {
                    return Err(lines.err("node line needs id and three coordinates"));
                }
                let id = one_based(&lines, toks[0])?;
                let p = Vec3::new(lines.parse(Some(toks[1]), "x")?, lines.parse(Some(toks[2]), "y")?, lines.parse(Some(toks[3]), "z")?);
                if nodes.insert(id, p).is_some() {
                    return Err(lines.err(format!("duplicate node {}", id + 1)));
                }
            }
            Block::Element(kind, comp) => {
                if toks.len() != kind.node_count() + 1 {
                    return Err(lines.err(format!("{} element needs {} nodes", element_type(*kind), kind.node_count())));
                }
                let id = one_based(&lines, toks[0])?;
                let ids = toks[1..].iter().map(|t| one_based(&lines, t)).collect::<Result<Vec<usize>>>()?;
                let cell = Cell {
                    kind: *kind,
                    component: *comp,
                    nodes: ids,
                };
                if elements.insert(id, cell).is_some() {
                    return Err(lines.err(format!("duplicate element {}", id + 1)));
                }
            }
            Block::Nset(name) => {
                let ids = toks.iter().map(|t| one_based(&lines, t)).collect::<Result<Vec<usize>>>()?;
                nsets.entry(name.clone()).or_default().extend(ids);
            }
        }
    }
    let expect_dense = |ids: Vec<usize>, what: &str| -> Result<()> {
        if ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(Error::InvalidMesh(format!("{what} ids are not contiguous from 1")));
        }
        Ok(())
    };
    expect_dense(nodes.keys().copied().collect(), "node")?;
    expect_dense(elements.keys().copied().collect(), "element")?;
    let vertices: Vec<Vec3> = nodes.into_values().collect();
    let cells: Vec<Cell> = elements.into_values().collect();
    if let Some(bad) = cells.iter().flat_map(|c| &c.nodes).find(|&&n| n >= vertices.len()) {
        return Err(Error::InvalidMesh(format!("element references missing node {}", bad + 1)));
    }
    Ok(InpMesh {
        vertices,
        cells,
        elsets,
        nsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::primitives::{hex_block, sector_tube};

    #[test]
    fn single_cube() {
        let m = hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let text = mesh_to_inp(&m);
        let node_lines = text.lines().skip_while(|l| *l != "*NODE").skip(1).take_while(|l| !l.starts_with('*')).count();
        assert_eq!(node_lines, 8);
        assert_eq!(text.matches("TYPE=C3D8").count(), 1);
        let back = inp_from_str(&text).unwrap();
        assert_eq!(back.cells.len(), 1);
        assert_eq!(back.vertices, m.vertices);
    }

    #[test]
    fn roundtrip_preserves_connectivity_and_sets() {
        let m = sector_tube(3, 2, 3, 2, 1.0, 1.5, 2.0);
        let back = inp_from_str(&mesh_to_inp(&m)).unwrap();
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.elsets, m.component_names);
        let base = base_vertex_ids(&m).unwrap();
        for (c, ids) in base.iter().enumerate() {
            assert_eq!(&back.nsets[&format!("BASE_{c}")], ids);
        }
        for c in &back.cells {
            let mut n = c.nodes.clone();
            n.sort_unstable();
            n.dedup();
            assert_eq!(n.len(), c.nodes.len());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(inp_from_str("*NODE\n0, 0, 0, 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(inp_from_str("*NODE\n1, 0, 0, 0\n*ELEMENT, TYPE=C3D4\n1, 1, 2, 3, 4\n").is_err());
        assert!(inp_from_str("*ELEMENT, TYPE=S4R\n").is_err());
    }
}
