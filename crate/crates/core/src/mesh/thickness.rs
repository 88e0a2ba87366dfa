//! Element stacks through the wall, walked from base faces.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{centroid, Vec3};
use crate::mesh::volumetric::{face_key, BaseFace, CellKind, VolumetricMesh, HEX_OPPOSITE};

/// One layer of a stack: the cell and the local face it was entered through.
pub type StackLayer = (usize, usize);

fn face_index(mesh: &VolumetricMesh) -> HashMap<Vec<usize>, Vec<(usize, usize)>> {
    let mut idx: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        for f in 0..cell.kind.face_count() {
            idx.entry(face_key(&cell.face_nodes(f)))
                .or_default()
                .push((ci, f));
        }
    }
    idx
}

/// Walks from a base face through opposite faces until the stack leaves the
/// mesh. Returns each visited layer in order.
fn walk(
    mesh: &VolumetricMesh,
    idx: &HashMap<Vec<usize>, Vec<(usize, usize)>>,
    start: &BaseFace,
) -> Vec<StackLayer> {
    let mut layers = vec![(start.cell, start.face)];
    let (mut cell, mut face) = (start.cell, start.face);
    while layers.len() <= mesh.cells.len() {
        let exit = HEX_OPPOSITE[face];
        let key = face_key(&mesh.cells[cell].face_nodes(exit));
        let next = idx[&key]
            .iter()
            .find(|(c, _)| *c != cell && mesh.cells[*c].kind == CellKind::Hex)
            .copied();
        match next {
            Some((c, f)) => {
                cell = c;
                face = f;
                layers.push((c, f));
            }
            None => break,
        }
    }
    layers
}

fn face_centroid(mesh: &VolumetricMesh, cell: usize, face: usize) -> Vec3 {
    let pts: Vec<Vec3> = mesh.cells[cell]
        .face_nodes(face)
        .iter()
        .map(|&n| mesh.vertices[n])
        .collect();
    centroid(&pts)
}

/// Stacks for every base face, in base-face order.
pub fn base_stacks(mesh: &VolumetricMesh) -> Result<Vec<Vec<StackLayer>>> {
    if !mesh.is_all_hex() {
        return Err(Error::TetThickness);
    }
    let idx = face_index(mesh);
    Ok(mesh.base_faces.iter().map(|bf| walk(mesh, &idx, bf)).collect())
}

/// Per-cell unit thickness direction: from the centroid of the face a stack
/// entered the cell through to the centroid of its opposite face. Computed
/// on the rest geometry and kept fixed afterwards.
pub fn thickness_directions(mesh: &VolumetricMesh) -> Result<Vec<Vec3>> {
    let stacks = base_stacks(mesh)?;
    let mut dirs: Vec<Option<Vec3>> = vec![None; mesh.cells.len()];
    for stack in &stacks {
        for &(cell, face) in stack {
            if dirs[cell].is_some() {
                continue;
            }
            let a = face_centroid(mesh, cell, face);
            let b = face_centroid(mesh, cell, HEX_OPPOSITE[face]);
            let d = b - a;
            let len = d.norm();
            if len == 0.0 {
                return Err(Error::DegenerateCell(cell));
            }
            dirs[cell] = Some(d / len);
        }
    }
    dirs.into_iter()
        .enumerate()
        .map(|(c, d)| d.ok_or(Error::UnreachableCell(c)))
        .collect()
}

/// Per base face, the distance from its centroid to the centroid of the far
/// face of its element stack.
pub fn stack_thickness(mesh: &VolumetricMesh) -> Result<Vec<f64>> {
    let stacks = base_stacks(mesh)?;
    Ok(stacks
        .iter()
        .map(|stack| {
            let (c0, f0) = stack[0];
            let &(cl, fl) = stack.last().expect("stack has at least the base layer");
            let a = face_centroid(mesh, c0, f0);
            let b = face_centroid(mesh, cl, HEX_OPPOSITE[fl]);
            (b - a).norm()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation;
    use crate::mesh::volumetric::Cell;
    use crate::scene::primitives::{slab, tube};

    #[test]
    fn slab_directions_point_up() {
        let m = slab([3, 2, 4], Vec3::new(1.0, 1.5, 0.5));
        let d = thickness_directions(&m).unwrap();
        for v in d {
            assert!((v - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rotated_slab_directions_rotate() {
        let m = slab([2, 2, 3], Vec3::new(1.0, 1.0, 0.5));
        let q = rotation(&Vec3::new(0.2, -1.0, 0.4), 1.1);
        let mr = m.with_vertices(m.vertices.iter().map(|v| q * v).collect());
        let d = thickness_directions(&mr).unwrap();
        let expected = q * Vec3::new(0.0, 0.0, 1.0);
        for v in d {
            assert!((v - expected).norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn tube_directions_are_radial() {
        let m = tube(1, 24, 3, 10.0, 12.0, 8.0);
        let d = thickness_directions(&m).unwrap();
        for (c, dir) in d.iter().enumerate() {
            let cen = m.cell_centroid(c);
            let radial = Vec3::new(cen.x, cen.y, 0.0).normalize();
            let angle = dir.dot(&radial).abs().min(1.0).acos();
            assert!(angle < 10f64.to_radians(), "cell {c}: {angle}");
        }
    }

    #[test]
    fn tets_are_rejected() {
        let m = VolumetricMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::x(),
                Vec3::y(),
                Vec3::z(),
            ],
            vec![Cell::tet(0, [0, 1, 2, 3])],
            vec![BaseFace { class: 0, cell: 0, face: 0 }],
            vec!["t".into()],
        )
        .unwrap();
        assert!(matches!(thickness_directions(&m), Err(Error::TetThickness)));
    }

    #[test]
    fn unreachable_cell_is_reported() {
        let mut m = slab([2, 1, 1], Vec3::repeat(1.0));
        m.base_faces.retain(|b| b.cell == 0);
        assert!(matches!(
            thickness_directions(&m),
            Err(Error::UnreachableCell(1))
        ));
    }

    #[test]
    fn stack_thickness_of_slab() {
        let m = slab([2, 2, 3], Vec3::new(1.0, 1.0, 0.5));
        for t in stack_thickness(&m).unwrap() {
            assert!((t - 1.5).abs() < 1e-12);
        }
    }
}
