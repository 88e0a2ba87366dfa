use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Vec3};
use crate::mesh::surface::SurfaceMesh;
use crate::mesh::volumetric::VolumetricMesh;

/// Per-class point sets in mm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledPointCloud {
    pub classes: Vec<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<Vec3>>>,
}

impl LabeledPointCloud {
    pub fn new(classes: Vec<Vec<Vec3>>) -> Self {
        Self {
            classes,
            normals: None,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total_points(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    /// Errors unless there is at least one class and every class has points.
    pub fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::EmptyPointSet(format!("{what}: no classes")));
        }
        if let Some(i) = self.classes.iter().position(Vec::is_empty) {
            return Err(Error::EmptyPointSet(format!("{what}: class {i} is empty")));
        }
        Ok(())
    }

    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            classes: self
                .classes
                .iter()
                .map(|c| c.iter().map(&f).collect())
                .collect(),
            normals: None,
        }
    }

    pub fn all_points(&self) -> impl Iterator<Item = &Vec3> {
        self.classes.iter().flatten()
    }
}

/// Per class, the sorted unique mesh vertex ids touched by that class's base
/// faces.
pub fn base_vertex_ids(mesh: &VolumetricMesh) -> Result<Vec<Vec<usize>>> {
    let n = mesh.num_classes();
    let mut sets = vec![BTreeSet::new(); n];
    for bf in &mesh.base_faces {
        sets[bf.class].extend(mesh.face_nodes(bf));
    }
    sets.into_iter()
        .enumerate()
        .map(|(c, s)| {
            if s.is_empty() {
                Err(Error::EmptyBaseClass(c))
            } else {
                Ok(s.into_iter().collect())
            }
        })
        .collect()
}

/// Base-surface pointcloud: deduplicated base vertices per class, shifted by
/// `displacements` when given. The map from points to vertices is
/// `base_vertex_ids`, so gradients w.r.t. points scatter back unchanged.
pub fn base_surface_points(
    mesh: &VolumetricMesh,
    displacements: Option<&[Vec3]>,
) -> Result<LabeledPointCloud> {
    if mesh.base_faces.is_empty() {
        return Err(Error::EmptyBaseClass(0));
    }
    let ids = base_vertex_ids(mesh)?;
    Ok(gather_points(&mesh.vertices, displacements, &ids))
}

pub fn gather_points(
    vertices: &[Vec3],
    displacements: Option<&[Vec3]>,
    ids: &[Vec<usize>],
) -> LabeledPointCloud {
    let classes = ids
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|&v| match displacements {
                    Some(u) => vertices[v] + u[v],
                    None => vertices[v],
                })
                .collect()
        })
        .collect();
    LabeledPointCloud::new(classes)
}

/// `k` deterministic interior samples per triangle on a fixed barycentric
/// pattern. Off by default in every pipeline; vertex mode is exact.
pub fn densify_surface(surface: &SurfaceMesh, k: usize) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(surface.faces.len() * k);
    if k == 0 {
        return out;
    }
    // low-discrepancy points on the unit triangle (reflected 2D Halton)
    let halton = |mut i: usize, b: usize| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    for f in 0..surface.faces.len() {
        let [a, b, c] = surface.face_points(f);
        if triangle_area(&a, &b, &c) == 0.0 {
            continue;
        }
        for s in 1..=k {
            let (mut u, mut v) = (halton(s, 2), halton(s, 3));
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            out.push(a + (b - a) * u + (c - a) * v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::surface::extract_boundary_surface;
    use crate::scene::primitives::{hex_block, tube};

    #[test]
    fn zero_displacement_is_identity() {
        let m = tube(3, 12, 2, 5.0, 7.0, 6.0);
        let a = base_surface_points(&m, None).unwrap();
        let zero = vec![Vec3::zeros(); m.vertices.len()];
        let b = base_surface_points(&m, Some(&zero)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_shift_translates_every_point() {
        let m = tube(1, 10, 3, 5.0, 7.0, 6.0);
        let t = Vec3::new(0.3, -1.0, 2.5);
        let u = vec![t; m.vertices.len()];
        let a = base_surface_points(&m, None).unwrap();
        let b = base_surface_points(&m, Some(&u)).unwrap();
        for (ca, cb) in a.classes.iter().zip(&b.classes) {
            for (p, q) in ca.iter().zip(cb) {
                assert_eq!(*q, p + t);
            }
        }
    }

    #[test]
    fn class_sizes_match_brute_force_union() {
        let m = crate::scene::primitives::sector_tube(3, 2, 12, 2, 8.0, 10.0, 9.0);
        let pc = base_surface_points(&m, None).unwrap();
        assert_eq!(pc.num_classes(), 3);
        for (c, pts) in pc.classes.iter().enumerate() {
            let mut ids: Vec<usize> = Vec::new();
            for bf in m.base_faces.iter().filter(|b| b.class == c) {
                for n in m.face_nodes(bf) {
                    if !ids.contains(&n) {
                        ids.push(n);
                    }
                }
            }
            assert_eq!(pts.len(), ids.len());
        }
    }

    #[test]
    fn empty_class_errors() {
        let mut m = hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        m.base_faces = vec![crate::mesh::BaseFace {
            class: 1,
            cell: 0,
            face: 0,
        }];
        assert!(matches!(
            base_surface_points(&m, None),
            Err(Error::EmptyBaseClass(0))
        ));
    }

    #[test]
    fn densify_stays_on_surface() {
        let m = hex_block([1, 1, 1], Vec3::repeat(2.0), Vec3::zeros());
        let s = extract_boundary_surface(&m, None).unwrap();
        let pts = densify_surface(&s, 4);
        assert_eq!(pts.len(), 48);
        for p in pts {
            let on_face = (0..3).any(|k| p[k].abs() < 1e-12 || (p[k] - 2.0).abs() < 1e-12);
            assert!(on_face);
        }
    }
}
