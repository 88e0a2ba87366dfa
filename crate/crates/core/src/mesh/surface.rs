use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_normal_unnormalized, Vec3};
use crate::mesh::volumetric::{face_key, VolumetricMesh};

/// Triangle surface. `source_vertices[i]`, when present, is the id of vertex
/// `i` in the mesh the surface was derived from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub component: Option<usize>,
    pub source_vertices: Option<Vec<usize>>,
}

impl SurfaceMesh {
    /// Validates face indices and drops zero-area faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= nv)) {
            return Err(Error::InvalidMesh(format!(
                "face {f:?} references a missing vertex ({nv} vertices)"
            )));
        }
        let before = faces.len();
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| {
                f[0] != f[1]
                    && f[1] != f[2]
                    && f[0] != f[2]
                    && triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) > 0.0
            })
            .collect();
        if faces.len() != before {
            log::warn!("dropped {} degenerate faces", before - faces.len());
        }
        Ok(Self {
            vertices,
            faces,
            component: None,
            source_vertices: None,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                triangle_area(&a, &b, &c)
            })
            .sum()
    }

    /// Signed enclosed volume (positive for outward-oriented closed surfaces).
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Sorted unique undirected edges.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .faces
            .iter()
            .flat_map(|f| [[f[0], f[1]], [f[1], f[2]], [f[2], f[0]]])
            .map(|[a, b]| [a.min(b), a.max(b)])
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Count of faces incident to each undirected edge.
    pub fn edge_face_counts(&self) -> HashMap<[usize; 2], usize> {
        let mut m = HashMap::new();
        for f in &self.faces {
            for [a, b] in [[f[0], f[1]], [f[1], f[2]], [f[2], f[0]]] {
                *m.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn is_watertight(&self) -> bool {
        self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Euler characteristic over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let used: BTreeSet<usize> = self.faces.iter().flatten().copied().collect();
        used.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// Keeps the vertices where `keep` is true, drops every face touching a
    /// discarded vertex. Vertex ids are compacted in order; the source map
    /// is composed so it still points into the original mesh.
    pub fn retain_vertices(&self, keep: &[bool]) -> SurfaceMesh {
        assert_eq!(keep.len(), self.vertices.len());
        let mut remap = vec![usize::MAX; keep.len()];
        let mut vertices = Vec::new();
        let mut source = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                remap[i] = vertices.len();
                vertices.push(self.vertices[i]);
                source.push(match &self.source_vertices {
                    Some(s) => s[i],
                    None => i,
                });
            }
        }
        let faces = self
            .faces
            .iter()
            .filter(|f| f.iter().all(|&i| keep[i]))
            .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        SurfaceMesh {
            vertices,
            faces,
            component: self.component,
            source_vertices: Some(source),
        }
    }
}

/// Splits a quad into two triangles along its shorter diagonal. Diagonals
/// equal to within rounding pick 0-2 so the split survives rigid motion.
pub fn triangulate_quad(q: [usize; 4], pos: &[Vec3]) -> [[usize; 3]; 2] {
    let d02 = (pos[q[0]] - pos[q[2]]).norm_squared();
    let d13 = (pos[q[1]] - pos[q[3]]).norm_squared();
    if d02 <= d13 + 1e-9 * d13.max(d02) {
        [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    } else {
        [[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
    }
}

fn triangulate_polygon(nodes: &[usize], pos: &[Vec3]) -> Vec<[usize; 3]> {
    match nodes.len() {
        3 => vec![[nodes[0], nodes[1], nodes[2]]],
        4 => triangulate_quad([nodes[0], nodes[1], nodes[2], nodes[3]], pos).to_vec(),
        n => unreachable!("{n}-gon face"),
    }
}

/// Builds a surface from polygon faces given in mesh vertex ids, compacting
/// vertices in ascending id order.
fn surface_from_polygons(mesh: &VolumetricMesh, polys: &[Vec<usize>]) -> SurfaceMesh {
    let used: BTreeSet<usize> = polys.iter().flatten().copied().collect();
    let source: Vec<usize> = used.into_iter().collect();
    let mut remap = HashMap::with_capacity(source.len());
    for (i, &g) in source.iter().enumerate() {
        remap.insert(g, i);
    }
    let faces = polys
        .iter()
        .flat_map(|p| triangulate_polygon(p, &mesh.vertices))
        .map(|t| [remap[&t[0]], remap[&t[1]], remap[&t[2]]])
        .collect();
    SurfaceMesh {
        vertices: source.iter().map(|&g| mesh.vertices[g]).collect(),
        faces,
        component: None,
        source_vertices: Some(source),
    }
}

/// Faces that belong to exactly one (selected) cell, triangulated. Quads
/// split along their shorter diagonal; order follows cell and local face
/// order.
pub fn extract_boundary_surface(
    mesh: &VolumetricMesh,
    component: Option<usize>,
) -> Result<SurfaceMesh> {
    if let Some(c) = component {
        if c >= mesh.num_components() {
            return Err(Error::UnknownComponent(c));
        }
    }
    let selected = |ci: usize| component.is_none_or(|c| mesh.cells[ci].component == c);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        if !selected(ci) {
            continue;
        }
        for f in 0..cell.kind.face_count() {
            *counts.entry(face_key(&cell.face_nodes(f))).or_insert(0) += 1;
        }
    }
    let mut polys = Vec::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        if !selected(ci) {
            continue;
        }
        for f in 0..cell.kind.face_count() {
            let nodes = cell.face_nodes(f);
            if counts[&face_key(&nodes)] == 1 {
                polys.push(nodes);
            }
        }
    }
    let mut s = surface_from_polygons(mesh, &polys);
    s.component = component;
    Ok(s)
}

/// Triangulated base faces of all classes.
pub fn base_surface(mesh: &VolumetricMesh) -> SurfaceMesh {
    let polys: Vec<Vec<usize>> = mesh.base_faces.iter().map(|b| mesh.face_nodes(b)).collect();
    surface_from_polygons(mesh, &polys)
}

/// Angle-weighted vertex normals, normalized.
pub fn vertex_normals(surface: &SurfaceMesh) -> Result<Vec<Vec3>> {
    let mut acc = vec![Vec3::zeros(); surface.vertices.len()];
    let mut touched = vec![false; surface.vertices.len()];
    for f in &surface.faces {
        let p = [
            surface.vertices[f[0]],
            surface.vertices[f[1]],
            surface.vertices[f[2]],
        ];
        let n = triangle_normal_unnormalized(&p[0], &p[1], &p[2]);
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        for k in 0..3 {
            let e1 = p[(k + 1) % 3] - p[k];
            let e2 = p[(k + 2) % 3] - p[k];
            let cos = (e1.dot(&e2) / (e1.norm() * e2.norm())).clamp(-1.0, 1.0);
            acc[f[k]] += n * cos.acos();
            touched[f[k]] = true;
        }
    }
    acc.into_iter()
        .zip(touched)
        .enumerate()
        .map(|(i, (n, t))| {
            let len = n.norm();
            if !t || len == 0.0 {
                Err(Error::IsolatedVertex(i))
            } else {
                Ok(n / len)
            }
        })
        .collect()
}

/// Partition of the faces by shared-vertex connectivity. Components are
/// ordered by their minimum vertex id; each one keeps a source map into
/// `surface`'s vertex ids.
pub fn connected_components(surface: &SurfaceMesh) -> Vec<SurfaceMesh> {
    let n = surface.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in &surface.faces {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[k]));
            if a != b {
                // the root is always the smallest id of the set
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (fi, f) in surface.faces.iter().enumerate() {
        by_root.entry(find(&mut parent, f[0])).or_default().push(fi);
    }
    by_root
        .into_values()
        .map(|faces| {
            let mut keep = vec![false; n];
            for &fi in &faces {
                for &v in &surface.faces[fi] {
                    keep[v] = true;
                }
            }
            let mut part = SurfaceMesh {
                vertices: surface.vertices.clone(),
                faces: faces.iter().map(|&fi| surface.faces[fi]).collect(),
                component: surface.component,
                source_vertices: None,
            };
            part = part.retain_vertices(&keep);
            part
        })
        .collect()
}
