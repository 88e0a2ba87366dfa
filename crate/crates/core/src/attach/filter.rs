//! Grouping of attachment surfaces with mesh components and the
//! direction/distance filters that produce pull targets.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::Vec3;
use crate::loss::{sided_chamfer_indexed, NearestNeighborIndex};
use crate::mesh::{connected_components, extract_boundary_surface, vertex_normals, SurfaceMesh, VolumetricMesh};

pub const DEFAULT_TAU_COS: f64 = 0.5;
pub const DEFAULT_TAU_DIST: f64 = 2.5;

/// Distance below which an attachment point counts as lying on the mesh.
const COINCIDENT: f64 = 1e-9;

/// One attachment surface paired with a mesh component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttachmentPair {
    pub component: usize,
    /// Retained part of the attachment surface. `source_vertices` maps into
    /// the input surface.
    pub surface: SurfaceMesh,
    /// Nearest mesh vertex (global id) of each retained vertex.
    pub nearest: Vec<usize>,
    /// Vertex count of the connected component before filtering.
    pub input_vertices: usize,
}

impl AttachmentPair {
    pub fn is_empty(&self) -> bool {
        self.surface.vertices.is_empty()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AttachmentPairing {
    pub pairs: Vec<AttachmentPair>,
}

impl AttachmentPairing {
    pub fn active_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| !p.is_empty()).count()
    }
}

/// Boundary surface of one mesh component with its outward vertex normals.
#[derive(Debug, Clone)]
pub struct ComponentSurface {
    pub component: usize,
    pub surface: SurfaceMesh,
    pub normals: Vec<Vec3>,
    index: NearestNeighborIndex,
}

impl ComponentSurface {
    pub fn new(mesh: &VolumetricMesh, component: usize) -> Result<Self> {
        let surface = extract_boundary_surface(mesh, Some(component))?;
        let normals = vertex_normals(&surface)?;
        let index = NearestNeighborIndex::new(&surface.vertices);
        Ok(Self {
            component,
            surface,
            normals,
            index,
        })
    }

    pub fn all(mesh: &VolumetricMesh) -> Result<Vec<Self>> {
        (0..mesh.num_components()).map(|c| Self::new(mesh, c)).collect()
    }

    /// Global mesh vertex id of local surface vertex `i`.
    pub fn global_id(&self, i: usize) -> usize {
        self.surface.source_vertices.as_ref().expect("boundary surfaces carry source ids")[i]
    }
}

/// Symmetric squared chamfer between two vertex sets.
fn symmetric_chamfer(a: &[Vec3], a_index: &NearestNeighborIndex, b: &[Vec3]) -> Result<f64> {
    let b_index = NearestNeighborIndex::new(b);
    Ok(0.5 * (sided_chamfer_indexed(b, a_index)?.value + sided_chamfer_indexed(a, &b_index)?.value))
}

/// Splits `s` into connected parts and assigns each to the mesh component
/// with the lowest symmetric chamfer; ties go to the lower component id.
pub fn assign_pairs(components: &[ComponentSurface], s: &SurfaceMesh) -> Result<Vec<(usize, SurfaceMesh)>> {
    let mut out = Vec::new();
    for part in connected_components(s) {
        let mut best = (f64::INFINITY, usize::MAX);
        for comp in components {
            let d = symmetric_chamfer(&comp.surface.vertices, &comp.index, &part.vertices)?;
            if d < best.0 {
                best = (d, comp.component);
            }
        }
        if best.1 != usize::MAX {
            out.push((best.1, part));
        }
    }
    Ok(out)
}

/// Per attachment vertex: nearest component vertex (local index), unit
/// direction from it and distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDirections {
    pub nearest: Vec<usize>,
    pub directions: Vec<Vec3>,
    pub distances: Vec<f64>,
}

/// Direction from the nearest mesh vertex to each attachment vertex.
/// Coincident points take the mesh normal.
pub fn nearest_point_direction(comp: &ComponentSurface, s: &SurfaceMesh) -> PointDirections {
    let mut out = PointDirections {
        nearest: Vec::with_capacity(s.vertices.len()),
        directions: Vec::with_capacity(s.vertices.len()),
        distances: Vec::with_capacity(s.vertices.len()),
    };
    for p in &s.vertices {
        let nn = comp.index.nearest(p);
        let diff = p - nn.point;
        let dist = diff.norm();
        out.nearest.push(nn.index);
        out.directions.push(if dist < COINCIDENT { comp.normals[nn.index] } else { diff / dist });
        out.distances.push(dist);
    }
    out
}

/// Keeps vertices whose direction makes cosine >= `tau_cos` with the mesh
/// normal at their nearest point; faces touching a dropped vertex go too.
pub fn filter_by_direction(s: &SurfaceMesh, directions: &[Vec3], normals: &[Vec3], tau_cos: f64) -> (SurfaceMesh, Vec<bool>) {
    let keep: Vec<bool> = directions.iter().zip(normals).map(|(d, n)| d.dot(n) >= tau_cos).collect();
    (s.retain_vertices(&keep), keep)
}

/// Keeps vertices within `tau_dist` of the mesh.
pub fn filter_by_distance(s: &SurfaceMesh, distances: &[f64], tau_dist: f64) -> (SurfaceMesh, Vec<bool>) {
    let keep: Vec<bool> = distances.iter().map(|&d| d <= tau_dist).collect();
    (s.retain_vertices(&keep), keep)
}

fn select<T: Clone>(items: &[T], keep: &[bool]) -> Vec<T> {
    items.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| x.clone()).collect()
}

/// Pairs the connected parts of `s` with mesh components, then filters each
/// part by direction and distance. Pairs left empty are kept and reported.
pub fn group_and_filter(mesh: &VolumetricMesh, s: &SurfaceMesh, tau_cos: f64, tau_dist: f64) -> Result<AttachmentPairing> {
    let components = ComponentSurface::all(mesh)?;
    group_and_filter_with(&components, s, tau_cos, tau_dist)
}

pub fn group_and_filter_with(
    components: &[ComponentSurface],
    s: &SurfaceMesh,
    tau_cos: f64,
    tau_dist: f64,
) -> Result<AttachmentPairing> {
    let mut pairing = AttachmentPairing::default();
    for (cid, part) in assign_pairs(components, s)? {
        let comp = components.iter().find(|c| c.component == cid).expect("assigned to a known component");
        let dirs = nearest_point_direction(comp, &part);
        let normals: Vec<Vec3> = dirs.nearest.iter().map(|&m| comp.normals[m]).collect();
        let (by_dir, keep1) = filter_by_direction(&part, &dirs.directions, &normals, tau_cos);
        let dist1 = select(&dirs.distances, &keep1);
        let nearest1 = select(&dirs.nearest, &keep1);
        let (by_dist, keep2) = filter_by_distance(&by_dir, &dist1, tau_dist);
        let nearest: Vec<usize> = select(&nearest1, &keep2).into_iter().map(|m| comp.global_id(m)).collect();
        if by_dist.vertices.is_empty() {
            log::warn!("attachment part paired with component {cid} is empty after filtering");
        }
        pairing.pairs.push(AttachmentPair {
            component: cid,
            surface: by_dist,
            nearest,
            input_vertices: part.vertices.len(),
        });
    }
    Ok(pairing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::primitives::{hex_block, icosphere, sector_tube};

    fn plate() -> VolumetricMesh {
        hex_block([6, 6, 1], Vec3::new(1.0, 1.0, 1.0), Vec3::new(-3.0, -3.0, -1.0))
    }

    fn blob_at(center: Vec3, r: f64) -> SurfaceMesh {
        let mut s = icosphere(1, r);
        s.vertices.iter_mut().for_each(|v| *v += center);
        s
    }

    fn point_surface(p: Vec3) -> SurfaceMesh {
        SurfaceMesh {
            vertices: vec![p],
            ..Default::default()
        }
    }

    #[test]
    fn point_above_plane() {
        let comp = ComponentSurface::new(&plate(), 0).unwrap();
        let d = nearest_point_direction(&comp, &point_surface(Vec3::new(0.0, 0.0, 1.0)));
        assert!((d.directions[0] - Vec3::z()).norm() < 1e-12);
        assert!((d.distances[0] - 1.0).abs() < 1e-12);
        let d = nearest_point_direction(&comp, &point_surface(Vec3::new(0.0, 0.0, 0.0)));
        assert_eq!(d.distances[0], 0.0);
        assert!((d.directions[0] - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn outward_blob_fully_kept() {
        let m = plate();
        let out = blob_at(Vec3::new(0.0, 0.0, 1.2), 0.5);
        let p = group_and_filter(&m, &out, 0.5, 2.5).unwrap();
        assert_eq!(p.pairs.len(), 1);
        assert_eq!(p.pairs[0].surface.vertices.len(), out.vertices.len());
        assert_eq!(p.pairs[0].surface.faces.len(), out.faces.len());
    }

    #[test]
    fn tangential_blob_discarded() {
        // thin flat wall; points lie in its mid-plane, beside the large faces
        let m = hex_block([1, 8, 8], Vec3::new(0.5, 1.0, 1.0), Vec3::zeros());
        let comp = ComponentSurface::new(&m, 0).unwrap();
        // points sampled on a ring tangent to the large x-faces
        let ring: Vec<Vec3> = (0..12)
            .map(|k| {
                let t = k as f64 / 12.0 * std::f64::consts::TAU;
                Vec3::new(0.0, 4.0 + 1.5 * t.cos(), 4.0 + 1.5 * t.sin())
            })
            .collect();
        let s = SurfaceMesh {
            vertices: ring,
            ..Default::default()
        };
        let d = nearest_point_direction(&comp, &s);
        let normals: Vec<Vec3> = d.nearest.iter().map(|&i| comp.normals[i]).collect();
        let (kept, _) = filter_by_direction(&s, &d.directions, &normals, 0.5);
        assert!(kept.vertices.is_empty());
    }

    #[test]
    fn hemisphere_split_at_zero() {
        // directions sampled over the sphere; normal +z; tau_cos = 0 keeps z >= 0
        let sphere = icosphere(2, 1.0);
        let dirs: Vec<Vec3> = sphere.vertices.iter().map(|v| v.normalize()).collect();
        let normals = vec![Vec3::z(); dirs.len()];
        let (_, keep) = filter_by_direction(&sphere, &dirs, &normals, 0.0);
        let expected: Vec<bool> = dirs.iter().map(|d| d.z >= 0.0).collect();
        assert_eq!(keep, expected);
    }

    #[test]
    fn distance_threshold() {
        let s = icosphere(1, 1.0);
        let d: Vec<f64> = (0..s.vertices.len()).map(|i| i as f64 * 0.3).collect();
        let (all, _) = filter_by_distance(&s, &d, 1e9);
        assert_eq!(all.vertices, s.vertices);
        assert_eq!(all.faces.len(), s.faces.len());
        let (none, _) = filter_by_distance(&s, &d, -1.0);
        assert!(none.vertices.is_empty() && none.faces.is_empty());
        let (mixed, keep) = filter_by_distance(&s, &d, 2.5);
        assert_eq!(mixed.vertices.len(), d.iter().filter(|&&x| x <= 2.5).count());
        assert!(keep.iter().zip(&d).all(|(&k, &x)| k == (x <= 2.5)));
    }

    #[test]
    fn blobs_pair_with_nearest_components() {
        let m = sector_tube(3, 12, 12, 2, 8.0, 10.0, 12.0);
        let comps = ComponentSurface::all(&m).unwrap();
        let mut s = SurfaceMesh::default();
        for sector in 0..3 {
            let th = std::f64::consts::TAU * (sector as f64 + 0.5) / 3.0;
            let b = blob_at(Vec3::new(11.0 * th.cos(), 11.0 * th.sin(), 6.0), 0.6);
            let off = s.vertices.len();
            s.vertices.extend(b.vertices);
            s.faces.extend(b.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        }
        let p = group_and_filter_with(&comps, &s, 0.5, 2.5).unwrap();
        let ids: Vec<usize> = p.pairs.iter().map(|p| p.component).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        for pair in &p.pairs {
            assert!(pair.surface.vertices.len() as f64 >= 0.9 * pair.input_vertices as f64);
        }
    }

    #[test]
    fn equidistant_blob_goes_to_lower_id() {
        // two mirrored slabs; a blob centered between them
        let a = hex_block([2, 2, 1], Vec3::repeat(1.0), Vec3::new(-1.0, -1.0, -3.0));
        let mut vertices = a.vertices.clone();
        let mut cells = a.cells.clone();
        let off = vertices.len();
        vertices.extend(a.vertices.iter().map(|v| Vec3::new(v.x, v.y, -v.z)));
        for c in &a.cells {
            let mut n: Vec<usize> = c.nodes.iter().map(|&i| i + off).collect();
            // mirroring flips orientation; swap bottom and top layers
            n.rotate_left(4);
            cells.push(crate::mesh::Cell { kind: c.kind, component: 1, nodes: n });
        }
        let m = VolumetricMesh::new(vertices, cells, vec![], vec!["a".into(), "b".into()]).unwrap();
        let blob = blob_at(Vec3::zeros(), 0.5);
        let p = group_and_filter(&m, &blob, 0.5, 5.0).unwrap();
        assert_eq!(p.pairs[0].component, 0);
    }

    #[test]
    fn far_blob_and_empty_input() {
        let m = plate();
        let far = blob_at(Vec3::new(0.0, 0.0, 10.0), 0.5);
        let p = group_and_filter(&m, &far, 0.5, 2.5).unwrap();
        assert_eq!(p.pairs.len(), 1);
        assert!(p.pairs[0].is_empty());
        let none = group_and_filter(&m, &SurfaceMesh::default(), 0.5, 2.5).unwrap();
        assert!(none.pairs.is_empty());
    }

    #[test]
    fn filtering_is_monotone() {
        let m = plate();
        let s = blob_at(Vec3::new(1.0, 0.5, 1.5), 1.2);
        let mut prev = usize::MAX;
        for tau in [-1.0, 0.0, 0.5, 0.9] {
            let n = group_and_filter(&m, &s, tau, 2.5).unwrap().pairs[0].surface.vertices.len();
            assert!(n <= prev);
            prev = n;
        }
        let mut prev = 0;
        for dist in [0.5, 1.25, 2.5, 5.0] {
            let n = group_and_filter(&m, &s, -1.0, dist).unwrap().pairs[0].surface.vertices.len();
            assert!(n >= prev);
            prev = n;
        }
    }
}
