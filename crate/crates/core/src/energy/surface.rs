//! Surface regularizers on triangulated base surfaces.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geom::{triangle_normal_unnormalized, Vec3};
use crate::mesh::SurfaceMesh;

/// Face area below which a triangle is treated as degenerate.
const MIN_DOUBLE_AREA: f64 = 1e-14;

/// Connectivity of a triangle surface, built once and reused while vertex
/// positions change.
#[derive(Debug, Clone)]
pub struct SurfaceTopology {
    pub faces: Vec<[usize; 3]>,
    pub neighbors: Vec<Vec<usize>>,
    /// Faces sharing an edge.
    pub face_pairs: Vec<[usize; 2]>,
}

impl SurfaceTopology {
    pub fn new(surface: &SurfaceMesh) -> Self {
        let n = surface.vertices.len();
        let mut nbr: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut by_edge: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (fi, f) in surface.faces.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                nbr[a].insert(b);
                nbr[b].insert(a);
                by_edge.entry([a.min(b), a.max(b)]).or_default().push(fi);
            }
        }
        let mut face_pairs = Vec::new();
        for fs in by_edge.values() {
            for i in 0..fs.len() {
                for j in i + 1..fs.len() {
                    face_pairs.push([fs[i], fs[j]]);
                }
            }
        }
        Self {
            faces: surface.faces.clone(),
            neighbors: nbr.into_iter().map(|s| s.into_iter().collect()).collect(),
            face_pairs,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.neighbors.len()
    }

    /// Cosine between the normals of each face pair at `pos`; `None` for
    /// pairs touching a degenerate face.
    pub fn pair_cosines(&self, pos: &[Vec3]) -> Vec<Option<f64>> {
        self.face_pairs
            .iter()
            .map(|&[f1, f2]| {
                let m1 = self.face_normal(f1, pos);
                let m2 = self.face_normal(f2, pos);
                let (l1, l2) = (m1.norm(), m2.norm());
                (l1 > MIN_DOUBLE_AREA && l2 > MIN_DOUBLE_AREA).then(|| m1.dot(&m2) / (l1 * l2))
            })
            .collect()
    }

    fn face_normal(&self, f: usize, pos: &[Vec3]) -> Vec3 {
        let [a, b, c] = self.faces[f];
        triangle_normal_unnormalized(&pos[a], &pos[b], &pos[c])
    }

    /// Adds `scale * d cos / d x` for one face pair.
    fn add_cos_gradient(&self, pair: [usize; 2], pos: &[Vec3], scale: f64, grad: &mut [Vec3]) {
        let m = [self.face_normal(pair[0], pos), self.face_normal(pair[1], pos)];
        let n = [m[0].normalize(), m[1].normalize()];
        for s in 0..2 {
            let (own, other) = (n[s], n[1 - s]);
            let gm = (other - own * own.dot(&other)) * (scale / m[s].norm());
            let [a, b, c] = self.faces[pair[s]];
            let gb = (pos[c] - pos[a]).cross(&gm);
            let gc = gm.cross(&(pos[b] - pos[a]));
            grad[a] -= gb + gc;
            grad[b] += gb;
            grad[c] += gc;
        }
    }

    /// Mean `1 - cos` over adjacent face pairs.
    pub fn normal_consistency(&self, pos: &[Vec3]) -> (f64, Vec<Vec3>) {
        self.normal_deviation_impl(pos, None)
    }

    /// Mean `(cos - cos_rest)^2` over adjacent face pairs.
    pub fn normal_deviation(&self, pos: &[Vec3], rest: &[Option<f64>]) -> (f64, Vec<Vec3>) {
        self.normal_deviation_impl(pos, Some(rest))
    }

    fn normal_deviation_impl(&self, pos: &[Vec3], rest: Option<&[Option<f64>]>) -> (f64, Vec<Vec3>) {
        let cos = self.pair_cosines(pos);
        let mut grad = vec![Vec3::zeros(); pos.len()];
        let valid: Vec<usize> = (0..cos.len())
            .filter(|&i| cos[i].is_some() && rest.is_none_or(|r| r[i].is_some()))
            .collect();
        if valid.len() < cos.len() {
            log::warn!("{} face pairs touch degenerate faces and were skipped", cos.len() - valid.len());
        }
        if valid.is_empty() {
            return (0.0, grad);
        }
        let inv = 1.0 / valid.len() as f64;
        let mut total = 0.0;
        for &i in &valid {
            let c = cos[i].unwrap();
            let scale = match rest {
                None => {
                    total += 1.0 - c;
                    -inv
                }
                Some(r) => {
                    let d = c - r[i].unwrap();
                    total += d * d;
                    2.0 * d * inv
                }
            };
            self.add_cos_gradient(self.face_pairs[i], pos, scale, &mut grad);
        }
        (total * inv, grad)
    }

    /// Mean over non-isolated vertices of `|x_i - mean(x_j in ring)|^2`.
    pub fn laplacian(&self, values: &[Vec3]) -> (f64, Vec<Vec3>) {
        let mut grad = vec![Vec3::zeros(); values.len()];
        let active = self.neighbors.iter().filter(|r| !r.is_empty()).count();
        if active == 0 {
            return (0.0, grad);
        }
        let inv = 1.0 / active as f64;
        let mut total = 0.0;
        for (i, ring) in self.neighbors.iter().enumerate() {
            if ring.is_empty() {
                continue;
            }
            let k = 1.0 / ring.len() as f64;
            let mean = ring.iter().map(|&j| values[j]).sum::<Vec3>() * k;
            let l = values[i] - mean;
            total += l.norm_squared();
            let g = l * (2.0 * inv);
            grad[i] += g;
            for &j in ring {
                grad[j] -= g * k;
            }
        }
        (total * inv, grad)
    }
}

/// Mean `1 - cos(n1, n2)` over faces sharing an edge.
pub fn normal_consistency_loss(surface: &SurfaceMesh) -> (f64, Vec<Vec3>) {
    SurfaceTopology::new(surface).normal_consistency(&surface.vertices)
}

/// Uniform-weight Laplacian loss on vertex positions.
pub fn laplacian_loss(surface: &SurfaceMesh) -> (f64, Vec<Vec3>) {
    let topo = SurfaceTopology::new(surface);
    let isolated = topo.neighbors.iter().filter(|r| r.is_empty()).count();
    if isolated > 0 {
        log::warn!("{isolated} isolated vertices excluded from the Laplacian loss");
    }
    topo.laplacian(&surface.vertices)
}

/// Template edges with their rest vectors.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    pub edges: Vec<[usize; 2]>,
    pub rest: Vec<Vec3>,
    rest_ratio: Vec<f64>,
}

impl EdgeSet {
    pub fn new(edges: Vec<[usize; 2]>, positions: &[Vec3]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidMesh("edge correspondence needs at least one edge".into()));
        }
        let rest: Vec<Vec3> = edges.iter().map(|&[a, b]| positions[b] - positions[a]).collect();
        let lens: Vec<f64> = rest.iter().map(|e| e.norm()).collect();
        if let Some(i) = lens.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::InvalidMesh(format!("rest edge {i} has zero length")));
        }
        let max = lens.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            rest_ratio: lens.iter().map(|l| l / max).collect(),
            edges,
            rest,
        })
    }

    pub fn from_surface(surface: &SurfaceMesh) -> Result<Self> {
        Self::new(surface.edges(), &surface.vertices)
    }
}

/// Edge-length-ratio loss between rest and displaced edges, gradient w.r.t.
/// the displacements.
pub fn edge_correspondence_loss(edges: &EdgeSet, displacements: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    let def: Vec<Vec3> = edges
        .edges
        .iter()
        .zip(&edges.rest)
        .map(|(&[a, b], r)| r + displacements[b] - displacements[a])
        .collect();
    let lens: Vec<f64> = def.iter().map(|e| e.norm()).collect();
    let (kmax, max) = lens
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, l)| if l > acc.1 { (i, l) } else { acc });
    if !(max > 0.0) {
        return Err(Error::CollapsedEdges);
    }
    let inv = 1.0 / edges.edges.len() as f64;
    let mut total = 0.0;
    let mut d_len = vec![0.0; lens.len()];
    let mut d_max = 0.0;
    for k in 0..lens.len() {
        let t = lens[k] / max;
        let diff = edges.rest_ratio[k] - t;
        total += diff * diff;
        let dt = -2.0 * diff * inv;
        d_len[k] += dt / max;
        d_max -= dt * lens[k] / (max * max);
    }
    d_len[kmax] += d_max;
    let mut grad = vec![Vec3::zeros(); displacements.len()];
    for (k, &[a, b]) in edges.edges.iter().enumerate() {
        if lens[k] > 0.0 && d_len[k] != 0.0 {
            let g = def[k] * (d_len[k] / lens[k]);
            grad[b] += g;
            grad[a] -= g;
        }
    }
    Ok((total * inv, grad))
}
