use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Local faces of an 8-node hexahedron, outward-oriented for a positively
/// oriented cell (nodes 0..3 bottom counterclockwise, 4..7 top).
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// `HEX_OPPOSITE[f]` is the local face across the cell from `f`.
pub const HEX_OPPOSITE: [usize; 6] = [1, 0, 4, 5, 2, 3];

pub const HEX_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Local faces of a 4-node tetrahedron, outward-oriented when
/// `det(x1-x0, x2-x0, x3-x0) > 0`.
pub const TET_FACES: [[usize; 3]; 4] = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];

pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Hex,
    Tet,
}

impl CellKind {
    pub fn code(self) -> &'static str {
        match self {
            CellKind::Hex => "H8",
            CellKind::Tet => "T4",
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            CellKind::Hex => 8,
            CellKind::Tet => 4,
        }
    }

    pub fn face_count(self) -> usize {
        match self {
            CellKind::Hex => 6,
            CellKind::Tet => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub component: usize,
    pub nodes: Vec<usize>,
}

impl Cell {
    pub fn hex(component: usize, nodes: [usize; 8]) -> Self {
        Self {
            kind: CellKind::Hex,
            component,
            nodes: nodes.to_vec(),
        }
    }

    pub fn tet(component: usize, nodes: [usize; 4]) -> Self {
        Self {
            kind: CellKind::Tet,
            component,
            nodes: nodes.to_vec(),
        }
    }

    /// Global node ids of local face `face`, in outward order.
    pub fn face_nodes(&self, face: usize) -> Vec<usize> {
        match self.kind {
            CellKind::Hex => HEX_FACES[face].iter().map(|&l| self.nodes[l]).collect(),
            CellKind::Tet => TET_FACES[face].iter().map(|&l| self.nodes[l]).collect(),
        }
    }

    pub fn edges(&self) -> Vec<[usize; 2]> {
        let table: &[[usize; 2]] = match self.kind {
            CellKind::Hex => &HEX_EDGES,
            CellKind::Tet => &TET_EDGES,
        };
        table
            .iter()
            .map(|e| [self.nodes[e[0]], self.nodes[e[1]]])
            .collect()
    }
}

/// A reference to one local face of one cell, tagged with its base class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseFace {
    pub class: usize,
    pub cell: usize,
    pub face: usize,
}

/// Sorted node ids of a face; identifies the face regardless of orientation.
pub(crate) fn face_key(nodes: &[usize]) -> Vec<usize> {
    let mut k = nodes.to_vec();
    k.sort_unstable();
    k
}

/// Volumetric hex/tet mesh with named components and tagged base faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumetricMesh {
    pub vertices: Vec<Vec3>,
    pub cells: Vec<Cell>,
    pub base_faces: Vec<BaseFace>,
    pub component_names: Vec<String>,
}

impl VolumetricMesh {
    /// Builds a mesh and checks index bounds, base-face uniqueness and
    /// edge-connectivity of every component.
    pub fn new(
        vertices: Vec<Vec3>,
        cells: Vec<Cell>,
        base_faces: Vec<BaseFace>,
        component_names: Vec<String>,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            cells,
            base_faces,
            component_names,
        };
        mesh.check()?;
        Ok(mesh)
    }

    fn check(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (ci, cell) in self.cells.iter().enumerate() {
            if cell.nodes.len() != cell.kind.node_count() {
                return Err(Error::InvalidMesh(format!(
                    "cell {ci} has {} nodes, expected {}",
                    cell.nodes.len(),
                    cell.kind.node_count()
                )));
            }
            if let Some(&bad) = cell.nodes.iter().find(|&&n| n >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "cell {ci} references vertex {bad} but only {nv} exist"
                )));
            }
            let distinct: HashSet<usize> = cell.nodes.iter().copied().collect();
            if distinct.len() != cell.nodes.len() {
                return Err(Error::InvalidMesh(format!("cell {ci} repeats a node")));
            }
            if cell.component >= self.component_names.len() {
                return Err(Error::InvalidMesh(format!(
                    "cell {ci} has component {} but only {} names",
                    cell.component,
                    self.component_names.len()
                )));
            }
        }
        let mut seen = HashSet::new();
        for bf in &self.base_faces {
            let cell = self.cells.get(bf.cell).ok_or_else(|| {
                Error::InvalidMesh(format!("base face references missing cell {}", bf.cell))
            })?;
            if bf.face >= cell.kind.face_count() {
                return Err(Error::InvalidMesh(format!(
                    "base face ({}, {}) has invalid local face id",
                    bf.cell, bf.face
                )));
            }
            if !seen.insert((bf.cell, bf.face)) {
                return Err(Error::InvalidMesh(format!(
                    "base face ({}, {}) listed twice",
                    bf.cell, bf.face
                )));
            }
        }
        self.check_components_connected()
    }

    fn check_components_connected(&self) -> Result<()> {
        // union-find over cells sharing an edge, restricted to each component
        let mut parent: Vec<usize> = (0..self.cells.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut edge_owner: HashMap<(usize, [usize; 2]), usize> = HashMap::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            for [a, b] in cell.edges() {
                let key = (cell.component, [a.min(b), a.max(b)]);
                match edge_owner.get(&key) {
                    Some(&other) => {
                        let (ra, rb) = (find(&mut parent, ci), find(&mut parent, other));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                    None => {
                        edge_owner.insert(key, ci);
                    }
                }
            }
        }
        let mut roots: HashMap<usize, usize> = HashMap::new();
        for ci in 0..self.cells.len() {
            let r = find(&mut parent, ci);
            let comp = self.cells[ci].component;
            match roots.get(&comp) {
                Some(&r0) if r0 != r => {
                    return Err(Error::InvalidMesh(format!(
                        "component {comp} is not edge-connected"
                    )))
                }
                _ => {
                    roots.insert(comp, r);
                }
            }
        }
        Ok(())
    }

    /// Number of base classes (one more than the largest class id).
    pub fn num_classes(&self) -> usize {
        self.base_faces
            .iter()
            .map(|b| b.class + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn num_components(&self) -> usize {
        self.component_names.len()
    }

    pub fn face_nodes(&self, bf: &BaseFace) -> Vec<usize> {
        self.cells[bf.cell].face_nodes(bf.face)
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        Self {
            vertices,
            cells: self.cells.clone(),
            base_faces: self.base_faces.clone(),
            component_names: self.component_names.clone(),
        }
    }

    pub fn same_connectivity(&self, other: &VolumetricMesh) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.cells == other.cells
            && self.base_faces == other.base_faces
    }

    pub fn check_same_connectivity(&self, other: &VolumetricMesh) -> Result<()> {
        if self.vertices.len() != other.vertices.len() {
            return Err(Error::ConnectivityMismatch(format!(
                "{} vs {} vertices",
                self.vertices.len(),
                other.vertices.len()
            )));
        }
        if self.cells != other.cells {
            return Err(Error::ConnectivityMismatch("cells differ".into()));
        }
        if self.base_faces != other.base_faces {
            return Err(Error::ConnectivityMismatch("base faces differ".into()));
        }
        Ok(())
    }

    pub fn is_all_hex(&self) -> bool {
        self.cells.iter().all(|c| c.kind == CellKind::Hex)
    }

    pub fn cell_centroid(&self, cell: usize) -> Vec3 {
        let nodes = &self.cells[cell].nodes;
        nodes
            .iter()
            .fold(Vec3::zeros(), |acc, &n| acc + self.vertices[n])
            / nodes.len() as f64
    }

    /// Template meshes must not contain inverted or flat elements.
    pub fn validate_template(&self) -> Result<()> {
        let sj = crate::metrics::scaled_jacobian(self);
        if let Some((ci, v)) = sj
            .iter()
            .enumerate()
            .find(|(_, v)| **v <= 0.0)
            .map(|(i, v)| (i, *v))
        {
            return Err(Error::InvalidMesh(format!(
                "template cell {ci} has scaled Jacobian {v}"
            )));
        }
        Ok(())
    }

    /// Unique undirected edges over all cells, sorted.
    pub fn unique_edges(&self) -> Vec<[usize; 2]> {
        let mut set: Vec<[usize; 2]> = self
            .cells
            .iter()
            .flat_map(|c| c.edges())
            .map(|[a, b]| [a.min(b), a.max(b)])
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }
}
