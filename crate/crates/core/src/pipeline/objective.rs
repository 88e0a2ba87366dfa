//! The tune objective: pseudo-label chamfer, attachment pull and one
//! regularizer, differentiated end to end w.r.t. the control velocities.

use serde::{Deserialize, Serialize};

use crate::attach::{group_and_filter_with, AttachmentPairing, ComponentSurface};
use crate::energy::{bending_energy, edge_correspondence_loss, EdgeSet, StrainEnergy, SurfaceTopology};
use crate::error::{Error, Result};
use crate::field::{ControlGrid, Deformation, DeformationModel, Lattice};
use crate::geom::{Aabb, Vec3};
use crate::loss::{attachment_pull_loss, classwise_chamfer};
use crate::mesh::points::gather_points;
use crate::mesh::{base_surface, base_vertex_ids, thickness_directions, LabeledPointCloud, SurfaceMesh, VolumetricMesh};
use crate::pipeline::config::{Regularizer, TuneConfig};

/// Loss terms at one iterate. `reg` is unweighted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub d1: f64,
    pub d2: f64,
    pub reg: f64,
}

struct SurfaceReg {
    src: Vec<usize>,
    topo: SurfaceTopology,
    rest_cos: Vec<Option<f64>>,
    edges: EdgeSet,
    w_normal: f64,
    w_laplacian: f64,
    w_edge: f64,
}

impl SurfaceReg {
    fn new(snap: &VolumetricMesh, cfg: &TuneConfig) -> Result<Self> {
        let s = base_surface(snap);
        let topo = SurfaceTopology::new(&s);
        let rest_cos = topo.pair_cosines(&s.vertices);
        Ok(Self {
            src: s.source_vertices.clone().expect("base surface carries source ids"),
            edges: EdgeSet::from_surface(&s)?,
            topo,
            rest_cos,
            w_normal: cfg.lambda3_normal,
            w_laplacian: cfg.lambda4_laplacian,
            w_edge: cfg.lambda5_edge,
        })
    }

    /// Value and gradient w.r.t. the full vertex array (equal to the
    /// gradient w.r.t. the displacements).
    fn evaluate(&self, vertices: &[Vec3], disp: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let pos: Vec<Vec3> = self.src.iter().map(|&v| vertices[v]).collect();
        let u: Vec<Vec3> = self.src.iter().map(|&v| disp[v]).collect();
        let (n, gn) = self.topo.normal_deviation(&pos, &self.rest_cos);
        let (l, gl) = self.topo.laplacian(&u);
        let (e, ge) = edge_correspondence_loss(&self.edges, &u)?;
        let mut grad = vec![Vec3::zeros(); vertices.len()];
        for (k, &v) in self.src.iter().enumerate() {
            grad[v] += gn[k] * self.w_normal + gl[k] * self.w_laplacian + ge[k] * self.w_edge;
        }
        Ok((self.w_normal * n + self.w_laplacian * l + self.w_edge * e, grad))
    }
}

enum Reg {
    Volumetric(StrainEnergy),
    Bending,
    Surface(Box<SurfaceReg>),
}

struct Attachment<'a> {
    surface: &'a SurfaceMesh,
    /// Global boundary vertex ids of each component.
    component_ids: Vec<Vec<usize>>,
    pairing: AttachmentPairing,
    tau_cos: f64,
    tau_dist: f64,
}

impl Attachment<'_> {
    fn pair(&mut self, mesh: &VolumetricMesh) -> Result<()> {
        let comps = ComponentSurface::all(mesh)?;
        self.pairing = group_and_filter_with(&comps, self.surface, self.tau_cos, self.tau_dist)?;
        Ok(())
    }
}

/// Result of one objective evaluation.
pub struct Evaluation {
    pub loss: LossParts,
    /// Gradient w.r.t. the flat optimizer parameters.
    pub grad: Vec<f64>,
    pub vertices: Vec<Vec3>,
    pub state: Deformation,
}

/// Deforms `snap` by a control grid whose velocities are the parameters
/// times the control spacing, so parameters are in grid units.
pub struct FitProblem<'a> {
    snap: &'a VolumetricMesh,
    model: DeformationModel,
    control: Lattice,
    class_ids: Vec<Vec<usize>>,
    targets: &'a LabeledPointCloud,
    reg: Reg,
    attach: Option<Attachment<'a>>,
    w1: f64,
    lambda2: f64,
    lambda_user: f64,
}

/// Dense lattice over everything the optimization touches, and a control
/// grid whose support covers it.
pub fn build_lattices(region: &Aabb, cfg: &TuneConfig, control_mm: f64) -> Result<(ControlGrid, Lattice)> {
    let dense = Lattice::covering(region, cfg.dense_spacing_mm, cfg.margin_mm)?;
    let grid = ControlGrid::covering(&dense.bounds(), control_mm)?;
    Ok((grid, dense))
}

impl<'a> FitProblem<'a> {
    /// `rest` is the reference for the volumetric strain and must share
    /// connectivity with `snap`. `attachment` enables the pull term.
    pub fn new(
        snap: &'a VolumetricMesh,
        rest: &VolumetricMesh,
        targets: &'a LabeledPointCloud,
        attachment: Option<&'a SurfaceMesh>,
        cfg: &TuneConfig,
        control_mm: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        targets.require_nonempty("pseudo-labels")?;
        let class_ids = base_vertex_ids(snap)?;
        if class_ids.len() != targets.num_classes() {
            return Err(Error::ClassMismatch(class_ids.len(), targets.num_classes()));
        }
        let mut region = snap.bounding_box().union(&Aabb::from_points(targets.all_points()));
        if let Some(s) = attachment {
            region = region.union(&Aabb::from_points(&s.vertices));
        }
        let (grid, dense) = build_lattices(&region, cfg, control_mm)?;
        let model = DeformationModel::new(&grid.lattice, &dense, &snap.vertices, cfg.squaring_steps, cfg.clamp_mm())?;
        let reg = match cfg.regularizer {
            Regularizer::Volumetric => {
                rest.check_same_connectivity(snap)?;
                let dirs = match thickness_directions(rest) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        log::warn!("no thickness directions ({e}); anisotropic term disabled");
                        None
                    }
                };
                Reg::Volumetric(StrainEnergy::new(rest, dirs.as_deref(), &cfg.energy_weights())?)
            }
            Regularizer::FieldBending => Reg::Bending,
            Regularizer::Surface => Reg::Surface(Box::new(SurfaceReg::new(snap, cfg)?)),
        };
        let attach = match attachment {
            Some(s) if cfg.lambda2_d2 > 0.0 => {
                let comps = ComponentSurface::all(snap)?;
                let component_ids = comps
                    .iter()
                    .map(|c| c.surface.source_vertices.clone().expect("boundary surfaces carry source ids"))
                    .collect();
                let mut a = Attachment {
                    surface: s,
                    component_ids,
                    pairing: AttachmentPairing::default(),
                    tau_cos: cfg.tau_cos,
                    tau_dist: cfg.tau_dist_mm,
                };
                a.pair(snap)?;
                Some(a)
            }
            _ => None,
        };
        Ok(Self {
            snap,
            model,
            control: grid.lattice,
            class_ids,
            targets,
            reg,
            attach,
            w1: cfg.w1_d1,
            lambda2: cfg.lambda2_d2,
            lambda_user: cfg.lambda_user,
        })
    }

    pub fn snap(&self) -> &VolumetricMesh {
        self.snap
    }

    pub fn num_params(&self) -> usize {
        3 * self.control.len()
    }

    pub fn control_lattice(&self) -> &Lattice {
        &self.control
    }

    /// Scale from parameters to velocities (mm).
    pub fn param_scale(&self) -> f64 {
        self.control.min_spacing()
    }

    pub fn velocities(&self, params: &[f64]) -> Vec<Vec3> {
        let h = self.param_scale();
        params.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2]) * h).collect()
    }

    pub fn grid(&self, params: &[f64]) -> ControlGrid {
        ControlGrid::from_velocities(self.control, self.velocities(params)).expect("lattice sized by construction")
    }

    pub fn pairing(&self) -> Option<&AttachmentPairing> {
        self.attach.as_ref().map(|a| &a.pairing)
    }

    /// Re-pairs the attachment surface against the mesh at `vertices`.
    pub fn refresh_attachment(&mut self, vertices: &[Vec3]) -> Result<()> {
        let mesh = self.snap.with_vertices(vertices.to_vec());
        if let Some(a) = self.attach.as_mut() {
            a.pair(&mesh)?;
        }
        Ok(())
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        assert_eq!(params.len(), self.num_params());
        let v = self.velocities(params);
        let state = self.model.forward(&v);
        let u = &state.displacements;
        let vertices: Vec<Vec3> = self.snap.vertices.iter().zip(u).map(|(p, d)| p + d).collect();
        let mut g = vec![Vec3::zeros(); vertices.len()];

        let x = gather_points(&vertices, None, &self.class_ids);
        let (d1, g1) = classwise_chamfer(&x, self.targets)?;
        if self.w1 != 0.0 {
            for (ids, gc) in self.class_ids.iter().zip(&g1) {
                for (&vid, gp) in ids.iter().zip(gc) {
                    g[vid] += gp * self.w1;
                }
            }
        }

        let mut d2 = 0.0;
        if let Some(a) = &self.attach {
            let active: Vec<(usize, Vec<Vec3>, &[Vec3])> = a
                .pairing
                .pairs
                .iter()
                .filter(|p| !p.is_empty())
                .map(|p| {
                    let ids = &a.component_ids[p.component];
                    (p.component, ids.iter().map(|&i| vertices[i]).collect(), p.surface.vertices.as_slice())
                })
                .collect();
            if active.is_empty() {
                log::debug!("no active attachment pairs");
            } else {
                let pairs: Vec<(&[Vec3], &[Vec3])> = active.iter().map(|(_, x, y)| (x.as_slice(), *y)).collect();
                let (val, grads) = attachment_pull_loss(&pairs)?;
                d2 = val;
                for ((c, _, _), gc) in active.iter().zip(&grads) {
                    for (&vid, gp) in a.component_ids[*c].iter().zip(gc) {
                        g[vid] += gp * self.lambda2;
                    }
                }
            }
        }

        let lu = self.lambda_user;
        let mut bend_grad = None;
        let reg = match &self.reg {
            Reg::Volumetric(se) => {
                let (e, ge) = se.evaluate(&vertices);
                for (gi, gr) in g.iter_mut().zip(&ge) {
                    *gi += gr * lu;
                }
                e
            }
            Reg::Surface(sr) => {
                let (e, ge) = sr.evaluate(&vertices, u)?;
                for (gi, gr) in g.iter_mut().zip(&ge) {
                    *gi += gr * lu;
                }
                e
            }
            Reg::Bending => {
                let grid = ControlGrid {
                    lattice: self.control,
                    velocities: v,
                };
                let (e, gb) = bending_energy(&grid);
                bend_grad = Some(gb);
                e
            }
        };

        let mut gv = self.model.backward(&state, &g);
        if let Some(gb) = bend_grad {
            for (a, b) in gv.iter_mut().zip(&gb) {
                *a += b * lu;
            }
        }
        let h = self.param_scale();
        let grad: Vec<f64> = gv.iter().flat_map(|q| [q.x * h, q.y * h, q.z * h]).collect();
        let loss = LossParts {
            total: self.w1 * d1 + self.lambda2 * d2 + lu * reg,
            d1,
            d2,
            reg,
        };
        if !loss.total.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss:?}")));
        }
        Ok(Evaluation {
            loss,
            grad,
            vertices,
            state,
        })
    }
}
