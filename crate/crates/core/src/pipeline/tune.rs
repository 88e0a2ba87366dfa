//! Optimization drivers: coarse initialization, surface-regularized
//! pseudo-labels and the tune fit, with run reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attach::AttachmentPairing;
use crate::error::{Error, Result};
use crate::field::ControlGrid;
use crate::geom::Vec3;
use crate::mesh::{base_surface_points, LabeledPointCloud, SurfaceMesh, VolumetricMesh};
use crate::metrics::{chamfer_metric, hausdorff_metric, scaled_jacobian, thickness_error, MeshReport};
use crate::pipeline::adam::{adam_step, AdamConfig, OptimState};
use crate::pipeline::config::{Regularizer, TuneConfig};
use crate::pipeline::objective::{FitProblem, LossParts};
use crate::pipeline::prealign::{prealign_affine, Affine};

/// Final state of one optimization run.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub mesh: VolumetricMesh,
    /// Control velocities in mm.
    pub grid: ControlGrid,
    pub displacements: Vec<Vec3>,
    /// Loss before each step.
    pub trace: Vec<LossParts>,
    pub final_loss: LossParts,
    pub pairing: Option<AttachmentPairing>,
    pub clamped_nodes: usize,
}

/// Runs Adam from zero velocities, re-pairing attachments every `refresh`
/// iterations.
pub fn optimize(problem: &mut FitProblem, iterations: usize, adam: &AdamConfig, refresh: usize) -> Result<FitOutcome> {
    let mut state = OptimState::new(vec![0.0; problem.num_params()]);
    let mut trace = Vec::with_capacity(iterations);
    let mut last_vertices: Option<Vec<Vec3>> = None;
    for it in 0..iterations {
        if it > 0 && it % refresh.max(1) == 0 {
            if let Some(v) = &last_vertices {
                problem.refresh_attachment(v)?;
            }
        }
        let ev = problem.evaluate(&state.params)?;
        if it % 100 == 0 {
            log::debug!("iter {it}: {:?}", ev.loss);
        }
        trace.push(ev.loss);
        last_vertices = Some(ev.vertices);
        adam_step(&mut state, &ev.grad, adam)?;
    }
    let ev = problem.evaluate(&state.params)?;
    Ok(FitOutcome {
        mesh: problem.snap().with_vertices(ev.vertices),
        grid: problem.grid(&state.params),
        displacements: ev.state.displacements.clone(),
        clamped_nodes: ev.state.clamped_nodes(),
        trace,
        final_loss: ev.loss,
        pairing: problem.pairing().cloned(),
    })
}

fn min_scaled_jacobian(mesh: &VolumetricMesh) -> f64 {
    scaled_jacobian(mesh).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct CoarseResult {
    pub mesh: VolumetricMesh,
    pub grid: ControlGrid,
    /// Regularizer strength that produced a fold-free mesh.
    pub lambda_user: f64,
    pub trace: Vec<LossParts>,
}

/// Coarse-grid volumetric fit of an aligned template. A folded result is
/// retried once with ten times the regularizer weight.
pub fn coarse_init(template: &VolumetricMesh, targets: &LabeledPointCloud, cfg: &TuneConfig) -> Result<CoarseResult> {
    let mut c = TuneConfig {
        regularizer: Regularizer::Volumetric,
        lambda2_d2: 0.0,
        iterations: cfg.coarse_iterations,
        ..cfg.clone()
    };
    let mut min_sj = f64::NAN;
    for attempt in 0..2 {
        let mut problem = FitProblem::new(template, template, targets, None, &c, cfg.coarse_spacing_mm())?;
        let out = optimize(&mut problem, c.iterations, &c.adam(), c.refresh_interval)?;
        min_sj = min_scaled_jacobian(&out.mesh);
        if min_sj > 0.0 {
            return Ok(CoarseResult {
                mesh: out.mesh,
                grid: out.grid,
                lambda_user: c.lambda_user,
                trace: out.trace,
            });
        }
        log::warn!("coarse fit attempt {attempt} folded (min scaled Jacobian {min_sj:.3}); raising regularization");
        c.lambda_user = (c.lambda_user * 10.0).max(1e-3);
    }
    Err(Error::DegenerateResult(min_sj))
}

#[derive(Debug, Clone)]
pub struct FlexFitResult {
    pub labels: LabeledPointCloud,
    pub mesh: VolumetricMesh,
    pub trace: Vec<LossParts>,
}

/// Surface-regularized fit of the template to coarse targets; its base
/// vertices become the pseudo-labels for tune.
pub fn flexfit_pseudolabels(template: &VolumetricMesh, targets: &LabeledPointCloud, cfg: &TuneConfig) -> Result<FlexFitResult> {
    let c = TuneConfig {
        regularizer: Regularizer::Surface,
        lambda2_d2: 0.0,
        ..cfg.clone()
    };
    let mut problem = FitProblem::new(template, template, targets, None, &c, c.control_spacing_mm())?;
    let out = optimize(&mut problem, c.iterations, &c.adam(), c.refresh_interval)?;
    Ok(FlexFitResult {
        labels: base_surface_points(&out.mesh, None)?,
        mesh: out.mesh,
        trace: out.trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachmentSummary {
    pub pairs: usize,
    pub active_pairs: usize,
    pub retained_points: usize,
}

impl AttachmentSummary {
    pub fn of(p: &AttachmentPairing) -> Self {
        Self {
            pairs: p.pairs.len(),
            active_pairs: p.active_pairs(),
            retained_points: p.pairs.iter().map(|q| q.surface.vertices.len()).sum(),
        }
    }
}

/// Deterministic run summary. Wall-clock timings are kept apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: TuneConfig,
    pub vertices: usize,
    pub cells: usize,
    pub parameters: usize,
    pub initial_loss: LossParts,
    pub final_loss: LossParts,
    pub losses: Vec<LossParts>,
    /// Distances against the pseudo-labels, thickness against the rest mesh.
    pub metrics: MeshReport,
    pub initial_cd_mm: f64,
    pub max_displacement_mm: f64,
    pub mean_displacement_mm: f64,
    pub folded_cells: usize,
    pub clamped_nodes: usize,
    pub attachment: Option<AttachmentSummary>,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub mesh: VolumetricMesh,
    pub grid: ControlGrid,
    pub displacements: Vec<Vec3>,
    pub pairing: Option<AttachmentPairing>,
    pub report: RunReport,
    /// Seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// Deforms `snap` toward `labels` under `cfg`. `rest` is the reference of
/// the volumetric strain (the original template); `attachment` enables the
/// pull term.
pub fn tune(
    snap: &VolumetricMesh,
    rest: &VolumetricMesh,
    labels: &LabeledPointCloud,
    attachment: Option<&SurfaceMesh>,
    cfg: &TuneConfig,
) -> Result<TuneResult> {
    let t0 = Instant::now();
    let mut problem = FitProblem::new(snap, rest, labels, attachment, cfg, cfg.control_spacing_mm())?;
    let parameters = problem.num_params();
    let setup = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let out = optimize(&mut problem, cfg.iterations, &cfg.adam(), cfg.refresh_interval)?;
    let optimize_sec = t1.elapsed().as_secs_f64();

    let sj = scaled_jacobian(&out.mesh);
    let folded_cells = sj.iter().filter(|&&s| s <= 0.0).count();
    if folded_cells > 0 {
        log::error!("{folded_cells} cells folded after tune; the deformation should be diffeomorphic");
    }
    let mut metrics = MeshReport::quality(&out.mesh);
    let final_points = base_surface_points(&out.mesh, None)?;
    metrics.cd_mm = Some(chamfer_metric(&final_points, labels)?);
    metrics.hd_mm = Some(hausdorff_metric(&final_points, labels)?);
    metrics.thickness_err_mm = thickness_error(&out.mesh, rest).ok();
    let initial_cd_mm = chamfer_metric(&base_surface_points(snap, None)?, labels)?;
    let norms: Vec<f64> = out.displacements.iter().map(|u| u.norm()).collect();
    let report = RunReport {
        config: cfg.clone(),
        vertices: snap.vertices.len(),
        cells: snap.cells.len(),
        parameters,
        initial_loss: out.trace.first().copied().unwrap_or(out.final_loss),
        final_loss: out.final_loss,
        losses: out.trace,
        metrics,
        initial_cd_mm,
        max_displacement_mm: norms.iter().copied().fold(0.0, f64::max),
        mean_displacement_mm: norms.iter().sum::<f64>() / norms.len().max(1) as f64,
        folded_cells,
        clamped_nodes: out.clamped_nodes,
        attachment: out.pairing.as_ref().map(AttachmentSummary::of),
    };
    let timings = BTreeMap::from([
        ("setup".to_string(), setup),
        ("optimize".to_string(), optimize_sec),
        ("report".to_string(), t1.elapsed().as_secs_f64() - optimize_sec),
    ]);
    Ok(TuneResult {
        mesh: out.mesh,
        grid: out.grid,
        displacements: out.displacements,
        pairing: out.pairing,
        report,
        timings,
    })
}

/// Prealignment followed by coarse initialization: the starting mesh for a
/// tune run that has no externally supplied snap mesh.
#[derive(Debug, Clone)]
pub struct InitResult {
    pub affine: Affine,
    pub aligned: VolumetricMesh,
    pub coarse: CoarseResult,
}

pub fn initialize(template: &VolumetricMesh, targets: &LabeledPointCloud, cfg: &TuneConfig) -> Result<InitResult> {
    cfg.validate()?;
    let pre = prealign_affine(template, targets, cfg.prealign_iterations, cfg.prealign_learning_rate)?;
    let coarse = coarse_init(&pre.mesh, targets, cfg)?;
    Ok(InitResult {
        affine: pre.affine,
        aligned: pre.mesh,
        coarse,
    })
}
