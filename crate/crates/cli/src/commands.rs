use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use meshtune_core::attach::{group_and_filter, isosurface, AttachmentPairing};
use meshtune_core::geom::Vec3;
use meshtune_core::io;
use meshtune_core::mesh::{base_surface_points, SurfaceMesh};
use meshtune_core::metrics::{chamfer_metric, hausdorff_metric, thickness_error, MeshReport};
use meshtune_core::pipeline::{self, Affine, Regularizer, TuneConfig};
use meshtune_core::scene::{self, CalcifiedParams, SceneKind};
use meshtune_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Error,
    },
}

impl CliError {
    /// 3 for an aborted optimization, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core {
                source: Error::NonFinite(_) | Error::Diverged(_) | Error::DegenerateResult(_),
                ..
            } => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for meshtune_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}

fn read<T>(path: &Path, f: impl FnOnce(&Path) -> meshtune_core::Result<T>) -> CliResult<T> {
    f(path).context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, f: impl FnOnce(&Path) -> meshtune_core::Result<()>) -> CliResult<()> {
    f(path).context(|| format!("writing {}", path.display()))
}

fn out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(Error::from)
        .context(|| format!("creating {}", dir.display()))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RegularizerArg {
    Volumetric,
    FieldBending,
    Surface,
}

impl From<RegularizerArg> for Regularizer {
    fn from(r: RegularizerArg) -> Self {
        match r {
            RegularizerArg::Volumetric => Regularizer::Volumetric,
            RegularizerArg::FieldBending => Regularizer::FieldBending,
            RegularizerArg::Surface => Regularizer::Surface,
        }
    }
}

/// Config file values overridden by flags.
#[derive(Args)]
pub struct ConfigArgs {
    /// Flat JSON of tune settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Regularizer strength (default 1).
    #[arg(long)]
    lambda_user: Option<f64>,
    #[arg(long, value_enum)]
    regularizer: Option<RegularizerArg>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Attachment pull weight.
    #[arg(long)]
    lambda2: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<TuneConfig> {
        let mut c = match &self.config {
            Some(p) => read(p, io::load_config)?,
            None => TuneConfig::default(),
        };
        if let Some(v) = self.lambda_user {
            c.lambda_user = v;
        }
        if let Some(r) = self.regularizer {
            c.regularizer = r.into();
        }
        if let Some(n) = self.iterations {
            c.iterations = n;
        }
        if let Some(v) = self.lambda2 {
            c.lambda2_d2 = v;
        }
        c.validate().context(|| "configuration".into())?;
        Ok(c)
    }
}

#[derive(Args)]
pub struct TuneArgs {
    /// Starting mesh.
    #[arg(long)]
    snap_mesh: PathBuf,
    /// Template the strain is measured against.
    #[arg(long)]
    template: PathBuf,
    #[arg(long, required_unless_present = "pseudolabels", conflicts_with = "pseudolabels")]
    labels: Option<PathBuf>,
    #[arg(long)]
    pseudolabels: Option<PathBuf>,
    /// Attachment mask (raw bytes with a .json sidecar).
    #[arg(long, conflicts_with = "attach_surface")]
    mask: Option<PathBuf>,
    /// Attachment surface as OBJ.
    #[arg(long)]
    attach_surface: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

fn attachment_surface(mask: &Option<PathBuf>, obj: &Option<PathBuf>) -> CliResult<Option<SurfaceMesh>> {
    match (mask, obj) {
        (Some(m), _) => {
            let vol = read(m, io::load_mask)?;
            Ok(Some(isosurface(&vol).context(|| format!("isosurface of {}", m.display()))?))
        }
        (None, Some(p)) => Ok(Some(read(p, io::load_obj)?)),
        (None, None) => Ok(None),
    }
}

pub fn tune(a: TuneArgs) -> CliResult<()> {
    let cfg = a.config.resolve()?;
    let snap = read(&a.snap_mesh, io::load_mesh)?;
    let template = read(&a.template, io::load_mesh)?;
    let labels_path = a.labels.as_ref().or(a.pseudolabels.as_ref()).expect("clap requires one");
    let labels = read(labels_path, io::load_points)?;
    let attach = attachment_surface(&a.mask, &a.attach_surface)?;
    let result = pipeline::tune(&snap, &template, &labels, attach.as_ref(), &cfg).context(|| "tune".into())?;
    out_dir(&a.out_dir)?;
    let d = &a.out_dir;
    write(&d.join("tuned.mesh"), |p| io::save_mesh(p, &result.mesh))?;
    write(&d.join("report.json"), |p| io::save_json(p, &result.report))?;
    write(&d.join("loss_trace.csv"), |p| Ok(std::fs::write(p, io::trace_to_csv(&result.report.losses))?))?;
    write(&d.join("field.json"), |p| io::save_json(p, &result.grid))?;
    write(&d.join("timings.json"), |p| io::save_json(p, &result.timings))?;
    if let Some(pairing) = &result.pairing {
        write(&d.join("pairing.json"), |p| io::save_json(p, &pairing_summary(pairing)))?;
    }
    let m = &result.report.metrics;
    println!(
        "tune: CD {:.4} -> {:.4} mm, min scaled Jacobian {:.3}, {} iterations",
        result.report.initial_cd_mm,
        m.cd_mm.unwrap_or(f64::NAN),
        m.min_scaled_jacobian,
        result.report.losses.len()
    );
    Ok(())
}

#[derive(Args)]
pub struct PrealignArgs {
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Stop after the affine fit.
    #[arg(long)]
    no_coarse: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct PrealignReport {
    affine: Affine,
    /// Squared classwise chamfer after the affine fit (mm^2).
    chamfer_mm2: f64,
    cd_aligned_mm: f64,
    cd_snap_mm: Option<f64>,
    coarse_lambda_user: Option<f64>,
    affine_trace: Vec<f64>,
}

pub fn prealign(a: PrealignArgs) -> CliResult<()> {
    let cfg = a.config.resolve()?;
    let template = read(&a.template, io::load_mesh)?;
    let labels = read(&a.labels, io::load_points)?;
    let pre = pipeline::prealign_affine(&template, &labels, cfg.prealign_iterations, cfg.prealign_learning_rate)
        .context(|| "prealign".into())?;
    let cd = |m| chamfer_metric(&base_surface_points(m, None)?, &labels);
    let cd_aligned_mm = cd(&pre.mesh).context(|| "metrics".into())?;
    let coarse = if a.no_coarse {
        None
    } else {
        Some(pipeline::coarse_init(&pre.mesh, &labels, &cfg).context(|| "coarse fit".into())?)
    };
    out_dir(&a.out_dir)?;
    let d = &a.out_dir;
    write(&d.join("aligned.mesh"), |p| io::save_mesh(p, &pre.mesh))?;
    let snap = coarse.as_ref().map_or(&pre.mesh, |c| &c.mesh);
    write(&d.join("snap.mesh"), |p| io::save_mesh(p, snap))?;
    let report = PrealignReport {
        affine: pre.affine,
        chamfer_mm2: pre.loss,
        cd_aligned_mm,
        cd_snap_mm: match &coarse {
            Some(c) => Some(cd(&c.mesh).context(|| "metrics".into())?),
            None => None,
        },
        coarse_lambda_user: coarse.as_ref().map(|c| c.lambda_user),
        affine_trace: pre.trace,
    };
    write(&d.join("prealign.json"), |p| io::save_json(p, &report))?;
    println!("prealign: chamfer {:.3e} mm^2, CD {:.4} mm", report.chamfer_mm2, report.cd_aligned_mm);
    Ok(())
}

#[derive(Args)]
pub struct AttachArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, required_unless_present = "surface", conflicts_with = "surface")]
    mask: Option<PathBuf>,
    /// Attachment surface as OBJ.
    #[arg(long)]
    surface: Option<PathBuf>,
    #[arg(long, default_value_t = meshtune_core::attach::DEFAULT_TAU_COS)]
    tau_cos: f64,
    /// Distance threshold (mm).
    #[arg(long, default_value_t = meshtune_core::attach::DEFAULT_TAU_DIST)]
    tau_dist: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct PairSummary {
    component: usize,
    input_vertices: usize,
    retained_vertices: usize,
    /// Ids into the attachment surface.
    source_vertices: Vec<usize>,
    /// Nearest mesh vertex of each retained point.
    nearest_mesh_vertices: Vec<usize>,
}

fn pairing_summary(p: &AttachmentPairing) -> Vec<PairSummary> {
    p.pairs
        .iter()
        .map(|q| PairSummary {
            component: q.component,
            input_vertices: q.input_vertices,
            retained_vertices: q.surface.vertices.len(),
            source_vertices: q.surface.source_vertices.clone().unwrap_or_default(),
            nearest_mesh_vertices: q.nearest.clone(),
        })
        .collect()
}

pub fn attach_filter(a: AttachArgs) -> CliResult<()> {
    if !(-1.0..=1.0).contains(&a.tau_cos) || a.tau_dist.is_nan() || a.tau_dist <= 0.0 {
        return Err(CliError::Usage(format!("tau_cos must lie in [-1, 1] and tau_dist be > 0, got {} and {}", a.tau_cos, a.tau_dist)));
    }
    let mesh = read(&a.mesh, io::load_mesh)?;
    let s = attachment_surface(&a.mask, &a.surface)?.expect("clap requires one");
    let pairing = group_and_filter(&mesh, &s, a.tau_cos, a.tau_dist).context(|| "attachment filtering".into())?;
    out_dir(&a.out_dir)?;
    let d = &a.out_dir;
    if a.mask.is_some() {
        write(&d.join("attachment.obj"), |p| io::save_obj(p, &s))?;
    }
    for (k, pair) in pairing.pairs.iter().enumerate() {
        write(&d.join(format!("pair{k}_component{}.obj", pair.component)), |p| io::save_obj(p, &pair.surface))?;
    }
    write(&d.join("pairing.json"), |p| io::save_json(p, &pairing_summary(&pairing)))?;
    println!(
        "attach-filter: {} parts, {} non-empty after filtering",
        pairing.pairs.len(),
        pairing.active_pairs()
    );
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Reference labels for CD and HD.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Reference mesh with the same connectivity for thickness error.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Row label; defaults to the mesh file stem.
    #[arg(long)]
    name: Option<String>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn metrics(a: MetricsArgs) -> CliResult<()> {
    let mesh = read(&a.mesh, io::load_mesh)?;
    let mut report = MeshReport::quality(&mesh);
    if let Some(l) = &a.labels {
        let labels = read(l, io::load_points)?;
        let pts = base_surface_points(&mesh, None).context(|| "base surface".into())?;
        report.cd_mm = Some(chamfer_metric(&pts, &labels).context(|| "chamfer".into())?);
        report.hd_mm = Some(hausdorff_metric(&pts, &labels).context(|| "hausdorff".into())?);
    }
    if let Some(r) = &a.reference {
        let reference = read(r, io::load_mesh)?;
        report.thickness_err_mm = Some(thickness_error(&mesh, &reference).context(|| "thickness".into())?);
    }
    let name = a
        .name
        .unwrap_or_else(|| a.mesh.file_stem().map_or("mesh".into(), |s| s.to_string_lossy().into_owned()));
    println!("{}", MeshReport::table_header());
    println!("{}", report.table_row(&name));
    if let Some(p) = &a.json {
        write(p, |p| io::save_json(p, &report))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn export_inp(a: ExportArgs) -> CliResult<()> {
    let mesh = read(&a.mesh, io::load_mesh)?;
    write(&a.out, |p| io::save_inp(p, &mesh))?;
    println!("export-inp: {} nodes, {} elements", mesh.vertices.len(), mesh.cells.len());
    Ok(())
}

#[derive(Args)]
pub struct SceneArgs {
    /// tube-bulge, slab or calcified-tube.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gap between the wall and each blob (calcified-tube, mm).
    #[arg(long)]
    blob_offset: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn gen_scene(a: SceneArgs) -> CliResult<()> {
    let kind: SceneKind = a.kind.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let scene = match (kind, a.blob_offset) {
        (SceneKind::CalcifiedTube, Some(off)) => scene::calcified_tube(
            a.seed,
            CalcifiedParams {
                blob_offset_mm: off,
                ..CalcifiedParams::default()
            },
        ),
        (_, Some(_)) => return Err(CliError::Usage("--blob-offset applies to calcified-tube only".into())),
        _ => scene::generate(kind, a.seed),
    }
    .context(|| format!("generating {kind}"))?;
    let files = io::save_scene(&a.out_dir, &scene).context(|| format!("writing scene to {}", a.out_dir.display()))?;
    let v: Vec3 = scene.manifest.translation;
    println!(
        "gen-scene: {kind} seed {} -> {} (min ground-truth scaled Jacobian {:.3}, shift {:.3} mm)",
        a.seed,
        files.manifest.parent().unwrap_or(Path::new(".")).display(),
        scene.manifest.min_ground_truth_scaled_jacobian,
        v.norm()
    );
    Ok(())
}
