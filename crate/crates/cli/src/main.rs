//! `meshtune`: template mesh tuning from the command line.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AttachArgs, ExportArgs, MetricsArgs, PrealignArgs, SceneArgs, TuneArgs};

#[derive(Parser)]
#[command(name = "meshtune", version, about = "Deform volumetric template meshes to labeled surface targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a snap mesh against pseudo-labels (and optional attachments).
    Tune(TuneArgs),
    /// Affine prealignment plus coarse fit of a template to labels.
    Prealign(PrealignArgs),
    /// Pair attachment surfaces with mesh components and filter them.
    AttachFilter(AttachArgs),
    /// Distance and element-quality metrics for a mesh.
    Metrics(MetricsArgs),
    /// Write a mesh as an INP deck.
    ExportInp(ExportArgs),
    /// Generate a seeded synthetic scene.
    GenScene(SceneArgs),
}

fn init_threads() -> Result<(), commands::CliError> {
    if let Ok(v) = std::env::var("MESHTUNE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| commands::CliError::Usage(format!("MESHTUNE_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(commands::CliError::Usage("MESHTUNE_THREADS must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Tune(a) => commands::tune(a),
        Command::Prealign(a) => commands::prealign(a),
        Command::AttachFilter(a) => commands::attach_filter(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::ExportInp(a) => commands::export_inp(a),
        Command::GenScene(a) => commands::gen_scene(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("meshtune: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
