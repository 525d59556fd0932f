mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::*;

#[derive(Parser)]
#[command(
    name = "voxmerge",
    version,
    about = "Voxel feature merging, mesh extraction and edit metrics"
)]
struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "VOXMERGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold a color field into a 3D mask.
    LiftMask(LiftMaskArgs),
    /// Merge an edited grid into the original one.
    Merge(MergeArgs),
    /// Extract a colored mesh from a feature grid.
    Mesh(MeshArgs),
    /// Chamfer distance between two PLY files, times 1e3.
    Chamfer(ChamferArgs),
    /// Directional CLIP scores from an embeddings file, times 100.
    Metrics(MetricsArgs),
    /// Blend edited and original views through soft masks.
    Blend(BlendArgs),
    /// Paint masked pixels with a marker color.
    Paint(PaintArgs),
    /// Word-level diff of an input and an edited prompt.
    PromptDiff(PromptDiffArgs),
    /// Dilate or erode 2D masks.
    MaskMorph(MaskMorphArgs),
    /// Rasterize analytic scenes into an edit pair.
    Synth(SynthArgs),
    /// Resample a triplane onto a voxel grid.
    TriplaneSample(TriplaneSampleArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<voxmerge_core::Error> for CliError {
    fn from(e: voxmerge_core::Error) -> Self {
        match e {
            voxmerge_core::Error::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = settings::load_config(cli.config.as_deref())?;
    let threads = match cli.threads {
        Some(n) => n,
        None => match config.get("threads") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| {
                CliError::Usage(format!(
                    "config threads must be a non-negative integer, got {v}"
                ))
            })? as usize,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Data(format!("cannot start worker pool: {e}")))?;
    let ctx = Context { config, threads };
    match cli.command {
        Command::LiftMask(a) => lift_mask(&ctx, a),
        Command::Merge(a) => merge(&ctx, a),
        Command::Mesh(a) => mesh(&ctx, a),
        Command::Chamfer(a) => chamfer(&ctx, a),
        Command::Metrics(a) => metrics(&ctx, a),
        Command::Blend(a) => blend(&ctx, a),
        Command::Paint(a) => paint(&ctx, a),
        Command::PromptDiff(a) => prompt_diff(&ctx, a),
        Command::MaskMorph(a) => mask_morph(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
        Command::TriplaneSample(a) => triplane_sample(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

pub struct Context {
    config: serde_json::Map<String, serde_json::Value>,
    threads: usize,
}

impl Context {
    /// Resolves a subcommand's settings and echoes them to stderr.
    pub fn resolve<T: serde::Serialize + serde::de::DeserializeOwned>(
        &self,
        command: &str,
        defaults: serde_json::Value,
        flags: &T,
    ) -> Result<T, CliError> {
        let (parsed, shown) = settings::resolve(command, defaults, &self.config, flags)?;
        eprintln!(
            "resolved config: {}",
            json!({"command": command, "threads": self.threads, "settings": shown})
        );
        Ok(parsed)
    }
}
