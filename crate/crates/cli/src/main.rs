use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use solo_cli::config::{save_illuminants_json, PipelineConfig};
use solo_cli::illuminants;
use solo_cli::pipeline::{run_batch, run_scene, AblateSet, RunOptions};
use solo_cli::synth;

/// Day-to-night relighting: reconstruct, instantiate lights, trace, develop.
#[derive(Parser)]
#[command(name = "solo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Write filtered/refined depth, uncertainty mask, linear render, and mesh.
    #[arg(long)]
    dump_intermediates: bool,
    /// Comma-separated component sets to switch off: geometric,lights,isp.
    #[arg(long, value_name = "SETS")]
    ablate: Option<String>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Relight one scene.
    Run {
        /// Scene manifest (scene.json).
        scene: PathBuf,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Relight many scenes; failures are recorded and the batch continues.
    Batch {
        /// Scene manifests.
        scenes: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonRunArgs,
        /// Worker threads for scene-level parallelism (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Illuminant database tools.
    Illuminants {
        #[command(subcommand)]
        command: IlluminantsCommand,
    },
    /// Write the bundled synthetic demo scene.
    SynthScene {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
}

#[derive(Subcommand)]
enum IlluminantsCommand {
    /// Process gray-card captures (.pgm + .json sidecars) into a database.
    Build {
        /// Directory of capture sidecars.
        dir: PathBuf,
        /// Output database path.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<PipelineConfig> {
    Ok(match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    })
}

fn run_options(common: &CommonRunArgs, workers: Option<usize>) -> anyhow::Result<RunOptions> {
    let ablate = match &common.ablate {
        Some(spec) => AblateSet::parse_list(spec)?,
        None => Vec::new(),
    };
    Ok(RunOptions {
        seed: common.seed,
        ablate,
        dump_intermediates: common.dump_intermediates,
        workers,
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { scene, common } => {
            let cfg = load_config(&common.config)?;
            let options = run_options(&common, None)?;
            let manifest = run_scene(&scene, &cfg, &common.out, &options)?;
            println!(
                "{}: wrote {} (seed {})",
                manifest.scene,
                manifest.output.display(),
                manifest.seed
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch { scenes, common, workers } => {
            if scenes.is_empty() {
                anyhow::bail!("batch needs at least one scene manifest");
            }
            let cfg = load_config(&common.config)?;
            let options = run_options(&common, Some(workers))?;
            let manifest = run_batch(&scenes, &cfg, &common.out, &options)?;
            let failed: Vec<&str> = manifest
                .scenes
                .iter()
                .filter(|r| !r.ok)
                .map(|r| r.scene.as_str())
                .collect();
            println!(
                "batch: {}/{} scenes ok, manifest at {}",
                manifest.scenes.len() - failed.len(),
                manifest.scenes.len(),
                common.out.join("batch_manifest.json").display()
            );
            for record in manifest.scenes.iter().filter(|r| !r.ok) {
                eprintln!("  {} failed: {}", record.scene, record.error.as_deref().unwrap_or("?"));
            }
            Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Illuminants { command: IlluminantsCommand::Build { dir, out } } => {
            let (db, captures) = illuminants::build_database(&dir)?;
            save_illuminants_json(&out, &db)?;
            println!(
                "illuminants: {} captures across {} categories -> {}",
                captures,
                db.samples.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthScene { out, size } => {
            let manifest = synth::write_demo_scene(&out, size)?;
            println!("synthetic scene at {}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
