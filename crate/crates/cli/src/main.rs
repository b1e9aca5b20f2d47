//! `stixelforge`: Stixel ground truth, heat-map codec and evaluation from the
//! command line.
//!
//! Exit status is 0 on success, 1 when some frames were skipped and 2 on
//! errors (including bad usage).

mod commands;
mod config;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{Ctx, Predictions, Status};
use config::{FileConfig, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "stixelforge", version, about = "Multi-layer Stixel ground truth from LiDAR")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, env = "STIXELFORGE_CONFIG")]
    config: Option<PathBuf>,
    /// Base seed for RANSAC and `synth --random`; also replaces the seed of scene files
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    /// Column width and vertical cell size in pixels
    #[arg(long, global = true)]
    stride: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build Stixel worlds from KITTI-style point clouds
    Generate {
        /// `.bin` clouds or directories holding them
        #[arg(required = true)]
        clouds: Vec<PathBuf>,
        /// Calibration file shared by all frames
        #[arg(long)]
        calib: PathBuf,
        /// Image size, used when the calibration file carries none
        #[arg(long, value_parser = parse_size)]
        image_size: Option<(u32, u32)>,
        #[arg(long, short = 'o')]
        out: PathBuf,
        /// Also write a PPM overlay per frame
        #[arg(long)]
        overlay: bool,
        /// Directory of `<frame>.ppm` images drawn under the overlay
        #[arg(long, requires = "overlay")]
        background: Option<PathBuf>,
    },
    /// Turn Stixel CSV files into heat-map targets
    Encode {
        /// `.stx.csv` files or directories
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_parser = parse_size)]
        image_size: (u32, u32),
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Turn heat maps back into Stixel CSV files
    Decode {
        /// `.sxhm` files or directories
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        thresholds: DecodeFlags,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Precision, recall and F1 of predicted Stixels
    EvalStixel {
        /// Ground-truth `.stx.csv` files or directories
        #[arg(long, required = true, num_args = 1..)]
        gt: Vec<PathBuf>,
        /// Predicted `.stx.csv` files or directories
        #[arg(long, num_args = 1.., conflicts_with = "heatmaps", required_unless_present = "heatmaps")]
        pred: Vec<PathBuf>,
        /// Predicted `.sxhm` heat maps, decoded at each sweep threshold
        #[arg(long, num_args = 1..)]
        heatmaps: Vec<PathBuf>,
        /// Required for `--pred`; checked against the heat maps otherwise
        #[arg(long, value_parser = parse_size)]
        image_size: Option<(u32, u32)>,
        #[command(flatten)]
        thresholds: DecodeFlags,
        /// Minimum IoU for a match
        #[arg(long)]
        iou: Option<f64>,
        /// Occupancy thresholds as first:last:count
        #[arg(long)]
        sweep: Option<String>,
        /// Write the report here instead of stdout
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Column-wise free-space score
    EvalFreespace {
        /// Ground truth: `.stx.csv` worlds or `.contacts.csv` row lists
        #[arg(long, required = true, num_args = 1..)]
        gt: Vec<PathBuf>,
        /// Predictions in either format
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long, value_parser = parse_size)]
        image_size: (u32, u32),
        /// Also write frame,column,score rows here
        #[arg(long)]
        per_column: Option<PathBuf>,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Simulate scans with oracle Stixel worlds
    Synth {
        /// Scene TOML files
        #[arg(long, num_args = 1..)]
        scene: Vec<PathBuf>,
        /// Number of random street scenes, seeded from --seed upward
        #[arg(long, required_unless_present = "scene")]
        random: Option<usize>,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DecodeFlags {
    /// Occupancy threshold
    #[arg(long)]
    t_occ: Option<f64>,
    /// Cut threshold
    #[arg(long)]
    t_cut: Option<f64>,
    /// Shortest run of occupied cells kept
    #[arg(long)]
    min_run: Option<usize>,
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let n = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
    Ok((n(w)?, n(h)?))
}

fn run(cli: Cli) -> Result<Status> {
    let g = cli.global;
    let mut o = Overrides {
        seed: g.seed,
        jobs: g.jobs,
        stride: g.stride,
        ..Overrides::default()
    };
    let mut decode_flags = |d: &DecodeFlags| {
        o.t_occ = d.t_occ;
        o.t_cut = d.t_cut;
        o.min_run_cells = d.min_run;
    };
    match &cli.cmd {
        Cmd::Decode { thresholds, .. } => decode_flags(thresholds),
        Cmd::EvalStixel {
            thresholds, iou, sweep, ..
        } => {
            decode_flags(thresholds);
            o.iou = *iou;
            o.sweep = sweep.clone();
        }
        _ => {}
    }
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx::new(RunConfig::resolve(file, &o)?, g.seed)?;

    match cli.cmd {
        Cmd::Generate {
            clouds,
            calib,
            image_size,
            out,
            overlay,
            background,
        } => commands::generate(
            &ctx,
            &commands::GenerateArgs {
                clouds,
                calib,
                image_size,
                out,
                overlay,
                background,
            },
        ),
        Cmd::Encode {
            inputs,
            image_size,
            out,
        } => commands::encode(
            &ctx,
            &commands::EncodeArgs {
                inputs,
                image_size: Some(image_size),
                out,
            },
        ),
        Cmd::Decode { inputs, out, .. } => commands::decode(&ctx, &commands::DecodeArgs { inputs, out }),
        Cmd::EvalStixel {
            gt,
            pred,
            heatmaps,
            image_size,
            out,
            ..
        } => {
            let pred = if heatmaps.is_empty() {
                Predictions::Worlds(pred)
            } else {
                Predictions::Heatmaps(heatmaps)
            };
            commands::eval_stixel(
                &ctx,
                &commands::EvalStixelArgs {
                    gt,
                    pred,
                    image_size,
                    out,
                },
            )
        }
        Cmd::EvalFreespace {
            gt,
            pred,
            image_size,
            per_column,
            out,
        } => commands::eval_freespace(
            &ctx,
            &commands::EvalFreespaceArgs {
                gt,
                pred,
                image_size: Some(image_size),
                per_column,
                out,
            },
        ),
        Cmd::Synth { scene, random, out } => commands::synth(
            &ctx,
            &commands::SynthArgs {
                scenes: scene,
                random,
                out,
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
