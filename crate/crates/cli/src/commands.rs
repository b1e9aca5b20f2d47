use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::warn;
use rayon::prelude::*;

use stixelforge::agt::generate_stixel_world;
use stixelforge::codec::{decode_heatmaps, encode_targets, DecodeConfig};
use stixelforge::io::{
    read_heatmap_blob, read_kitti_calib, read_kitti_velodyne, read_stixel_csv, render_overlay_ppm, write_heatmap_blob,
    write_kitti_calib, write_kitti_velodyne, write_stixel_csv,
};
use stixelforge::metrics::{
    aggregate_freespace, best_f1, bottom_contact_per_column, freespace_score, match_counts, summarize_counts,
    MatchCounts, SweepPoint,
};
use stixelforge::synth::{oracle_stixel_world, random_street_scene, simulate_lidar, OracleConfig};
use stixelforge::{Calibration64, GridSpec, Heatmaps64, SceneSpec64, World64};

use crate::config::RunConfig;
use crate::files::{collect_frames, frame_stem, pair_frames, read, read_text, write_atomic};

/// How a run ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some frames were skipped.
    Partial,
}

pub struct Ctx {
    pub cfg: RunConfig,
    /// `--seed` as given on the command line, which also overrides the seed
    /// stored in scene files.
    pub seed_flag: Option<u64>,
    pool: rayon::ThreadPool,
}

impl Ctx {
    pub fn new(cfg: RunConfig, seed_flag: Option<u64>) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
        Ok(Self { cfg, seed_flag, pool })
    }

    /// Maps frames in parallel; results keep input order.
    fn map<I, R, F>(&self, items: &[I], f: F) -> Vec<R>
    where
        I: Sync,
        R: Send,
        F: Fn(&I) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

/// First error in frame order, so failures do not depend on scheduling.
fn first_error<R>(results: Vec<Result<R>>) -> Result<Vec<R>> {
    results.into_iter().collect()
}

fn grid_for(size: Option<(u32, u32)>, stride: u32, what: &str) -> Result<GridSpec> {
    let Some((w, h)) = size else {
        bail!("{what} needs --image-size WIDTHxHEIGHT");
    };
    GridSpec::new(w, h, stride).with_context(|| format!("image {w}x{h} with stride {stride}"))
}

fn read_world(path: &Path, grid: &GridSpec) -> Result<World64> {
    let text = read_text(path)?;
    Ok(read_stixel_csv(&text, grid)
        .with_context(|| format!("parsing {}", path.display()))?
        .world)
}

fn read_heatmaps(path: &Path) -> Result<Heatmaps64> {
    read_heatmap_blob(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

// ------------------------------------------------------------------ generate

pub struct GenerateArgs {
    pub clouds: Vec<PathBuf>,
    pub calib: PathBuf,
    pub image_size: Option<(u32, u32)>,
    pub out: PathBuf,
    pub overlay: bool,
    pub background: Option<PathBuf>,
}

pub fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<Status> {
    let calib: Calibration64 = read_kitti_calib(&read_text(&a.calib)?, a.image_size)
        .with_context(|| format!("parsing {}", a.calib.display()))?;
    let frames: Vec<_> = collect_frames(&a.clouds, &[".bin"])?.into_iter().collect();
    ensure!(!frames.is_empty(), "no .bin point clouds given");
    prepare_out(&a.out)?;

    let results = ctx.map(&frames, |(stem, path)| -> Result<bool> {
        let cloud = read_kitti_velodyne(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let world = match generate_stixel_world(&cloud, &calib, &ctx.cfg.agt) {
            Ok(w) => w,
            Err(e) => {
                warn!("{stem}: skipped: {e}");
                return Ok(false);
            }
        };
        let csv = write_stixel_csv(stem, &world)?;
        write_atomic(&a.out.join(format!("{stem}.stx.csv")), csv.as_bytes())?;
        if a.overlay {
            let bg = match &a.background {
                Some(dir) => {
                    let p = dir.join(format!("{stem}.ppm"));
                    p.exists().then(|| read(&p)).transpose()?
                }
                None => None,
            };
            let ppm = render_overlay_ppm(&world, bg.as_deref()).with_context(|| format!("{stem}: overlay"))?;
            write_atomic(&a.out.join(format!("{stem}.ppm")), &ppm)?;
        }
        Ok(true)
    });
    let written = first_error(results)?;
    let skipped = written.iter().filter(|w| !**w).count();
    eprintln!(
        "generate: {} frames written, {skipped} skipped",
        written.len() - skipped
    );
    Ok(if skipped > 0 { Status::Partial } else { Status::Complete })
}

// ------------------------------------------------------------------ codec

pub struct EncodeArgs {
    pub inputs: Vec<PathBuf>,
    pub image_size: Option<(u32, u32)>,
    pub out: PathBuf,
}

pub fn encode(ctx: &Ctx, a: &EncodeArgs) -> Result<Status> {
    let grid = grid_for(a.image_size, ctx.cfg.agt.stride, "encode")?;
    let frames: Vec<_> = collect_frames(&a.inputs, &[".stx.csv"])?.into_iter().collect();
    ensure!(!frames.is_empty(), "no .stx.csv files given");
    prepare_out(&a.out)?;
    let results = ctx.map(&frames, |(stem, path)| -> Result<()> {
        let world = read_world(path, &grid)?;
        let hm: Heatmaps64 = encode_targets(&world, &grid)?.to_heatmaps();
        write_atomic(&a.out.join(format!("{stem}.sxhm")), &write_heatmap_blob(&hm))
    });
    first_error(results)?;
    eprintln!("encode: {} frames written", frames.len());
    Ok(Status::Complete)
}

pub struct DecodeArgs {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
}

pub fn decode(ctx: &Ctx, a: &DecodeArgs) -> Result<Status> {
    let frames: Vec<_> = collect_frames(&a.inputs, &[".sxhm"])?.into_iter().collect();
    ensure!(!frames.is_empty(), "no .sxhm files given");
    prepare_out(&a.out)?;
    let results = ctx.map(&frames, |(stem, path)| -> Result<()> {
        let world = decode_heatmaps(&read_heatmaps(path)?, &ctx.cfg.decode)?;
        let csv = write_stixel_csv(stem, &world)?;
        write_atomic(&a.out.join(format!("{stem}.stx.csv")), csv.as_bytes())
    });
    first_error(results)?;
    eprintln!("decode: {} frames written", frames.len());
    Ok(Status::Complete)
}

// ------------------------------------------------------------------ eval-stixel

pub enum Predictions {
    Worlds(Vec<PathBuf>),
    Heatmaps(Vec<PathBuf>),
}

pub struct EvalStixelArgs {
    pub gt: Vec<PathBuf>,
    pub pred: Predictions,
    pub image_size: Option<(u32, u32)>,
    pub out: Option<PathBuf>,
}

pub const STIXEL_REPORT_HEADER: &str = "t,precision_micro,recall_micro,f1_micro,precision_macro,recall_macro,f1_macro";

fn report_row(s: &mut String, p: &SweepPoint) {
    let t = if p.threshold.is_nan() {
        String::new()
    } else {
        p.threshold.to_string()
    };
    let _ = writeln!(
        s,
        "{t},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        p.micro.precision, p.micro.recall, p.micro.f1, p.macro_precision, p.macro_recall, p.macro_f1
    );
}

pub fn eval_stixel(ctx: &Ctx, a: &EvalStixelArgs) -> Result<Status> {
    let gt = collect_frames(&a.gt, &[".stx.csv"])?;
    let iou = ctx.cfg.iou;
    let mut report = format!("{STIXEL_REPORT_HEADER}\n");
    match &a.pred {
        Predictions::Worlds(paths) => {
            let grid = grid_for(a.image_size, ctx.cfg.agt.stride, "eval-stixel on Stixel files")?;
            let pairs = pair_frames(gt, collect_frames(paths, &[".stx.csv"])?)?;
            ensure!(!pairs.is_empty(), "no frames to evaluate");
            let counts = first_error(ctx.map(&pairs, |(_, g, p)| -> Result<MatchCounts> {
                Ok(match_counts(&read_world(g, &grid)?, &read_world(p, &grid)?, iou)?)
            }))?;
            report_row(&mut report, &summarize_counts(f64::NAN, &counts));
        }
        Predictions::Heatmaps(paths) => {
            let pairs = pair_frames(gt, collect_frames(paths, &[".sxhm"])?)?;
            ensure!(!pairs.is_empty(), "no frames to evaluate");
            let thresholds = ctx.cfg.sweep.clone().unwrap_or_else(|| vec![ctx.cfg.decode.t_occ]);
            let stride = ctx.cfg.agt.stride;
            let per_frame = first_error(ctx.map(&pairs, |(stem, g, p)| -> Result<Vec<MatchCounts>> {
                let hm = read_heatmaps(p)?;
                let grid = hm.grid();
                if let Some((w, h)) = a.image_size {
                    ensure!(
                        GridSpec::new(w, h, stride).ok() == Some(grid),
                        "{stem}: heat maps are {}x{} at stride {}, expected {w}x{h} at stride {stride}",
                        grid.image_width(),
                        grid.image_height(),
                        grid.stride()
                    );
                }
                let truth = read_world(g, &grid)?;
                thresholds
                    .iter()
                    .map(|&t| {
                        let pred = decode_heatmaps(
                            &hm,
                            &DecodeConfig {
                                t_occ: t,
                                ..ctx.cfg.decode
                            },
                        )?;
                        Ok(match_counts(&truth, &pred, iou)?)
                    })
                    .collect()
            }))?;
            let points: Vec<SweepPoint> = thresholds
                .iter()
                .enumerate()
                .map(|(k, &t)| summarize_counts(t, &per_frame.iter().map(|c| c[k]).collect::<Vec<_>>()))
                .collect();
            for p in &points {
                report_row(&mut report, p);
            }
            if let Some(best) = best_f1(&points) {
                let _ = writeln!(report, "# best f1_micro {:.6} at t={}", best.micro.f1, best.threshold);
            }
        }
    }
    emit(a.out.as_deref(), &report)?;
    Ok(Status::Complete)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ------------------------------------------------------------------ eval-freespace

pub struct EvalFreespaceArgs {
    pub gt: Vec<PathBuf>,
    pub pred: Vec<PathBuf>,
    pub image_size: Option<(u32, u32)>,
    pub per_column: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// One contact row per image pixel column; `-` or an empty line marks a column
/// without an obstacle.
pub fn parse_contacts(text: &str) -> Result<Vec<Option<u32>>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| match l.trim() {
            "" | "-" => Ok(None),
            v => v
                .parse()
                .map(Some)
                .with_context(|| format!("line {}: bad contact row {v:?}", i + 1)),
        })
        .collect()
}

fn read_contacts(path: &Path, grid: &GridSpec) -> Result<Vec<Option<u32>>> {
    if path.to_string_lossy().ends_with(".contacts.csv") {
        let rows = parse_contacts(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        ensure!(
            rows.len() == grid.image_width() as usize,
            "{}: {} contact rows for an image {} pixels wide",
            path.display(),
            rows.len(),
            grid.image_width()
        );
        Ok(rows)
    } else {
        Ok(bottom_contact_per_column(&read_world(path, grid)?))
    }
}

pub fn eval_freespace(ctx: &Ctx, a: &EvalFreespaceArgs) -> Result<Status> {
    let grid = grid_for(a.image_size, ctx.cfg.agt.stride, "eval-freespace")?;
    let suffixes = [".stx.csv", ".contacts.csv"];
    let pairs = pair_frames(collect_frames(&a.gt, &suffixes)?, collect_frames(&a.pred, &suffixes)?)?;
    ensure!(!pairs.is_empty(), "no frames to evaluate");
    let results = first_error(ctx.map(&pairs, |(stem, g, p)| -> Result<_> {
        let gt = read_contacts(g, &grid)?;
        let pred = read_contacts(p, &grid)?;
        let r = freespace_score(&gt, &pred, grid.image_height()).with_context(|| format!("frame {stem}"))?;
        Ok((gt, r))
    }))?;
    let reports: Vec<_> = results.iter().map(|(_, r)| r.clone()).collect();
    let (score, sigma) = aggregate_freespace(&reports);
    emit(
        a.out.as_deref(),
        &format!("frames,score,sigma\n{},{score:.6},{sigma:.6}\n", reports.len()),
    )?;

    if let Some(path) = &a.per_column {
        let mut s = String::from("frame,column,score\n");
        for ((stem, _, _), (gt, r)) in pairs.iter().zip(&results) {
            // the report lists scores of the columns that have a contact below row 0
            let cols = gt
                .iter()
                .enumerate()
                .filter(|(_, g)| matches!(g, Some(r) if *r > 0))
                .map(|(c, _)| c);
            for (c, v) in cols.zip(&r.per_column) {
                let _ = writeln!(s, "{stem},{c},{v:.6}");
            }
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(Status::Complete)
}

// ------------------------------------------------------------------ synth

pub struct SynthArgs {
    pub scenes: Vec<PathBuf>,
    pub random: Option<usize>,
    pub out: PathBuf,
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<Status> {
    let mut frames: Vec<(String, SceneSpec64)> = Vec::new();
    for path in &a.scenes {
        let mut spec =
            SceneSpec64::from_toml_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(seed) = ctx.seed_flag {
            spec.seed = seed;
        }
        frames.push((frame_stem(path), spec));
    }
    for i in 0..a.random.unwrap_or(0) as u64 {
        let seed = ctx.cfg.seed + i;
        frames.push((format!("scene_{seed:06}"), random_street_scene(seed)));
    }
    ensure!(!frames.is_empty(), "give --scene files or --random N");
    frames.sort_by(|x, y| x.0.cmp(&y.0));
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        bail!("two scenes share the frame name {:?}", w[0].0);
    }
    prepare_out(&a.out)?;

    let oracle_cfg = OracleConfig::from_agt(&ctx.cfg.agt);
    let results = ctx.map(&frames, |(stem, spec)| -> Result<()> {
        let cloud = simulate_lidar(spec)?;
        let calib = spec.calibration()?;
        let grid = GridSpec::new(spec.camera.width, spec.camera.height, ctx.cfg.agt.stride)?;
        let oracle = oracle_stixel_world(spec, &grid, &oracle_cfg)?;
        write_atomic(&a.out.join(format!("{stem}.bin")), &write_kitti_velodyne(&cloud))?;
        write_atomic(&a.out.join(format!("{stem}.txt")), write_kitti_calib(&calib).as_bytes())?;
        write_atomic(
            &a.out.join(format!("{stem}.stx.csv")),
            write_stixel_csv(stem, &oracle)?.as_bytes(),
        )
    });
    first_error(results)?;
    eprintln!("synth: {} scenes written", frames.len());
    Ok(Status::Complete)
}
