//! Run configuration: built-in defaults, overridden by a TOML file, overridden
//! by command-line flags.
//!
//! Every key is optional:
//!
//! ```toml
//! seed = 0
//! jobs = 0            # 0 uses one worker per core
//! stride = 8
//!
//! [ransac]
//! iterations = 500
//! inlier_threshold = 0.15
//! stage2_threshold = 0.08
//! height_prior = -0.5
//! min_inlier_fraction = 0.05
//!
//! [dbscan]
//! eps = 0.6
//! min_pts = 3
//!
//! [agt]
//! hpr_gamma = 1000.0
//! ground_attach_delta = 0.3
//! min_stixel_height = 4
//! top_band = 0.1
//! sightline_tolerance = 16
//!
//! [decode]
//! t_occ = 0.5
//! t_cut = 0.5
//! min_run_cells = 1
//!
//! [eval]
//! iou = 0.5
//! sweep = "0.1:0.9:9"  # first:last:count, inclusive
//!
//! [loss]
//! alpha = 1.0
//! beta = 0.1
//! gamma = 1.0
//! ```

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use stixelforge::codec::DecodeConfig;
use stixelforge::loss::LossWeights;
use stixelforge::AgtConfig64;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    stride: Option<u32>,
    #[serde(default)]
    ransac: RansacSection,
    #[serde(default)]
    dbscan: DbscanSection,
    #[serde(default)]
    agt: AgtSection,
    #[serde(default)]
    decode: DecodeSection,
    #[serde(default)]
    eval: EvalSection,
    #[serde(default)]
    loss: LossSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RansacSection {
    iterations: Option<usize>,
    inlier_threshold: Option<f64>,
    stage2_threshold: Option<f64>,
    height_prior: Option<f64>,
    min_inlier_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DbscanSection {
    eps: Option<f64>,
    min_pts: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgtSection {
    hpr_gamma: Option<f64>,
    ground_attach_delta: Option<f64>,
    min_stixel_height: Option<u32>,
    top_band: Option<f64>,
    sightline_tolerance: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecodeSection {
    t_occ: Option<f64>,
    t_cut: Option<f64>,
    min_run_cells: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    iou: Option<f64>,
    sweep: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSection {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags that override file values when given.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub stride: Option<u32>,
    pub t_occ: Option<f64>,
    pub t_cut: Option<f64>,
    pub min_run_cells: Option<usize>,
    pub iou: Option<f64>,
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub agt: AgtConfig64,
    pub decode: DecodeConfig,
    pub iou: f64,
    /// Thresholds to sweep; `None` evaluates at `decode.t_occ` only.
    pub sweep: Option<Vec<f64>>,
    pub loss: LossWeights<f64>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, o: &Overrides) -> Result<Self> {
        let mut agt = AgtConfig64::default();
        let r = &mut agt.ransac;
        set(&mut r.iterations, file.ransac.iterations);
        set(&mut r.inlier_threshold, file.ransac.inlier_threshold);
        set(&mut r.stage2_threshold, file.ransac.stage2_threshold);
        set(&mut r.height_prior, file.ransac.height_prior);
        set(&mut r.min_inlier_fraction, file.ransac.min_inlier_fraction);
        set(&mut agt.dbscan.eps, file.dbscan.eps);
        set(&mut agt.dbscan.min_pts, file.dbscan.min_pts);
        set(&mut agt.hpr_gamma, file.agt.hpr_gamma);
        set(&mut agt.ground_attach_delta, file.agt.ground_attach_delta);
        set(&mut agt.min_stixel_height, file.agt.min_stixel_height);
        set(&mut agt.top_band, file.agt.top_band);
        set(&mut agt.sightline_tolerance, file.agt.sightline_tolerance);
        set(&mut agt.stride, o.stride.or(file.stride));

        let seed = o.seed.or(file.seed).unwrap_or(0);
        agt.ransac.seed = seed;
        agt.validate().context("invalid pipeline configuration")?;

        let mut decode = DecodeConfig::default();
        set(&mut decode.t_occ, o.t_occ.or(file.decode.t_occ));
        set(&mut decode.t_cut, o.t_cut.or(file.decode.t_cut));
        set(&mut decode.min_run_cells, o.min_run_cells.or(file.decode.min_run_cells));
        decode.validate().context("invalid decode configuration")?;

        let iou = o.iou.or(file.eval.iou).unwrap_or(0.5);
        ensure!(iou > 0.0 && iou <= 1.0, "iou must lie in (0, 1], got {iou}");
        let sweep = o
            .sweep
            .as_deref()
            .or(file.eval.sweep.as_deref())
            .map(parse_sweep)
            .transpose()?;

        let d = LossWeights::default();
        let loss = LossWeights::new(
            file.loss.alpha.unwrap_or(d.alpha),
            file.loss.beta.unwrap_or(d.beta),
            file.loss.gamma.unwrap_or(d.gamma),
        )?;

        Ok(Self {
            seed,
            jobs: o.jobs.or(file.jobs).unwrap_or(0),
            agt,
            decode,
            iou,
            sweep,
            loss,
        })
    }
}

fn set<V>(slot: &mut V, value: Option<V>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// `first:last:count`, `count` evenly spaced thresholds including both ends.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        bail!("sweep must look like first:last:count, got {spec:?}");
    };
    let first: f64 = a.trim().parse().with_context(|| format!("bad sweep start {a:?}"))?;
    let last: f64 = b.trim().parse().with_context(|| format!("bad sweep end {b:?}"))?;
    let count: usize = n.trim().parse().with_context(|| format!("bad sweep count {n:?}"))?;
    ensure!(count >= 1, "sweep count must be at least 1");
    ensure!(
        (0.0..=1.0).contains(&first) && (0.0..=1.0).contains(&last),
        "sweep thresholds must lie in [0, 1]"
    );
    if count == 1 {
        return Ok(vec![first]);
    }
    let step = (last - first) / (count - 1) as f64;
    // snap to 12 decimals so 0.1:0.9:9 yields 0.6 rather than 0.6000000000000001
    Ok((0..count)
        .map(|i| ((first + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}
