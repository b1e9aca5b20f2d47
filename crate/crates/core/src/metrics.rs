//! Stixel matching by 1D IoU, precision/recall sweeps, and the column-wise
//! free-space score.

use thiserror::Error;

use crate::codec::{decode_heatmaps, CodecError, DecodeConfig};
use crate::scalar::Real;
use crate::types::{GridSpec, HeatmapPair, Stixel, StixelWorld};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("stixels lie in different columns ({0} and {1})")]
    ColumnMismatch(u32, u32),
    #[error("ground truth grid {gt:?} does not match prediction grid {pred:?}")]
    GridMismatch { gt: GridSpec, pred: GridSpec },
    #[error("length mismatch: {gt} ground-truth entries, {pred} predicted")]
    LengthMismatch { gt: usize, pred: usize },
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Intersection over union of two Stixels' row intervals.
pub fn stixel_iou<T: Real>(a: &Stixel<T>, b: &Stixel<T>) -> Result<f64, MetricsError> {
    if a.column() != b.column() {
        return Err(MetricsError::ColumnMismatch(a.column(), b.column()));
    }
    Ok(interval_iou(a.pixel_interval(), b.pixel_interval()))
}

fn interval_iou((at, ab): (u32, u32), (bt, bb): (u32, u32)) -> f64 {
    let inter = ab.min(bb).saturating_sub(at.max(bt));
    let union = (ab - at) + (bb - bt) - inter;
    if union == 0 {
        0.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

/// Raw matching counts; additive over frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl std::ops::Add for MatchCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            true_positives: self.true_positives + o.true_positives,
            false_positives: self.false_positives + o.false_positives,
            false_negatives: self.false_negatives + o.false_negatives,
        }
    }
}

impl MatchCounts {
    pub fn is_empty(&self) -> bool {
        self.true_positives + self.false_positives + self.false_negatives == 0
    }

    pub fn report(self, threshold: Option<f64>) -> MatchReport {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.true_positives, self.true_positives + self.false_positives);
        let recall = ratio(self.true_positives, self.true_positives + self.false_negatives);
        MatchReport {
            counts: self,
            precision,
            recall,
            f1: f1(precision, recall),
            threshold,
        }
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchReport {
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Decode threshold the predictions came from, if any.
    pub threshold: Option<f64>,
}

/// Greedy per-column matching of ground-truth object Stixels to predictions.
///
/// Ground-truth Stixels are visited top to bottom; each claims the unclaimed
/// prediction of highest IoU (smaller `v_top` on ties) if that IoU reaches
/// `iou_min`. Only object Stixels on either side take part.
pub fn match_counts<T: Real>(
    gt: &StixelWorld<T>,
    pred: &StixelWorld<T>,
    iou_min: f64,
) -> Result<MatchCounts, MetricsError> {
    if gt.grid() != pred.grid() {
        return Err(MetricsError::GridMismatch {
            gt: gt.grid(),
            pred: pred.grid(),
        });
    }
    let mut counts = MatchCounts::default();
    for c in 0..gt.grid().cols() as u32 {
        let g: Vec<(u32, u32)> = gt
            .in_column(c)
            .filter(|s| s.kind().is_object())
            .map(Stixel::pixel_interval)
            .collect();
        let p: Vec<(u32, u32)> = pred
            .in_column(c)
            .filter(|s| s.kind().is_object())
            .map(Stixel::pixel_interval)
            .collect();
        let mut claimed = vec![false; p.len()];
        for gi in &g {
            let best = p
                .iter()
                .enumerate()
                .filter(|(k, _)| !claimed[*k])
                .map(|(k, pi)| (k, interval_iou(*gi, *pi), pi.0))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
            match best {
                Some((k, iou, _)) if iou >= iou_min => {
                    claimed[k] = true;
                    counts.true_positives += 1;
                }
                _ => counts.false_negatives += 1,
            }
        }
        counts.false_positives += claimed.iter().filter(|c| !**c).count();
    }
    Ok(counts)
}

pub fn match_worlds<T: Real>(
    gt: &StixelWorld<T>,
    pred: &StixelWorld<T>,
    iou_min: f64,
) -> Result<MatchReport, MetricsError> {
    Ok(match_counts(gt, pred, iou_min)?.report(None))
}

/// One threshold of a sweep: counts pooled over frames (micro) and the mean
/// of per-frame scores (macro).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub micro: MatchReport,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Pools per-frame counts into micro scores and averages per-frame scores
/// into macro ones, skipping frames with neither ground truth nor
/// predictions.
pub fn summarize_counts(threshold: f64, frames: &[MatchCounts]) -> SweepPoint {
    let mut total = MatchCounts::default();
    let mut per_frame = Vec::with_capacity(frames.len());
    for &c in frames {
        total = total + c;
        if !c.is_empty() {
            per_frame.push(c.report(Some(threshold)));
        }
    }
    let mean = |f: fn(&MatchReport) -> f64| {
        if per_frame.is_empty() {
            0.0
        } else {
            per_frame.iter().map(f).sum::<f64>() / per_frame.len() as f64
        }
    };
    SweepPoint {
        threshold,
        micro: total.report(Some(threshold)),
        macro_precision: mean(|r| r.precision),
        macro_recall: mean(|r| r.recall),
        macro_f1: mean(|r| r.f1),
    }
}

/// Decodes every frame at `t_occ = t` for each threshold and scores it.
///
/// Frames with neither ground truth nor predictions do not enter the macro
/// means. `decode.t_cut` and `decode.min_run_cells` stay fixed.
pub fn pr_sweep<T: Real>(
    gt: &[StixelWorld<T>],
    heatmaps: &[HeatmapPair<T>],
    thresholds: &[f64],
    decode: &DecodeConfig,
    iou_min: f64,
) -> Result<Vec<SweepPoint>, MetricsError> {
    if gt.len() != heatmaps.len() {
        return Err(MetricsError::LengthMismatch {
            gt: gt.len(),
            pred: heatmaps.len(),
        });
    }
    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        if !(0.0..=1.0).contains(&t) {
            return Err(MetricsError::InvalidThreshold(t));
        }
        let cfg = DecodeConfig { t_occ: t, ..*decode };
        let counts = gt
            .iter()
            .zip(heatmaps)
            .map(|(g, hm)| match_counts(g, &decode_heatmaps(hm, &cfg)?, iou_min))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(summarize_counts(t, &counts));
    }
    Ok(out)
}

/// Sweep point with the highest micro F1; the earliest wins ties.
pub fn best_f1(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points.iter().fold(None, |best: Option<&SweepPoint>, p| match best {
        Some(b) if b.micro.f1 >= p.micro.f1 => Some(b),
        _ => Some(p),
    })
}

/// Lowest object bottom row per image pixel column, `None` where a column
/// holds no object Stixel.
pub fn bottom_contact_per_column<T: Real>(world: &StixelWorld<T>) -> Vec<Option<u32>> {
    let s = world.stixel_width() as usize;
    let mut out = vec![None; world.image_width() as usize];
    for st in world.objects() {
        let start = st.column() as usize * s;
        for slot in &mut out[start..start + s] {
            *slot = Some(slot.map_or(st.v_bottom(), |v: u32| v.max(st.v_bottom())));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreespaceReport {
    /// Mean column score in percent.
    pub score: f64,
    /// Population standard deviation of the column scores in percent.
    pub sigma: f64,
    pub per_column: Vec<f64>,
}

/// Column-wise free-space score of one frame.
///
/// A column with ground-truth contact `g > 0` is worth `g` points; the
/// prediction loses `|p - g|` of them, or all of them when it has no contact.
/// Columns without (or with zero) ground-truth contact are skipped. With no
/// evaluated column the score is 100 and sigma 0.
pub fn freespace_score(
    gt: &[Option<u32>],
    pred: &[Option<u32>],
    image_height: u32,
) -> Result<FreespaceReport, MetricsError> {
    if gt.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gt: gt.len(),
            pred: pred.len(),
        });
    }
    let per_column: Vec<f64> = gt
        .iter()
        .zip(pred)
        .filter_map(|(g, p)| {
            let g = (*g).filter(|&g| g > 0)?;
            let penalty = p.map_or(image_height, |p| p.abs_diff(g)).min(g);
            Some(f64::from(g - penalty) / f64::from(g) * 100.0)
        })
        .collect();
    if per_column.is_empty() {
        return Ok(FreespaceReport {
            score: 100.0,
            sigma: 0.0,
            per_column,
        });
    }
    let n = per_column.len() as f64;
    let score = per_column.iter().sum::<f64>() / n;
    let var = per_column.iter().map(|v| (v - score).powi(2)).sum::<f64>() / n;
    Ok(FreespaceReport {
        score,
        sigma: var.sqrt(),
        per_column,
    })
}

/// Mean score and mean per-frame sigma over several frames.
pub fn aggregate_freespace(frames: &[FreespaceReport]) -> (f64, f64) {
    if frames.is_empty() {
        return (100.0, 0.0);
    }
    let n = frames.len() as f64;
    (
        frames.iter().map(|f| f.score).sum::<f64>() / n,
        frames.iter().map(|f| f.sigma).sum::<f64>() / n,
    )
}
