//! Segmentation and pair-connectivity metrics: Rand error, ROC and
//! precision-recall over pixel-pair connectivity, and split/merge counts.
//!
//! Pair counting is always done through contingency tables in O(V + labels^2)
//! rather than looping over the O(V^2) pairs; the pair loop survives only as
//! a test oracle.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MalisError, Result};
use crate::graph::edge_list;
use crate::imagery::{AffinityGraph, Segmentation};
use crate::maximin::{build_maximin_forest, MaximinForest};

/// Unordered pixel pairs bucketed by (truth-connected, predicted-connected).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// Fraction of evaluated pairs on which the two sides disagree.
    pub fn rand_error(&self) -> f64 {
        (self.false_pos + self.false_neg) as f64 / self.total() as f64
    }

    /// True positive rate; 0 when there are no truth-connected pairs.
    pub fn tpr(&self) -> f64 {
        let denom = self.true_pos + self.false_neg;
        if denom == 0 {
            0.0
        } else {
            self.true_pos as f64 / denom as f64
        }
    }

    /// False positive rate; 0 when there are no truth-disconnected pairs.
    pub fn fpr(&self) -> f64 {
        let denom = self.false_pos + self.true_neg;
        if denom == 0 {
            0.0
        } else {
            self.false_pos as f64 / denom as f64
        }
    }

    /// Precision; defined as 1 when nothing is predicted connected.
    pub fn precision(&self) -> f64 {
        let denom = self.true_pos + self.false_pos;
        if denom == 0 {
            1.0
        } else {
            self.true_pos as f64 / denom as f64
        }
    }

    pub fn recall(&self) -> f64 {
        self.tpr()
    }

    pub fn accumulate(&mut self, other: &PairCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn check_dims(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(MalisError::Argument(format!(
            "dims mismatch: {a:?} vs {b:?}"
        )));
    }
    Ok(())
}

/// Pair counts between two segmentations of the same grid.
///
/// Labels are compared literally on both sides (two pixels are "connected"
/// when they carry equal labels), which is the textbook Rand contingency.
/// With `mask_zero`, pixels whose truth label is 0 are excluded from the
/// evaluated universe.
pub fn pair_counts_between(
    truth: &Segmentation,
    pred: &Segmentation,
    mask_zero: bool,
) -> Result<PairCounts> {
    check_dims(truth.dims(), pred.dims())?;
    let mut cells: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    let mut evaluated = 0u64;
    for (&t, &p) in truth.labels().iter().zip(pred.labels()) {
        if mask_zero && t == 0 {
            continue;
        }
        *cells.entry((t, p)).or_default() += 1;
        *rows.entry(t).or_default() += 1;
        *cols.entry(p).or_default() += 1;
        evaluated += 1;
    }
    let total = choose2(evaluated);
    if total == 0 {
        return Err(MalisError::EmptyEvaluation);
    }
    let agree_connected: u64 = cells.values().map(|&n| choose2(n)).sum();
    let truth_connected: u64 = rows.values().map(|&n| choose2(n)).sum();
    let pred_connected: u64 = cols.values().map(|&n| choose2(n)).sum();
    let true_pos = agree_connected;
    let false_pos = pred_connected - agree_connected;
    let false_neg = truth_connected - agree_connected;
    Ok(PairCounts {
        true_pos,
        false_pos,
        false_neg,
        true_neg: total - true_pos - false_pos - false_neg,
    })
}

/// Fraction of evaluated pixel pairs on which the two segmentations disagree
/// about same-segment membership.
pub fn rand_error(truth: &Segmentation, pred: &Segmentation, mask_zero: bool) -> Result<f64> {
    Ok(pair_counts_between(truth, pred, mask_zero)?.rand_error())
}

/// Counts per predicted component at one threshold, against truth labels.
///
/// Truth connectivity follows the boundary convention: a pair is
/// truth-connected only when both pixels carry the same label >= 1.
fn counts_from_connectivity(
    truth: &Segmentation,
    forest: &MaximinForest,
    theta: f32,
    mask_zero: bool,
) -> Result<PairCounts> {
    let connectivity = forest.connectivity_at(theta)?;
    let components = connectivity.component_ids();
    let mut by_component: HashMap<usize, u64> = HashMap::new();
    let mut by_component_label: HashMap<(usize, u32), u64> = HashMap::new();
    let mut by_label: HashMap<u32, u64> = HashMap::new();
    let mut evaluated = 0u64;
    for (pixel, &t) in truth.labels().iter().enumerate() {
        if mask_zero && t == 0 {
            continue;
        }
        evaluated += 1;
        let c = components[pixel];
        *by_component.entry(c).or_default() += 1;
        if t >= 1 {
            *by_component_label.entry((c, t)).or_default() += 1;
            *by_label.entry(t).or_default() += 1;
        }
    }
    let total = choose2(evaluated);
    if total == 0 {
        return Err(MalisError::EmptyEvaluation);
    }
    let true_pos: u64 = by_component_label.values().map(|&n| choose2(n)).sum();
    let pred_connected: u64 = by_component.values().map(|&n| choose2(n)).sum();
    let truth_connected: u64 = by_label.values().map(|&n| choose2(n)).sum();
    let false_pos = pred_connected - true_pos;
    let false_neg = truth_connected - true_pos;
    Ok(PairCounts {
        true_pos,
        false_pos,
        false_neg,
        true_neg: total - true_pos - false_pos - false_neg,
    })
}

// Maximin affinities are invariant to tie order, so evaluation forests may
// use a fixed seed without affecting any count.
fn evaluation_forest(g: &AffinityGraph) -> MaximinForest {
    build_maximin_forest(&edge_list(g), &mut ChaCha8Rng::seed_from_u64(0))
}

/// Pair counts at one threshold: predicted connectivity is maximin affinity
/// >= theta, computed in aggregate from component sizes.
pub fn pair_counts_at_threshold(
    truth: &Segmentation,
    g: &AffinityGraph,
    theta: f32,
    mask_zero: bool,
) -> Result<PairCounts> {
    check_dims(truth.dims(), g.dims())?;
    let forest = evaluation_forest(g);
    counts_from_connectivity(truth, &forest, theta, mask_zero)
}

/// One threshold's worth of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub theta: f64,
    pub counts: PairCounts,
}

impl SweepPoint {
    pub fn rand_error(&self) -> f64 {
        self.counts.rand_error()
    }

    /// (fpr, tpr) coordinates of the ROC point.
    pub fn roc(&self) -> (f64, f64) {
        (self.counts.fpr(), self.counts.tpr())
    }

    /// (recall, precision) coordinates of the PR point.
    pub fn pr(&self) -> (f64, f64) {
        (self.counts.recall(), self.counts.precision())
    }
}

/// Evaluate pair connectivity across a threshold range: one maximin forest
/// build, then per-threshold aggregate counts.
pub fn sweep(
    truth: &Segmentation,
    g: &AffinityGraph,
    thetas: &[f64],
    mask_zero: bool,
) -> Result<Vec<SweepPoint>> {
    check_dims(truth.dims(), g.dims())?;
    if thetas.is_empty() {
        return Err(MalisError::Argument("empty threshold list".into()));
    }
    if thetas.windows(2).any(|w| w[0] > w[1]) {
        return Err(MalisError::Argument(
            "thresholds must be sorted ascending".into(),
        ));
    }
    if thetas.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(MalisError::Argument("thresholds must lie in [0,1]".into()));
    }
    let forest = evaluation_forest(g);
    thetas
        .iter()
        .map(|&theta| {
            counts_from_connectivity(truth, &forest, theta as f32, mask_zero)
                .map(|counts| SweepPoint { theta, counts })
        })
        .collect()
}

/// Split and merge counts from the overlap table of truth and predicted
/// segments (labels >= 1 on both sides).
///
/// A truth segment overlapped by k >= 1 predicted segments contributes k - 1
/// splits; a predicted segment overlapping k >= 1 truth segments contributes
/// k - 1 mergers.
pub fn split_merge_counts(truth: &Segmentation, pred: &Segmentation) -> Result<(u64, u64)> {
    check_dims(truth.dims(), pred.dims())?;
    let mut overlaps: HashMap<(u32, u32), u64> = HashMap::new();
    for (&t, &p) in truth.labels().iter().zip(pred.labels()) {
        if t >= 1 && p >= 1 {
            *overlaps.entry((t, p)).or_default() += 1;
        }
    }
    let mut preds_per_truth: HashMap<u32, u64> = HashMap::new();
    let mut truths_per_pred: HashMap<u32, u64> = HashMap::new();
    for &(t, p) in overlaps.keys() {
        *preds_per_truth.entry(t).or_default() += 1;
        *truths_per_pred.entry(p).or_default() += 1;
    }
    let splits = preds_per_truth.values().map(|&k| k - 1).sum();
    let mergers = truths_per_pred.values().map(|&k| k - 1).sum();
    Ok((splits, mergers))
}

/// One CSV row of an evaluation sweep.
#[derive(Debug, Clone, Copy)]
pub struct EvalRow {
    pub theta: f64,
    pub counts: PairCounts,
    pub splits: u64,
    pub mergers: u64,
}

/// Serialize sweep rows as CSV with full-precision decimal floats.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[EvalRow]) -> io::Result<()> {
    writeln!(w, "theta,rand_error,tpr,fpr,precision,recall,splits,mergers")?;
    for row in rows {
        let c = &row.counts;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.theta,
            c.rand_error(),
            c.tpr(),
            c.fpr(),
            c.precision(),
            c.recall(),
            row.splits,
            row.mergers
        )?;
    }
    Ok(())
}
