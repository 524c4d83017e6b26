//! Top-k precision/recall and threshold-rate evaluation of scored windows
//! against ground-truth labels. Warm-up windows are excluded from both the
//! ranking and the ground-truth denominators.

use std::collections::BTreeMap;

use thiserror::Error;

/// One scored window as the evaluator sees it.
#[derive(Debug, Clone, Copy)]
pub struct WindowScore {
    pub window_index: u64,
    pub score: f64,
    pub warmup: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("k = {k} exceeds the {available} evaluable windows")]
    KTooLarge { k: usize, available: usize },
    #[error("ground truth contains no anomalous windows")]
    EmptyGroundTruth,
    #[error("no evaluable windows")]
    EmptyInput,
    #[error("window {0} is missing from the label file")]
    MissingLabel(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecallPoint {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    /// `mean + 0.5 * std` over all evaluable window scores.
    pub threshold: f64,
    /// Windows scoring strictly above the threshold.
    pub above: usize,
    pub true_positives: usize,
    /// Fraction of above-threshold windows that are labeled anomalous;
    /// 0 when nothing clears the threshold.
    pub rate: f64,
    /// Set when no window scored strictly above the threshold.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub points: Vec<PrecisionRecallPoint>,
    pub threshold: ThresholdReport,
    /// Per-window `(window_index, score, label)` over the evaluable windows,
    /// in stream order.
    pub table: Vec<(u64, f64, bool)>,
    pub total_anomalies: usize,
}

/// Non-warmup windows joined with their labels, in stream order.
fn evaluable(
    scores: &[WindowScore],
    labels: &BTreeMap<u64, bool>,
) -> Result<Vec<(u64, f64, bool)>, EvalError> {
    let mut rows = Vec::new();
    for s in scores {
        if s.warmup {
            continue;
        }
        let label = labels
            .get(&s.window_index)
            .copied()
            .ok_or(EvalError::MissingLabel(s.window_index))?;
        rows.push((s.window_index, s.score, label));
    }
    Ok(rows)
}

/// Indices of `rows` ranked by score descending, earlier window first on ties.
fn ranked(rows: &[(u64, f64, bool)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].1.total_cmp(&rows[a].1).then_with(|| rows[a].0.cmp(&rows[b].0)));
    order
}

/// Fraction of the k highest-scoring non-warmup windows that are labeled
/// anomalous.
pub fn precision_at_k(
    scores: &[WindowScore],
    labels: &BTreeMap<u64, bool>,
    k: usize,
) -> Result<f64, EvalError> {
    let rows = evaluable(scores, labels)?;
    if k > rows.len() {
        return Err(EvalError::KTooLarge { k, available: rows.len() });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let order = ranked(&rows);
    let hits = order[..k].iter().filter(|&&i| rows[i].2).count();
    Ok(hits as f64 / k as f64)
}

/// Precision and recall at each requested k, plus the threshold report and
/// the per-window table.
pub fn precision_recall(
    scores: &[WindowScore],
    labels: &BTreeMap<u64, bool>,
    ks: &[usize],
) -> Result<EvalResult, EvalError> {
    let rows = evaluable(scores, labels)?;
    if rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let total_anomalies = rows.iter().filter(|r| r.2).count();
    if total_anomalies == 0 {
        return Err(EvalError::EmptyGroundTruth);
    }
    let order = ranked(&rows);
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        if k > rows.len() {
            return Err(EvalError::KTooLarge { k, available: rows.len() });
        }
        let hits = order[..k].iter().filter(|&&i| rows[i].2).count();
        let precision = if k == 0 { 0.0 } else { hits as f64 / k as f64 };
        points.push(PrecisionRecallPoint {
            k,
            precision,
            recall: hits as f64 / total_anomalies as f64,
        });
    }
    let threshold = threshold_rate(scores, labels)?;
    Ok(EvalResult { points, threshold, table: rows, total_anomalies })
}

/// Thresholds at `mean + 0.5 * std` of all evaluable scores and reports which
/// fraction of the strictly-above windows is labeled anomalous.
pub fn threshold_rate(
    scores: &[WindowScore],
    labels: &BTreeMap<u64, bool>,
) -> Result<ThresholdReport, EvalError> {
    let rows = evaluable(scores, labels)?;
    if rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r.1 - mean) * (r.1 - mean)).sum::<f64>() / n;
    let threshold = mean + 0.5 * var.sqrt();
    let mut above = 0usize;
    let mut true_positives = 0usize;
    for row in &rows {
        if row.1 > threshold {
            above += 1;
            if row.2 {
                true_positives += 1;
            }
        }
    }
    let degenerate = above == 0;
    let rate = if degenerate { 0.0 } else { true_positives as f64 / above as f64 };
    Ok(ThresholdReport { threshold, above, true_positives, rate, degenerate })
}
