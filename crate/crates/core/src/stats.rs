//! Supervised-learning statistics kernel shared by all property evaluators.
//!
//! Everything here is computed from exact integer counts and divided once at
//! the end, so two runs over the same sets produce bit-identical ratios.
//! Undefined statistics (empty hit set, empty positive set, zero variance)
//! are explicit `None` values, never silently zero: a smell with no hits must
//! fail predictive power visibly.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Confusion-style statistics of a hit set against a positive set.
///
/// Terminology: a *hit* is a file flagged by the classifier under test (for
/// us, a file containing a smell); a *positive* is a file where the concept
/// holds (a low-quality file). `precision_lift` is `precision / P(positive)
/// - 1`: zero for a random classifier, positive when hits concentrate in the
/// positives.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionStats {
    pub universe: usize,
    pub hits: usize,
    pub positives: usize,
    pub true_positives: usize,
    /// P(hit).
    pub hit_rate: f64,
    /// P(positive).
    pub positive_rate: f64,
    /// P(positive | hit); `None` when there are no hits.
    pub precision: Option<f64>,
    /// P(hit | positive); `None` when there are no positives.
    pub recall: Option<f64>,
    /// TP / (TP + FP + FN); `None` when all three are zero.
    pub jaccard: Option<f64>,
    /// precision / positive_rate - 1; `None` when precision is undefined or
    /// the positive rate is zero.
    pub precision_lift: Option<f64>,
    /// Mean target-metric value over hits; `None` when there are no hits.
    pub mean_given_hit: Option<f64>,
    /// Mean target-metric value over the universe.
    pub mean_overall: Option<f64>,
}

/// Computes [`ConfusionStats`] for `hits` against `positives` within
/// `universe`, with per-key metric values used for the two means.
///
/// `hits` and `positives` must be subsets of `universe`, and `universe` must
/// be non-empty.
pub fn confusion<K: Ord>(
    hits: &BTreeSet<K>,
    positives: &BTreeSet<K>,
    universe: &BTreeSet<K>,
    metric_values: &BTreeMap<K, f64>,
) -> Result<ConfusionStats> {
    if universe.is_empty() {
        return Err(Error::InvalidInput("confusion: empty universe".into()));
    }
    if !hits.is_subset(universe) {
        return Err(Error::InvalidInput(
            "confusion: hits not a subset of the universe".into(),
        ));
    }
    if !positives.is_subset(universe) {
        return Err(Error::InvalidInput(
            "confusion: positives not a subset of the universe".into(),
        ));
    }

    let n = universe.len();
    let n_hits = hits.len();
    let n_pos = positives.len();
    let tp = hits.intersection(positives).count();
    let fp = n_hits - tp;
    let fnn = n_pos - tp;

    let hit_rate = n_hits as f64 / n as f64;
    let positive_rate = n_pos as f64 / n as f64;
    let precision = (n_hits > 0).then(|| tp as f64 / n_hits as f64);
    let recall = (n_pos > 0).then(|| tp as f64 / n_pos as f64);
    let jaccard = (tp + fp + fnn > 0).then(|| tp as f64 / (tp + fp + fnn) as f64);
    let precision_lift = match precision {
        Some(p) if positive_rate > 0.0 => Some(p / positive_rate - 1.0),
        _ => None,
    };

    let mean_over = |keys: &BTreeSet<K>| -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for k in keys {
            if let Some(v) = metric_values.get(k) {
                sum += v;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    };

    Ok(ConfusionStats {
        universe: n,
        hits: n_hits,
        positives: n_pos,
        true_positives: tp,
        hit_rate,
        positive_rate,
        precision,
        recall,
        jaccard,
        precision_lift,
        mean_given_hit: mean_over(hits),
        mean_overall: mean_over(universe),
    })
}

/// Sample Pearson correlation coefficient of two equal-length series.
///
/// Returns `Ok(None)` when either series has no variance, which callers
/// report as "no-variance" rather than treating as zero.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "pearson: series lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput(
            "pearson: need at least 2 observations".into(),
        ));
    }

    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;

    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}
