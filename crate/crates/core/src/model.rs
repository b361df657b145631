//! Smell-free group modeling: quality odds for files carrying none of the
//! potentially causal smells.
//!
//! This is descriptive, not causal: it observes how much more often clean
//! files land in the high-quality group, overall and within each file-length
//! group. The evaluation year is configurable separately from the battery
//! year to limit leakage between selection and evaluation.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::battery::{length_groups, LengthGroup};
use crate::ingest::{FileKey, SnapshotYear};
use crate::metrics::{MetricKind, QualityGroup, QualityGrouping};

/// Quality odds of the smell-free file group for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupModelResult {
    pub metric: MetricKind,
    pub model_year: i32,
    pub universe: usize,
    pub clean_files: usize,
    /// Fraction of files with zero occurrences of every potential smell.
    pub clean_rate: f64,
    /// Complement of `clean_rate`; both are reported since "hit rate" is
    /// ambiguous between the two readings.
    pub smelly_rate: f64,
    /// P(high-quality | clean); `None` when no file is clean.
    pub p_high_given_clean: Option<f64>,
    /// P(low-quality | clean).
    pub p_low_given_clean: Option<f64>,
    /// P(high | clean) / P(high) - 1.
    pub lift_high: Option<f64>,
    /// The same lift computed within each line-count group.
    pub short_lift: Option<f64>,
    pub medium_lift: Option<f64>,
    pub long_lift: Option<f64>,
}

/// Computes quality odds for files free of every smell in `potential_smells`.
/// With an empty potential set every file is clean and all lifts are zero.
pub fn smell_free_analysis(
    potential_smells: &BTreeSet<String>,
    snapshot: &SnapshotYear,
    grouping: &QualityGrouping,
    line_counts: &BTreeMap<FileKey, u32>,
    quartile_fraction: f64,
    model_year: i32,
) -> GroupModelResult {
    let universe = grouping.universe();
    let high = grouping.files_in(QualityGroup::High);
    let low = grouping.files_in(QualityGroup::Low);
    let clean: BTreeSet<FileKey> = universe
        .iter()
        .filter(|f| {
            potential_smells
                .iter()
                .all(|s| snapshot.smell_count(f, s) == 0)
        })
        .cloned()
        .collect();

    let n = universe.len();
    let n_clean = clean.len();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);

    let p_high_given_clean = ratio(clean.intersection(&high).count(), n_clean);
    let p_low_given_clean = ratio(clean.intersection(&low).count(), n_clean);
    let base_high = ratio(high.len(), n);
    let lift_high = match (p_high_given_clean, base_high) {
        (Some(p), Some(b)) if b > 0.0 => Some(p / b - 1.0),
        _ => None,
    };

    let groups = length_groups(line_counts, quartile_fraction);
    let group_lift = |which: LengthGroup| -> Option<f64> {
        let members: BTreeSet<&FileKey> = universe
            .iter()
            .filter(|f| groups.get(*f) == Some(&which))
            .collect();
        let g_high = members.iter().filter(|f| high.contains(**f)).count();
        let g_clean_high = members
            .iter()
            .filter(|f| clean.contains(**f) && high.contains(**f))
            .count();
        let g_clean = members.iter().filter(|f| clean.contains(**f)).count();
        let p = ratio(g_clean_high, g_clean)?;
        let b = ratio(g_high, members.len())?;
        (b > 0.0).then(|| p / b - 1.0)
    };

    GroupModelResult {
        metric: grouping.metric,
        model_year,
        universe: n,
        clean_files: n_clean,
        clean_rate: if n > 0 { n_clean as f64 / n as f64 } else { 0.0 },
        smelly_rate: if n > 0 {
            (n - n_clean) as f64 / n as f64
        } else {
            0.0
        },
        p_high_given_clean,
        p_low_given_clean,
        lift_high,
        short_lift: group_lift(LengthGroup::Short),
        medium_lift: group_lift(LengthGroup::Medium),
        long_lift: group_lift(LengthGroup::Long),
    }
}
