//! Year-over-year analyses: co-change of smells with target metrics, removal
//! probability, and smell-count stability.
//!
//! All three work on [`YearPair`]s built from consecutive snapshot years.
//! "Improvement" is a strict decrease; an unchanged count or value is
//! neither an improvement nor a regression.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::ingest::{FileKey, SnapshotYear};
use crate::metrics::{FileYearMetrics, MetricKind};
use crate::stats;

/// One file observed across two consecutive years.
#[derive(Debug, Clone, PartialEq)]
pub struct YearPair {
    pub file: FileKey,
    pub year_from: i32,
    pub year_to: i32,
    /// Smell counts in the first year's snapshot.
    pub smells_from: BTreeMap<String, u32>,
    /// Smell counts in the second year's snapshot; empty when the file died.
    pub smells_to: BTreeMap<String, u32>,
    /// Defined metric values for the first year (file was eligible then).
    pub metrics_from: BTreeMap<MetricKind, f64>,
    /// Defined metric values for the second year.
    pub metrics_to: BTreeMap<MetricKind, f64>,
    /// Eligible (enough commits, analyzable) in both years; the co-change
    /// universe, since metric values on rarely-touched files are too noisy.
    pub eligible_both: bool,
    /// Present in the second year's snapshot.
    pub file_alive_in_to: bool,
}

impl YearPair {
    pub fn smell_count_from(&self, smell: &str) -> u32 {
        self.smells_from.get(smell).copied().unwrap_or(0)
    }

    pub fn smell_count_to(&self, smell: &str) -> u32 {
        self.smells_to.get(smell).copied().unwrap_or(0)
    }

    /// Count change year over year (`to - from`).
    pub fn smell_delta(&self, smell: &str) -> i64 {
        self.smell_count_to(smell) as i64 - self.smell_count_from(smell) as i64
    }

    /// Value change year over year, when defined in both years.
    pub fn metric_delta(&self, kind: MetricKind) -> Option<f64> {
        Some(self.metrics_to.get(&kind)? - self.metrics_from.get(&kind)?)
    }

    fn smell_improved(&self, smell: &str) -> bool {
        self.smell_count_to(smell) < self.smell_count_from(smell)
    }

    fn metric_improved(&self, kind: MetricKind) -> Option<bool> {
        Some(self.metrics_to.get(&kind)? < self.metrics_from.get(&kind)?)
    }
}

/// Builds the pairs for `(year_from, year_from + 1)` from the two snapshots
/// and the per-year metric tables. One pair per file present in the first
/// year's snapshot.
pub fn build_year_pairs(
    snapshot_from: &SnapshotYear,
    snapshot_to: &SnapshotYear,
    metrics_from: &[FileYearMetrics],
    metrics_to: &[FileYearMetrics],
    eligible_from: &BTreeSet<FileKey>,
    eligible_to: &BTreeSet<FileKey>,
) -> Vec<YearPair> {
    assert_eq!(
        snapshot_to.year,
        snapshot_from.year + 1,
        "year pairs must be consecutive"
    );
    let values_from: BTreeMap<&FileKey, &FileYearMetrics> =
        metrics_from.iter().map(|m| (&m.file, m)).collect();
    let values_to: BTreeMap<&FileKey, &FileYearMetrics> =
        metrics_to.iter().map(|m| (&m.file, m)).collect();

    let defined = |row: Option<&&FileYearMetrics>| -> BTreeMap<MetricKind, f64> {
        row.map_or_else(BTreeMap::new, |m| {
            MetricKind::ALL
                .iter()
                .filter_map(|k| m.value(*k).map(|v| (*k, v)))
                .collect()
        })
    };

    snapshot_from
        .files()
        .map(|file| {
            let alive = snapshot_to.contains(&file);
            YearPair {
                smells_from: snapshot_from.file_smells(&file).cloned().unwrap_or_default(),
                smells_to: if alive {
                    snapshot_to.file_smells(&file).cloned().unwrap_or_default()
                } else {
                    BTreeMap::new()
                },
                metrics_from: defined(values_from.get(&file)),
                metrics_to: defined(values_to.get(&file)),
                eligible_both: eligible_from.contains(&file) && eligible_to.contains(&file),
                file_alive_in_to: alive,
                year_from: snapshot_from.year,
                year_to: snapshot_to.year,
                file,
            }
        })
        .collect()
}

/// Co-change statistics of one smell against one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CochangeStats {
    /// Pairs eligible both years with the smell present in the first year
    /// and the metric defined in both.
    pub opportunities: usize,
    /// Opportunity pairs where the smell count strictly decreased.
    pub smell_improvements: usize,
    /// P(metric improved) over all opportunity pairs.
    pub base_rate: Option<f64>,
    /// P(metric improved | smell improved).
    pub precision: Option<f64>,
    /// precision / base_rate - 1.
    pub lift: Option<f64>,
}

/// Conditional improvement statistics: how often the target metric improves
/// when the smell count drops, against the base improvement rate over all
/// opportunity pairs.
pub fn cochange_stats(smell: &str, metric: MetricKind, pairs: &[YearPair]) -> CochangeStats {
    let mut opportunities = 0usize;
    let mut metric_improved = 0usize;
    let mut smell_improved = 0usize;
    let mut both_improved = 0usize;

    for pair in pairs {
        if !pair.eligible_both || pair.smell_count_from(smell) == 0 {
            continue;
        }
        let Some(m_imp) = pair.metric_improved(metric) else {
            continue;
        };
        opportunities += 1;
        let s_imp = pair.smell_improved(smell);
        if m_imp {
            metric_improved += 1;
        }
        if s_imp {
            smell_improved += 1;
        }
        if m_imp && s_imp {
            both_improved += 1;
        }
    }

    let base_rate = (opportunities > 0).then(|| metric_improved as f64 / opportunities as f64);
    let precision = (smell_improved > 0).then(|| both_improved as f64 / smell_improved as f64);
    let lift = match (precision, base_rate) {
        (Some(p), Some(b)) if b > 0.0 => Some(p / b - 1.0),
        _ => None,
    };
    CochangeStats {
        opportunities,
        smell_improvements: smell_improved,
        base_rate,
        precision,
        lift,
    }
}

/// Removal statistics of one smell.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalStats {
    /// Files carrying the smell in the first year and still present in the
    /// second year's snapshot. Deleted files are not removal opportunities.
    pub opportunities: usize,
    /// Opportunities where every occurrence disappeared.
    pub removals: usize,
    pub probability: Option<f64>,
    /// Whether the opportunity count reaches the reporting floor.
    pub reported: bool,
}

/// Probability that a smell present in a file is fully removed the year
/// after. A count that merely drops is not a removal: all occurrences must
/// go, as that is the signal of deliberate action.
pub fn removal_probability(
    smell: &str,
    pairs: &[YearPair],
    min_opportunities: usize,
) -> RemovalStats {
    let mut opportunities = 0usize;
    let mut removals = 0usize;
    for pair in pairs {
        if pair.smell_count_from(smell) == 0 || !pair.file_alive_in_to {
            continue;
        }
        opportunities += 1;
        if pair.smell_count_to(smell) == 0 {
            removals += 1;
        }
    }
    RemovalStats {
        opportunities,
        removals,
        probability: (opportunities > 0).then(|| removals as f64 / opportunities as f64),
        reported: opportunities >= min_opportunities,
    }
}

/// Mean year-over-year Pearson correlation of the smell's per-file counts,
/// taken over files alive in both years and averaged across year pairs.
/// `None` when no year pair yields a defined correlation.
///
/// Series are accumulated in file-key order so the floating-point result is
/// identical under any permutation of the input pairs.
pub fn stability(smell: &str, pairs: &[YearPair]) -> Option<f64> {
    let mut by_year: BTreeMap<i32, Vec<(&FileKey, f64, f64)>> = BTreeMap::new();
    for pair in pairs {
        if !pair.file_alive_in_to {
            continue;
        }
        by_year.entry(pair.year_from).or_default().push((
            &pair.file,
            pair.smell_count_from(smell) as f64,
            pair.smell_count_to(smell) as f64,
        ));
    }
    let correlations: Vec<f64> = by_year
        .values_mut()
        .filter(|rows| rows.len() >= 2)
        .filter_map(|rows| {
            rows.sort_by_key(|(file, _, _)| *file);
            let xs: Vec<f64> = rows.iter().map(|(_, x, _)| *x).collect();
            let ys: Vec<f64> = rows.iter().map(|(_, _, y)| *y).collect();
            stats::pearson(&xs, &ys).ok().flatten()
        })
        .collect();
    (!correlations.is_empty()).then(|| correlations.iter().sum::<f64>() / correlations.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pair(
        name: &str,
        smell_from: u32,
        smell_to: u32,
        metric_from: f64,
        metric_to: f64,
    ) -> YearPair {
        YearPair {
            file: FileKey::new("r", name),
            year_from: 2018,
            year_to: 2019,
            smells_from: [("S".to_string(), smell_from)]
                .into_iter()
                .filter(|(_, c)| *c > 0)
                .collect(),
            smells_to: [("S".to_string(), smell_to)]
                .into_iter()
                .filter(|(_, c)| *c > 0)
                .collect(),
            metrics_from: [(MetricKind::Ccp, metric_from)].into_iter().collect(),
            metrics_to: [(MetricKind::Ccp, metric_to)].into_iter().collect(),
            eligible_both: true,
            file_alive_in_to: true,
        }
    }

    #[test]
    fn cochange_hand_arithmetic() {
        // 100 opportunity pairs. The smell improves in 50; the metric
        // improves in 30 of those and in 20 of the rest, so the base rate is
        // 0.5, precision 0.6, lift 0.2.
        let mut pairs = Vec::new();
        for i in 0..50 {
            let metric_to = if i < 30 { 0.1 } else { 0.3 };
            pairs.push(pair(&format!("imp{i}"), 3, 2, 0.2, metric_to));
        }
        for i in 0..50 {
            let metric_to = if i < 20 { 0.1 } else { 0.3 };
            pairs.push(pair(&format!("same{i}"), 3, 3, 0.2, metric_to));
        }
        let s = cochange_stats("S", MetricKind::Ccp, &pairs);
        assert_eq!(s.opportunities, 100);
        assert_eq!(s.smell_improvements, 50);
        assert_eq!(s.base_rate, Some(0.5));
        assert_eq!(s.precision, Some(0.6));
        assert!((s.lift.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cochange_without_smell_improvements_is_undefined() {
        let pairs = vec![pair("a", 2, 2, 0.3, 0.1), pair("b", 2, 3, 0.3, 0.1)];
        let s = cochange_stats("S", MetricKind::Ccp, &pairs);
        assert_eq!(s.smell_improvements, 0);
        assert_eq!(s.precision, None);
        assert_eq!(s.lift, None);
    }

    #[test]
    fn cochange_requires_smell_presence_in_first_year() {
        let pairs = vec![pair("a", 0, 0, 0.3, 0.1)];
        let s = cochange_stats("S", MetricKind::Ccp, &pairs);
        assert_eq!(s.opportunities, 0);
    }

    #[test]
    fn cochange_ignores_ineligible_pairs() {
        let mut p = pair("a", 3, 1, 0.3, 0.1);
        p.eligible_both = false;
        let s = cochange_stats("S", MetricKind::Ccp, &[p]);
        assert_eq!(s.opportunities, 0);
    }

    #[test]
    fn cochange_perfect_correlation_has_precision_one() {
        // Metric improves exactly when the smell improves.
        let mut pairs = Vec::new();
        for i in 0..40 {
            let improved = i % 2 == 0;
            let (s_to, m_to) = if improved { (1, 0.1) } else { (3, 0.3) };
            pairs.push(pair(&format!("f{i}"), 3, s_to, 0.2, m_to));
        }
        let s = cochange_stats("S", MetricKind::Ccp, &pairs);
        assert_eq!(s.precision, Some(1.0));
        assert!(s.lift.unwrap() > 0.9); // base rate 0.5 -> lift 1.0
    }

    #[test]
    fn cochange_independent_improvements_have_near_zero_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut pairs = Vec::new();
        for i in 0..10_000 {
            let s_imp = rng.random_bool(0.3);
            let m_imp = rng.random_bool(0.5);
            pairs.push(pair(
                &format!("f{i}"),
                3,
                if s_imp { 1 } else { 3 },
                0.2,
                if m_imp { 0.1 } else { 0.3 },
            ));
        }
        let s = cochange_stats("S", MetricKind::Ccp, &pairs);
        assert!(s.lift.unwrap().abs() < 0.05, "lift = {:?}", s.lift);
    }

    #[test]
    fn removal_simple_ratio() {
        let pairs = vec![
            pair("a", 2, 0, 0.2, 0.2), // cleaned
            pair("b", 2, 2, 0.2, 0.2),
            pair("c", 5, 1, 0.2, 0.2), // partial: not a removal
            pair("d", 1, 1, 0.2, 0.2),
        ];
        let s = removal_probability("S", &pairs, 200);
        assert_eq!(s.opportunities, 4);
        assert_eq!(s.removals, 1);
        assert_eq!(s.probability, Some(0.25));
        assert!(!s.reported);
        assert!(removal_probability("S", &pairs, 4).reported);
    }

    #[test]
    fn removal_fixture_with_deletion() {
        // 10 files carry the smell in the first year: 3 fully cleaned, 2
        // partially reduced, 1 deleted (not an opportunity), 4 unchanged.
        let mut pairs = Vec::new();
        for i in 0..3 {
            pairs.push(pair(&format!("clean{i}"), 4, 0, 0.2, 0.2));
        }
        for i in 0..2 {
            pairs.push(pair(&format!("partial{i}"), 5, 1, 0.2, 0.2));
        }
        let mut deleted = pair("deleted", 4, 0, 0.2, 0.2);
        deleted.file_alive_in_to = false;
        deleted.smells_to.clear();
        pairs.push(deleted);
        for i in 0..4 {
            pairs.push(pair(&format!("keep{i}"), 2, 2, 0.2, 0.2));
        }
        let s = removal_probability("S", &pairs, 1);
        assert_eq!(s.opportunities, 9);
        assert_eq!(s.removals, 3);
        assert_eq!(s.probability, Some(3.0 / 9.0));
    }

    #[test]
    fn removal_zero_opportunities_is_undefined() {
        let pairs = vec![pair("a", 0, 0, 0.2, 0.2)];
        let s = removal_probability("S", &pairs, 1);
        assert_eq!(s.probability, None);
    }

    #[test]
    fn removal_is_monotone_in_cleaned_files() {
        let mut pairs = vec![
            pair("a", 2, 0, 0.2, 0.2),
            pair("b", 2, 2, 0.2, 0.2),
            pair("c", 3, 3, 0.2, 0.2),
        ];
        let before = removal_probability("S", &pairs, 1).probability.unwrap();
        pairs.push(pair("d", 4, 0, 0.2, 0.2));
        let after = removal_probability("S", &pairs, 1).probability.unwrap();
        assert!(after >= before);
    }

    #[test]
    fn stability_identical_counts_is_one() {
        let pairs: Vec<YearPair> = (0..10)
            .map(|i| pair(&format!("f{i}"), i + 1, i + 1, 0.2, 0.2))
            .collect();
        let r = stability("S", &pairs).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_shuffled_counts_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let counts: Vec<u32> = (0..4_000).map(|_| rng.random_range(0..9)).collect();
        let mut shuffled = counts.clone();
        shuffled.shuffle(&mut rng);
        let pairs: Vec<YearPair> = counts
            .iter()
            .zip(&shuffled)
            .enumerate()
            .map(|(i, (&a, &b))| pair(&format!("f{i}"), a, b, 0.2, 0.2))
            .collect();
        let r = stability("S", &pairs).unwrap();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn stability_no_variance_is_undefined() {
        let pairs: Vec<YearPair> = (0..5)
            .map(|i| pair(&format!("f{i}"), 2, 2, 0.2, 0.2))
            .collect();
        assert_eq!(stability("S", &pairs), None);
    }

    #[test]
    fn temporal_stats_are_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut pairs: Vec<YearPair> = (0..200)
            .map(|i| {
                pair(
                    &format!("f{i:03}"),
                    rng.random_range(0..4),
                    rng.random_range(0..4),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                )
            })
            .collect();
        let a = (
            cochange_stats("S", MetricKind::Ccp, &pairs),
            removal_probability("S", &pairs, 10),
            stability("S", &pairs),
        );
        pairs.shuffle(&mut rng);
        let b = (
            cochange_stats("S", MetricKind::Ccp, &pairs),
            removal_probability("S", &pairs, 10),
            stability("S", &pairs),
        );
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }
}
