//! The five-property causality battery and the per-smell verdict.
//!
//! A smell *could* cause a bad target metric only if, at minimum:
//!
//! 1. **Predictive power**: positive precision lift against the low-quality
//!    group, an elevated metric mean among its hits, and enough hits for the
//!    numbers to be stable.
//! 2. **Monotonicity**: hit rate strictly increasing from high-quality
//!    through middle to low-quality files (a causal smell must be more
//!    common where the damage shows).
//! 3. **Co-change**: when the smell count drops year over year, the metric
//!    improves more often than its base improvement rate.
//! 4. **Twins**: positive lift when comparing only files of the same
//!    developer in the same repository, controlling for who wrote the code.
//! 5. **Length**: positive lift inside each file-length group and less than
//!    0.5 Pearson correlation with line count, screening out smells that are
//!    mere proxies for file size.
//!
//! A smell passing all five at the base threshold (lift > 0) is `Potential`;
//! with every lift at or above +10% it is `Robust`; if it only clears a
//! relaxed -10% bar it is `Almost`; otherwise `Rejected`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{FileKey, SnapshotYear};
use crate::metrics::{nearest_rank, CommitIndex, MetricKind, QualityGroup, QualityGrouping};
use crate::stats::{self, ConfusionStats};
use crate::temporal::{CochangeStats, RemovalStats, YearPair};

/// The five causality properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Property {
    Predictive,
    Monotonicity,
    Cochange,
    Twins,
    Length,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Predictive,
        Property::Monotonicity,
        Property::Cochange,
        Property::Twins,
        Property::Length,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Predictive => "Predictive",
            Property::Monotonicity => "Monotonicity",
            Property::Cochange => "Cochange",
            Property::Twins => "Twins",
            Property::Length => "Length",
        }
    }
}

/// Verdict for one (smell, metric) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    Robust,
    Potential,
    Almost,
    Rejected,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Robust => "Robust",
            Verdict::Potential => "Potential",
            Verdict::Almost => "Almost",
            Verdict::Rejected => "Rejected",
        }
    }

    /// Robust and Potential smells both carry all five properties at the
    /// base threshold.
    pub fn is_potential(self) -> bool {
        matches!(self, Verdict::Robust | Verdict::Potential)
    }
}

/// Evaluation thresholds; the defaults follow the run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Floor on predictive hits and on co-change opportunity pairs.
    pub min_files: usize,
    /// Floor on qualifying twin cells.
    pub min_twin_cells: usize,
    /// Lift required everywhere for a Robust verdict.
    pub robust_lift: f64,
    /// Relaxed lift floor for an Almost verdict. Must be <= 0.
    pub almost_lift: f64,
    /// Length property fails when Pearson(smell count, line count) reaches
    /// this cap.
    pub length_corr_cap: f64,
    /// Fraction for the short/long line-count quartiles.
    pub quartile_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_files: 200,
            min_twin_cells: 10,
            robust_lift: 0.10,
            almost_lift: -0.10,
            length_corr_cap: 0.5,
            quartile_fraction: 0.25,
        }
    }
}

/// Per-subgroup values backing a property result.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyDetail {
    None,
    /// Means behind the predictive "how bad" clause.
    Predictive {
        mean_given_hit: Option<f64>,
        mean_overall: Option<f64>,
    },
    /// Smell hit rate per quality group.
    GroupHitRates { high: f64, other: f64, low: f64 },
    /// Precision lift per length group plus the line-count correlation.
    LengthGroups {
        short: Option<f64>,
        medium: Option<f64>,
        long: Option<f64>,
        pearson: Option<f64>,
    },
}

/// Outcome of one property evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub property: Property,
    /// Pass at the base threshold (lift > 0).
    pub passed: bool,
    /// The property's headline statistic: a precision lift, or the hit-rate
    /// spread for monotonicity. `None` when undefined.
    pub lift_or_stat: Option<f64>,
    /// What the property's support floor applies to: predictive hits,
    /// co-change opportunity pairs, twin cells, length-group hits.
    pub support: usize,
    pub detail: PropertyDetail,
    /// Why the property failed, when it did.
    pub reason: Option<String>,
}

/// Assessment of one smell against one target metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SmellAssessment {
    pub smell_name: String,
    pub smell_group: String,
    pub metric: MetricKind,
    /// The five property results in [`Property::ALL`] order.
    pub results: Vec<PropertyResult>,
    pub confusion: ConfusionStats,
    pub cochange: Option<CochangeStats>,
    pub twins_lift: Option<f64>,
    pub removal: RemovalStats,
    pub verdict: Verdict,
    /// Number of properties held at the base threshold.
    pub properties_held: u8,
}

/// File-length group by corpus line-count quartile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LengthGroup {
    Short,
    Medium,
    Long,
}

/// Assigns every file to a length group: short is at or below the lower
/// quartile of the universe's line counts, long at or above the upper.
pub fn length_groups(
    line_counts: &BTreeMap<FileKey, u32>,
    fraction: f64,
) -> BTreeMap<FileKey, LengthGroup> {
    if line_counts.is_empty() {
        return BTreeMap::new();
    }
    let mut sorted: Vec<f64> = line_counts.values().map(|&v| v as f64).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("line counts are finite"));
    let q_short = nearest_rank(&sorted, fraction);
    let q_long = nearest_rank(&sorted, 1.0 - fraction);
    line_counts
        .iter()
        .map(|(file, &lines)| {
            let group = if (lines as f64) <= q_short {
                LengthGroup::Short
            } else if (lines as f64) >= q_long {
                LengthGroup::Long
            } else {
                LengthGroup::Medium
            };
            (file.clone(), group)
        })
        .collect()
}

/// Dominant author per file for a year: most commits touching the file, ties
/// broken by the earliest first commit, then by author id.
pub fn compute_ownership(
    index: &CommitIndex<'_>,
    files: &BTreeSet<FileKey>,
    year: i32,
) -> BTreeMap<FileKey, String> {
    let mut out = BTreeMap::new();
    for file in files {
        let mut per_author: BTreeMap<&str, (usize, i64)> = BTreeMap::new();
        for c in index.file_commits_in_year(file, year) {
            let entry = per_author
                .entry(c.author_id.as_str())
                .or_insert((0, c.timestamp));
            entry.0 += 1;
            entry.1 = entry.1.min(c.timestamp);
        }
        let owner = per_author
            .into_iter()
            .max_by(|(a_id, (a_n, a_first)), (b_id, (b_n, b_first))| {
                a_n.cmp(b_n)
                    .then(b_first.cmp(a_first)) // earlier first commit wins
                    .then(b_id.cmp(a_id)) // then smaller author id
            })
            .map(|(id, _)| id.to_string());
        if let Some(owner) = owner {
            out.insert(file.clone(), owner);
        }
    }
    out
}

/// Everything the property evaluators need for one target metric.
pub struct MetricContext<'a> {
    pub metric: MetricKind,
    pub universe: BTreeSet<FileKey>,
    pub high: BTreeSet<FileKey>,
    pub other: BTreeSet<FileKey>,
    pub low: BTreeSet<FileKey>,
    /// Metric value per universe file.
    pub values: BTreeMap<FileKey, f64>,
    /// Line count per universe file.
    pub line_counts: BTreeMap<FileKey, u32>,
    pub length_group_of: BTreeMap<FileKey, LengthGroup>,
    pub ownership: &'a BTreeMap<FileKey, String>,
    pub thresholds: Thresholds,
}

impl<'a> MetricContext<'a> {
    pub fn new(
        grouping: &QualityGrouping,
        values: BTreeMap<FileKey, f64>,
        line_counts: BTreeMap<FileKey, u32>,
        ownership: &'a BTreeMap<FileKey, String>,
        thresholds: Thresholds,
    ) -> Self {
        let length_group_of = length_groups(&line_counts, thresholds.quartile_fraction);
        MetricContext {
            metric: grouping.metric,
            universe: grouping.universe(),
            high: grouping.files_in(QualityGroup::High),
            other: grouping.files_in(QualityGroup::Other),
            low: grouping.files_in(QualityGroup::Low),
            values,
            line_counts,
            length_group_of,
            ownership,
            thresholds,
        }
    }

    fn confusion(&self, hits: &BTreeSet<FileKey>) -> ConfusionStats {
        stats::confusion(hits, &self.low, &self.universe, &self.values)
            .expect("hits and low group are subsets of the universe")
    }
}

/// Predictive power: positive precision lift against the low-quality group,
/// elevated metric mean among hits, and at least `min_files` hits.
pub fn eval_predictive(
    ctx: &MetricContext<'_>,
    hits: &BTreeSet<FileKey>,
) -> (PropertyResult, ConfusionStats) {
    let stats = ctx.confusion(hits);
    let support = hits.len();
    let lift = stats.precision_lift;
    let mean_ok = match (stats.mean_given_hit, stats.mean_overall) {
        (Some(h), Some(o)) => h > o,
        _ => false,
    };
    let support_ok = support >= ctx.thresholds.min_files;
    let lift_ok = lift.map_or(false, |l| l > 0.0);

    let reason = if support == 0 {
        Some("no hits in the metric universe".to_string())
    } else if !support_ok {
        Some(format!(
            "only {support} hits (floor {})",
            ctx.thresholds.min_files
        ))
    } else if !lift_ok {
        Some(match lift {
            Some(l) => format!("precision lift {l:.4} not positive"),
            None => "precision lift undefined".to_string(),
        })
    } else if !mean_ok {
        Some("metric mean over hits not above overall mean".to_string())
    } else {
        None
    };

    let result = PropertyResult {
        property: Property::Predictive,
        passed: lift_ok && mean_ok && support_ok,
        lift_or_stat: lift,
        support,
        detail: PropertyDetail::Predictive {
            mean_given_hit: stats.mean_given_hit,
            mean_overall: stats.mean_overall,
        },
        reason,
    };
    (result, stats)
}

/// Monotonicity: smell hit rate strictly increasing across high, other, low
/// quality groups.
pub fn eval_monotonicity(ctx: &MetricContext<'_>, hits: &BTreeSet<FileKey>) -> PropertyResult {
    let rate = |group: &BTreeSet<FileKey>| -> f64 {
        if group.is_empty() {
            return 0.0;
        }
        group.intersection(hits).count() as f64 / group.len() as f64
    };
    let high = rate(&ctx.high);
    let other = rate(&ctx.other);
    let low = rate(&ctx.low);
    let passed = high < other && other < low;
    PropertyResult {
        property: Property::Monotonicity,
        passed,
        lift_or_stat: Some(low - high),
        support: hits.len(),
        detail: PropertyDetail::GroupHitRates { high, other, low },
        reason: (!passed).then(|| {
            format!("hit rates not strictly increasing: {high:.4}, {other:.4}, {low:.4}")
        }),
    }
}

/// Co-change: positive precision lift of metric improvement given smell
/// improvement, with at least `min_files` opportunity pairs. `None` stats
/// mean the run had fewer than two years.
pub fn eval_cochange_property(
    ctx: &MetricContext<'_>,
    cochange: Option<&CochangeStats>,
) -> PropertyResult {
    let Some(stats) = cochange else {
        return PropertyResult {
            property: Property::Cochange,
            passed: false,
            lift_or_stat: None,
            support: 0,
            detail: PropertyDetail::None,
            reason: Some("skipped: co-change needs at least two years".to_string()),
        };
    };
    let support = stats.opportunities;
    let support_ok = support >= ctx.thresholds.min_files;
    let lift_ok = stats.lift.map_or(false, |l| l > 0.0);
    let reason = if support == 0 {
        Some("no improvement opportunities".to_string())
    } else if !support_ok {
        Some(format!(
            "only {support} opportunity pairs (floor {})",
            ctx.thresholds.min_files
        ))
    } else if !lift_ok {
        Some(match stats.lift {
            Some(l) => format!("co-change lift {l:.4} not positive"),
            None => "co-change lift undefined".to_string(),
        })
    } else {
        None
    };
    PropertyResult {
        property: Property::Cochange,
        passed: lift_ok && support_ok,
        lift_or_stat: stats.lift,
        support,
        detail: PropertyDetail::None,
        reason,
    }
}

/// Twins: restrict to (repo, owner) cells containing both smelly and clean
/// files, pool those cells (which weights each by its file count), and
/// require positive precision lift inside the pooled universe.
pub fn eval_twins(ctx: &MetricContext<'_>, hits: &BTreeSet<FileKey>) -> PropertyResult {
    let mut cells: BTreeMap<(&str, &str), Vec<&FileKey>> = BTreeMap::new();
    for file in &ctx.universe {
        if let Some(owner) = ctx.ownership.get(file) {
            cells
                .entry((file.repo_id.as_str(), owner.as_str()))
                .or_default()
                .push(file);
        }
    }
    let qualifying: Vec<&Vec<&FileKey>> = cells
        .values()
        .filter(|files| {
            let smelly = files.iter().filter(|f| hits.contains(**f)).count();
            smelly > 0 && smelly < files.len()
        })
        .collect();
    let support = qualifying.len();

    if support < ctx.thresholds.min_twin_cells {
        return PropertyResult {
            property: Property::Twins,
            passed: false,
            lift_or_stat: None,
            support,
            detail: PropertyDetail::None,
            reason: Some(format!(
                "only {support} twin cells with both smelly and clean files (floor {})",
                ctx.thresholds.min_twin_cells
            )),
        };
    }

    let pooled: BTreeSet<FileKey> = qualifying
        .iter()
        .flat_map(|files| files.iter().map(|f| (*f).clone()))
        .collect();
    let pooled_hits: BTreeSet<FileKey> = hits.intersection(&pooled).cloned().collect();
    let pooled_low: BTreeSet<FileKey> = ctx.low.intersection(&pooled).cloned().collect();
    let stats = stats::confusion(&pooled_hits, &pooled_low, &pooled, &ctx.values)
        .expect("pooled sets are consistent");

    let lift = stats.precision_lift;
    let passed = lift.map_or(false, |l| l > 0.0);
    PropertyResult {
        property: Property::Twins,
        passed,
        lift_or_stat: lift,
        support,
        detail: PropertyDetail::None,
        reason: (!passed).then(|| match lift {
            Some(l) => format!("twin lift {l:.4} not positive"),
            None => "twin lift undefined (no low-quality files among twins)".to_string(),
        }),
    }
}

/// Length control: positive precision lift inside each of the short, medium
/// and long groups, and Pearson correlation of the smell count with line
/// count below the cap. A smell absent from a length group leaves that
/// group's lift undefined and fails the property.
pub fn eval_length(
    ctx: &MetricContext<'_>,
    hits: &BTreeSet<FileKey>,
    counts: &BTreeMap<FileKey, u32>,
) -> PropertyResult {
    let group_lift = |group: LengthGroup| -> Option<f64> {
        let members: BTreeSet<FileKey> = ctx
            .universe
            .iter()
            .filter(|f| ctx.length_group_of.get(*f) == Some(&group))
            .cloned()
            .collect();
        if members.is_empty() {
            return None;
        }
        let g_hits: BTreeSet<FileKey> = hits.intersection(&members).cloned().collect();
        let g_low: BTreeSet<FileKey> = ctx.low.intersection(&members).cloned().collect();
        stats::confusion(&g_hits, &g_low, &members, &ctx.values)
            .ok()
            .and_then(|s| s.precision_lift)
    };

    let short = group_lift(LengthGroup::Short);
    let medium = group_lift(LengthGroup::Medium);
    let long = group_lift(LengthGroup::Long);

    // Series in universe (BTreeSet) order: deterministic.
    let xs: Vec<f64> = ctx
        .universe
        .iter()
        .map(|f| counts.get(f).copied().unwrap_or(0) as f64)
        .collect();
    let ys: Vec<f64> = ctx
        .universe
        .iter()
        .map(|f| ctx.line_counts.get(f).copied().unwrap_or(0) as f64)
        .collect();
    let correlation = stats::pearson(&xs, &ys).ok().flatten();

    // An undefined correlation (constant smell count) cannot demonstrate a
    // length proxy, so only a defined value at or above the cap fails.
    let corr_ok = correlation.map_or(true, |r| r < ctx.thresholds.length_corr_cap);
    let lifts_ok = [short, medium, long]
        .iter()
        .all(|l| l.map_or(false, |v| v > 0.0));
    let passed = lifts_ok && corr_ok;

    let min_lift = match (short, medium, long) {
        (Some(s), Some(m), Some(l)) => Some(s.min(m).min(l)),
        _ => None,
    };
    let reason = if !corr_ok {
        Some(format!(
            "line-count correlation {:.4} at or above cap {}",
            correlation.unwrap_or(f64::NAN),
            ctx.thresholds.length_corr_cap
        ))
    } else if !lifts_ok {
        let name = |l: &Option<f64>| match l {
            Some(v) => format!("{v:.4}"),
            None => "undefined".to_string(),
        };
        Some(format!(
            "length-group lifts not all positive: short {}, medium {}, long {}",
            name(&short),
            name(&medium),
            name(&long)
        ))
    } else {
        None
    };

    PropertyResult {
        property: Property::Length,
        passed,
        lift_or_stat: min_lift,
        support: hits.len(),
        detail: PropertyDetail::LengthGroups {
            short,
            medium,
            long,
            pearson: correlation,
        },
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Base,
    Robust,
    Almost,
}

fn lift_ok(lift: Option<f64>, regime: Regime, t: &Thresholds) -> bool {
    match (lift, regime) {
        (Some(l), Regime::Base) => l > 0.0,
        (Some(l), Regime::Robust) => l >= t.robust_lift,
        (Some(l), Regime::Almost) => l >= t.almost_lift,
        (None, _) => false,
    }
}

fn passes_at(result: &PropertyResult, regime: Regime, t: &Thresholds) -> bool {
    match result.property {
        Property::Predictive => {
            let mean_ok = matches!(
                result.detail,
                PropertyDetail::Predictive {
                    mean_given_hit: Some(h),
                    mean_overall: Some(o),
                } if h > o
            );
            lift_ok(result.lift_or_stat, regime, t) && mean_ok && result.support >= t.min_files
        }
        // Strict monotonicity has no lift to relax.
        Property::Monotonicity => result.passed,
        Property::Cochange => {
            lift_ok(result.lift_or_stat, regime, t) && result.support >= t.min_files
        }
        Property::Twins => {
            lift_ok(result.lift_or_stat, regime, t) && result.support >= t.min_twin_cells
        }
        Property::Length => match result.detail {
            PropertyDetail::LengthGroups {
                short,
                medium,
                long,
                pearson,
            } => {
                let corr_ok = pearson.map_or(true, |r| r < t.length_corr_cap);
                corr_ok
                    && lift_ok(short, regime, t)
                    && lift_ok(medium, regime, t)
                    && lift_ok(long, regime, t)
            }
            _ => false,
        },
    }
}

/// Verdict plus the count of base-threshold passes.
///
/// `Potential` requires all five at base; `Robust` additionally needs every
/// lift (predictive, co-change, twins, each length group) at or above the
/// robust threshold; `Almost` allows lifts down to the relaxed threshold.
pub fn classify_smell(results: &[PropertyResult], thresholds: &Thresholds) -> (Verdict, u8) {
    debug_assert_eq!(results.len(), 5);
    let held = results.iter().filter(|r| r.passed).count() as u8;
    let all_at = |regime: Regime| results.iter().all(|r| passes_at(r, regime, thresholds));
    let verdict = if all_at(Regime::Base) {
        if all_at(Regime::Robust) {
            Verdict::Robust
        } else {
            Verdict::Potential
        }
    } else if all_at(Regime::Almost) {
        Verdict::Almost
    } else {
        Verdict::Rejected
    };
    (verdict, held)
}

/// Runs the battery for every smell in the catalog against one metric.
/// Smells evaluate independently in parallel; output is in smell-name order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_metric_battery(
    ctx: &MetricContext<'_>,
    snapshot: &SnapshotYear,
    smell_catalog: &BTreeMap<String, String>,
    pairs: Option<&[YearPair]>,
    min_removal_opportunities: usize,
) -> Vec<SmellAssessment> {
    let smells: Vec<(&String, &String)> = smell_catalog.iter().collect();
    smells
        .par_iter()
        .map(|(name, group)| {
            let counts: BTreeMap<FileKey, u32> = ctx
                .universe
                .iter()
                .map(|f| (f.clone(), snapshot.smell_count(f, name)))
                .collect();
            let hits: BTreeSet<FileKey> = counts
                .iter()
                .filter(|(_, c)| **c > 0)
                .map(|(f, _)| f.clone())
                .collect();

            let cochange = pairs.map(|p| crate::temporal::cochange_stats(name, ctx.metric, p));
            let removal = pairs
                .map(|p| crate::temporal::removal_probability(name, p, min_removal_opportunities))
                .unwrap_or(RemovalStats {
                    opportunities: 0,
                    removals: 0,
                    probability: None,
                    reported: false,
                });

            let (predictive, confusion) = eval_predictive(ctx, &hits);
            let results = vec![
                predictive,
                eval_monotonicity(ctx, &hits),
                eval_cochange_property(ctx, cochange.as_ref()),
                eval_twins(ctx, &hits),
                eval_length(ctx, &hits, &counts),
            ];
            let twins_lift = results[3].lift_or_stat;
            let (verdict, properties_held) = classify_smell(&results, &ctx.thresholds);
            SmellAssessment {
                smell_name: (*name).clone(),
                smell_group: (*group).clone(),
                metric: ctx.metric,
                results,
                confusion,
                cochange,
                twins_lift,
                removal,
                verdict,
                properties_held,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::partition_quality;

    fn fk(i: usize) -> FileKey {
        FileKey::new("r", format!("src/f{i:04}.java"))
    }

    /// Universe of n files with value = index / n (ascending), line counts
    /// from `lines_of`, every file owned per the ownership map.
    fn context_with_lines(
        n: usize,
        thresholds: Thresholds,
        ownership: &BTreeMap<FileKey, String>,
        lines_of: impl Fn(usize) -> u32,
    ) -> MetricContext<'_> {
        let values: Vec<(FileKey, f64)> = (0..n).map(|i| (fk(i), i as f64 / n as f64)).collect();
        let grouping = partition_quality(&values, MetricKind::Ccp, 0.25).unwrap();
        let line_counts: BTreeMap<FileKey, u32> = (0..n).map(|i| (fk(i), lines_of(i))).collect();
        MetricContext::new(
            &grouping,
            values.into_iter().collect(),
            line_counts,
            ownership,
            thresholds,
        )
    }

    /// Line counts rise with the metric value (length and quality aligned).
    fn context(
        n: usize,
        thresholds: Thresholds,
        ownership: &BTreeMap<FileKey, String>,
    ) -> MetricContext<'_> {
        context_with_lines(n, thresholds, ownership, |i| 10 + i as u32)
    }

    fn round_robin_owners(n: usize, owners: usize) -> BTreeMap<FileKey, String> {
        (0..n)
            .map(|i| (fk(i), format!("dev{:02}", i % owners)))
            .collect()
    }

    fn low_thresholds() -> Thresholds {
        Thresholds {
            min_files: 20,
            ..Thresholds::default()
        }
    }

    #[test]
    fn predictive_constructed_fixture_passes() {
        // 1000 files: hits are 175 upper-other files plus 75 low files, so
        // precision 75/250 = 0.30, base 0.25, lift 0.2; the hit mean is well
        // above the overall mean; 250 hits clears the 200-file floor.
        let ownership = round_robin_owners(1000, 10);
        let ctx = context(1000, Thresholds::default(), &ownership);
        let hits: BTreeSet<FileKey> = (575..750).chain(925..1000).map(fk).collect();
        let (result, stats) = eval_predictive(&ctx, &hits);
        assert_eq!(stats.precision, Some(0.30));
        assert!((result.lift_or_stat.unwrap() - 0.2).abs() < 1e-12);
        assert!(result.passed, "reason: {:?}", result.reason);
    }

    #[test]
    fn predictive_fails_on_support_floor() {
        // 150 hits with perfect precision still fail the 200-file floor.
        let ownership = round_robin_owners(1000, 10);
        let ctx = context(1000, Thresholds::default(), &ownership);
        let hits: BTreeSet<FileKey> = (850..1000).map(fk).collect();
        let (result, stats) = eval_predictive(&ctx, &hits);
        assert_eq!(stats.precision, Some(1.0));
        assert!(!result.passed);
        assert!(result.reason.as_ref().unwrap().contains("150 hits"));
    }

    #[test]
    fn predictive_fails_without_hits() {
        let ownership = round_robin_owners(100, 5);
        let ctx = context(100, low_thresholds(), &ownership);
        let (result, _) = eval_predictive(&ctx, &BTreeSet::new());
        assert!(!result.passed);
        assert_eq!(result.lift_or_stat, None);
    }

    #[test]
    fn monotonicity_strict_chain() {
        // 400 files -> groups of 100/200/100. Hit rates 0.10 / 0.15 / 0.22.
        let ownership = round_robin_owners(400, 8);
        let ctx = context(400, low_thresholds(), &ownership);
        let mut hits = BTreeSet::new();
        hits.extend((0..10).map(fk)); // 10 of 100 high
        hits.extend((100..130).map(fk)); // 30 of 200 other
        hits.extend((300..322).map(fk)); // 22 of 100 low
        let result = eval_monotonicity(&ctx, &hits);
        assert!(result.passed);
        match result.detail {
            PropertyDetail::GroupHitRates { high, other, low } => {
                assert_eq!((high, other, low), (0.10, 0.15, 0.22));
            }
            _ => panic!("wrong detail"),
        }
    }

    #[test]
    fn monotonicity_rejects_equal_rates() {
        // Rates 0.10 / 0.10 / 0.22: not strictly increasing.
        let ownership = round_robin_owners(400, 8);
        let ctx = context(400, low_thresholds(), &ownership);
        let mut hits = BTreeSet::new();
        hits.extend((0..10).map(fk));
        hits.extend((100..120).map(fk)); // 20 of 200 = 0.10
        hits.extend((300..322).map(fk));
        let result = eval_monotonicity(&ctx, &hits);
        assert!(!result.passed);
    }

    #[test]
    fn cochange_skipped_without_pairs() {
        let ownership = round_robin_owners(100, 5);
        let ctx = context(100, low_thresholds(), &ownership);
        let result = eval_cochange_property(&ctx, None);
        assert!(!result.passed);
        assert!(result.reason.as_ref().unwrap().contains("two years"));
    }

    #[test]
    fn cochange_threshold_applies_to_opportunities() {
        let ownership = round_robin_owners(100, 5);
        let ctx = context(100, low_thresholds(), &ownership);
        let good = CochangeStats {
            opportunities: 300,
            smell_improvements: 60,
            base_rate: Some(0.5),
            precision: Some(0.6),
            lift: Some(0.2),
        };
        assert!(eval_cochange_property(&ctx, Some(&good)).passed);
        let thin = CochangeStats {
            opportunities: 10,
            ..good.clone()
        };
        let result = eval_cochange_property(&ctx, Some(&thin));
        assert!(!result.passed);
        assert!(result.reason.as_ref().unwrap().contains("10 opportunity"));
        let negative = CochangeStats {
            lift: Some(-0.05),
            ..good
        };
        assert!(!eval_cochange_property(&ctx, Some(&negative)).passed);
    }

    #[test]
    fn twins_perfect_separation_passes() {
        // 40 files, 20 owners, one smelly and one clean file each. Smelly
        // files carry the highest metric values, so the low group is all
        // smelly: within pooled cells precision 0.5 vs base 0.25.
        let n = 40;
        let ownership: BTreeMap<FileKey, String> = (0..n)
            .map(|i| (fk(i), format!("dev{:02}", i % 20)))
            .collect();
        let ctx = context(n, low_thresholds(), &ownership);
        let hits: BTreeSet<FileKey> = (20..40).map(fk).collect();
        let result = eval_twins(&ctx, &hits);
        assert!(result.passed, "reason: {:?}", result.reason);
        assert_eq!(result.support, 20);
        assert!(result.lift_or_stat.unwrap() > 0.9);
    }

    #[test]
    fn twins_single_cell_is_undefined() {
        // Only dev00 owns both a smelly and a clean file; every other owner's
        // files are all clean, so exactly one qualifying cell exists.
        let n = 40;
        let ownership: BTreeMap<FileKey, String> = (0..n)
            .map(|i| (fk(i), format!("dev{:02}", i / 2)))
            .collect();
        let ctx = context(n, low_thresholds(), &ownership);
        let hits: BTreeSet<FileKey> = [fk(0)].into_iter().collect();
        let result = eval_twins(&ctx, &hits);
        assert!(!result.passed);
        assert_eq!(result.support, 1);
        assert_eq!(result.lift_or_stat, None);
    }

    #[test]
    fn twins_author_aligned_smell_has_no_cells() {
        // The smell follows ownership exactly: every cell is all-smelly or
        // all-clean, so no cell qualifies.
        let n = 40;
        let ownership: BTreeMap<FileKey, String> = (0..n)
            .map(|i| (fk(i), format!("dev{:02}", i / 4)))
            .collect();
        let ctx = context(n, low_thresholds(), &ownership);
        let hits: BTreeSet<FileKey> = (0..n)
            .filter(|i| (i / 4) % 2 == 0)
            .map(fk)
            .collect();
        let result = eval_twins(&ctx, &hits);
        assert!(!result.passed);
        assert_eq!(result.support, 0);
    }

    #[test]
    fn length_proxy_smell_fails() {
        // Smell present exactly in the long group: the short and medium
        // lifts are undefined, and the indicator correlates with length.
        let n = 400;
        let ownership = round_robin_owners(n, 8);
        let ctx = context(n, low_thresholds(), &ownership);
        let counts: BTreeMap<FileKey, u32> = (0..n)
            .map(|i| {
                let file = fk(i);
                let c = if ctx.length_group_of[&file] == LengthGroup::Long {
                    1
                } else {
                    0
                };
                (file, c)
            })
            .collect();
        let hits: BTreeSet<FileKey> = counts
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(f, _)| f.clone())
            .collect();
        let result = eval_length(&ctx, &hits, &counts);
        assert!(!result.passed);
        match result.detail {
            PropertyDetail::LengthGroups { short, pearson, .. } => {
                assert_eq!(short, None);
                assert!(pearson.unwrap() > 0.5);
            }
            _ => panic!("wrong detail"),
        }
    }

    #[test]
    fn length_uniform_smell_passes() {
        // A smell spread evenly across lengths and concentrated in low
        // quality: all group lifts positive, near-zero correlation. Line
        // counts are scrambled relative to quality so every length group
        // contains low-quality files.
        let n = 400;
        let ownership = round_robin_owners(n, 8);
        let ctx = context_with_lines(n, low_thresholds(), &ownership, |i| {
            10 + (i as u32 * 7) % 400
        });
        // Hit every 4th file plus the entire low group.
        let counts: BTreeMap<FileKey, u32> = (0..n)
            .map(|i| (fk(i), if i % 4 == 0 || i >= 300 { 1 } else { 0 }))
            .collect();
        let hits: BTreeSet<FileKey> = counts
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(f, _)| f.clone())
            .collect();
        let result = eval_length(&ctx, &hits, &counts);
        assert!(result.passed, "reason: {:?}", result.reason);
    }

    fn mk_result(property: Property, lift: f64, support: usize) -> PropertyResult {
        let detail = match property {
            Property::Predictive => PropertyDetail::Predictive {
                mean_given_hit: Some(1.0),
                mean_overall: Some(0.5),
            },
            Property::Monotonicity => PropertyDetail::GroupHitRates {
                high: 0.1,
                other: 0.2,
                low: 0.3,
            },
            Property::Length => PropertyDetail::LengthGroups {
                short: Some(lift),
                medium: Some(lift),
                long: Some(lift),
                pearson: Some(0.1),
            },
            _ => PropertyDetail::None,
        };
        PropertyResult {
            property,
            passed: if property == Property::Monotonicity {
                true
            } else {
                lift > 0.0
            },
            lift_or_stat: Some(lift),
            support,
            detail,
            reason: None,
        }
    }

    fn all_results(lift: f64) -> Vec<PropertyResult> {
        vec![
            mk_result(Property::Predictive, lift, 500),
            mk_result(Property::Monotonicity, 0.2, 500),
            mk_result(Property::Cochange, lift, 500),
            mk_result(Property::Twins, lift, 50),
            mk_result(Property::Length, lift, 500),
        ]
    }

    #[test]
    fn classify_all_lifts_at_fifteen_percent_is_robust() {
        let (verdict, held) = classify_smell(&all_results(0.15), &Thresholds::default());
        assert_eq!(verdict, Verdict::Robust);
        assert_eq!(held, 5);
    }

    #[test]
    fn classify_small_positive_lifts_is_potential() {
        let (verdict, held) = classify_smell(&all_results(0.05), &Thresholds::default());
        assert_eq!(verdict, Verdict::Potential);
        assert_eq!(held, 5);
    }

    #[test]
    fn classify_small_negative_lifts_is_almost() {
        let (verdict, held) = classify_smell(&all_results(-0.05), &Thresholds::default());
        assert_eq!(verdict, Verdict::Almost);
        assert_eq!(held, 1); // only monotonicity holds at base
    }

    #[test]
    fn classify_length_failure_is_rejected_with_four_held() {
        let mut results = all_results(0.15);
        results[4] = PropertyResult {
            passed: false,
            lift_or_stat: Some(-0.3),
            detail: PropertyDetail::LengthGroups {
                short: Some(-0.3),
                medium: Some(0.2),
                long: Some(0.2),
                pearson: Some(0.1),
            },
            reason: Some("short lift negative".into()),
            ..results[4].clone()
        };
        let (verdict, held) = classify_smell(&results, &Thresholds::default());
        assert_eq!(verdict, Verdict::Rejected);
        assert_eq!(held, 4);
    }

    #[test]
    fn verdict_regimes_are_nested() {
        // Sweeping a shared lift across all properties: verdicts downgrade
        // monotonically, never skipping the containment order.
        let t = Thresholds::default();
        let mut last_rank = 0;
        for lift in [0.5, 0.15, 0.10, 0.05, 0.001, -0.05, -0.10, -0.2] {
            let (verdict, _) = classify_smell(&all_results(lift), &t);
            let rank = match verdict {
                Verdict::Robust => 0,
                Verdict::Potential => 1,
                Verdict::Almost => 2,
                Verdict::Rejected => 3,
            };
            assert!(rank >= last_rank, "lift {lift} gave {verdict:?}");
            last_rank = rank;
        }
    }

    #[test]
    fn classify_verdict_almost_excludes_mean_clause_failures() {
        // Even in the relaxed regime the predictive mean clause must hold.
        let mut results = all_results(-0.05);
        results[0].detail = PropertyDetail::Predictive {
            mean_given_hit: Some(0.4),
            mean_overall: Some(0.5),
        };
        let (verdict, _) = classify_smell(&results, &Thresholds::default());
        assert_eq!(verdict, Verdict::Rejected);
    }

    #[test]
    fn ownership_prefers_commit_count_then_first_commit() {
        use crate::ingest::CommitRecord;
        let mk = |sha: &str, author: &str, ts: i64| CommitRecord {
            repo_id: "r".into(),
            commit_id: sha.into(),
            author_id: author.into(),
            timestamp: ts,
            message: String::new(),
            files: vec!["f".into()],
            is_corrective: false,
        };
        let base = 1_546_300_800;
        let mut commits = vec![
            mk("c1", "alice", base + 100),
            mk("c2", "alice", base + 200),
            mk("c3", "bob", base + 50),
            mk("c4", "bob", base + 300),
            mk("c5", "carol", base + 400),
        ];
        commits.sort_by(|a, b| (a.timestamp, a.commit_id.clone()).cmp(&(b.timestamp, b.commit_id.clone())));
        let index = CommitIndex::new(&commits);
        let file = FileKey::new("r", "f");
        let files: BTreeSet<FileKey> = [file.clone()].into_iter().collect();
        let ownership = compute_ownership(&index, &files, 2019);
        // alice and bob both have 2 commits; bob's first commit is earlier.
        assert_eq!(ownership[&file], "bob");
    }
}
