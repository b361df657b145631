//! End-to-end orchestration: load inputs, run the metric pass, the battery,
//! the temporal analyses and the group model, and hand the result to the
//! report writer.
//!
//! Stage outputs are immutable values passed between stages; given identical
//! inputs and configuration the emitted bundle is byte-identical.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::battery::{self, MetricContext, SmellAssessment};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::{self, CommitRecord, FileKey, ReportFormat, SnapshotYear};
use crate::metrics::{
    compute_file_year_metrics, partition_quality, CommitIndex, FileYearMetrics, MetricKind,
    QualityGrouping,
};
use crate::model::{self, GroupModelResult};
use crate::report;
use crate::temporal::{self, RemovalStats, YearPair};

/// Commits plus per-year snapshots, ready for analysis.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub commits: Vec<CommitRecord>,
    pub snapshots: BTreeMap<i32, SnapshotYear>,
    /// Input files consumed, as `(path, sha256)`, for the manifest.
    pub input_digests: Vec<(String, String)>,
}

/// Everything the analysis produced, before any file is written.
#[derive(Debug)]
pub struct AnalysisResult {
    pub battery_year: i32,
    pub model_year: i32,
    pub eligible_by_year: BTreeMap<i32, BTreeSet<FileKey>>,
    pub metrics_by_year: BTreeMap<i32, Vec<FileYearMetrics>>,
    /// Battery-year grouping per evaluated metric.
    pub groupings: BTreeMap<MetricKind, QualityGrouping>,
    /// Metrics requested but not evaluable, with the reason.
    pub skipped_metrics: BTreeMap<MetricKind, String>,
    /// Battery output, grouped by metric in configuration order.
    pub assessments: Vec<SmellAssessment>,
    pub removal: BTreeMap<String, RemovalStats>,
    pub stability: BTreeMap<String, Option<f64>>,
    pub group_model: BTreeMap<MetricKind, GroupModelResult>,
    /// smell -> CheckStyle category (or "Unknown").
    pub smell_groups: BTreeMap<String, String>,
    pub notices: Vec<String>,
}

/// Summary returned by [`run`].
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub assessments: usize,
    pub potential: usize,
    pub notices: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Repo ids may contain `/`; file names encode it as `__`.
fn repo_from_stem(stem: &str) -> String {
    stem.replace("__", "/")
}

/// Loads the commit stream and every `smells/<year>/<repo>.{xml,csv}` plus
/// `lines/<year>/<repo>.csv` pair for the configured years. A repo with a
/// line-count sidecar but no smell report loads as smell-free.
pub fn load_corpus(config: &RunConfig) -> Result<LoadedCorpus> {
    let mut digests = Vec::new();

    let commit_bytes =
        fs::read(&config.commits).map_err(|e| Error::io(&config.commits, e))?;
    digests.push((
        config.commits.display().to_string(),
        sha256_hex(&commit_bytes),
    ));
    let commits = ingest::load_commits(BufReader::new(commit_bytes.as_slice()))?;

    let mut snapshots = BTreeMap::new();
    for &year in &config.years {
        let smell_dir = config.smells_dir.join(year.to_string());
        let lines_dir = config.lines_dir.join(year.to_string());
        if !smell_dir.is_dir() && !lines_dir.is_dir() {
            continue; // missing year: the analysis will notice
        }

        // stem -> smell report path, and the sidecar stems.
        let mut report_paths: BTreeMap<String, PathBuf> = BTreeMap::new();
        if smell_dir.is_dir() {
            for entry in fs::read_dir(&smell_dir).map_err(|e| Error::io(&smell_dir, e))? {
                let path = entry.map_err(|e| Error::io(&smell_dir, e))?.path();
                let (Some(stem), Some(ext)) = (
                    path.file_stem().and_then(|s| s.to_str()),
                    path.extension().and_then(|s| s.to_str()),
                ) else {
                    continue;
                };
                if matches!(ext, "xml" | "csv") {
                    report_paths.insert(stem.to_string(), path.clone());
                }
            }
        }
        let mut line_paths: BTreeMap<String, PathBuf> = BTreeMap::new();
        if lines_dir.is_dir() {
            for entry in fs::read_dir(&lines_dir).map_err(|e| Error::io(&lines_dir, e))? {
                let path = entry.map_err(|e| Error::io(&lines_dir, e))?.path();
                if path.extension().and_then(|s| s.to_str()) == Some("csv") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        line_paths.insert(stem.to_string(), path.clone());
                    }
                }
            }
        }

        let stems: BTreeSet<&String> = report_paths.keys().chain(line_paths.keys()).collect();
        let mut snapshot_year = SnapshotYear::new(year);
        for stem in stems {
            let repo = repo_from_stem(stem);
            let lines_path = line_paths.get(stem).ok_or_else(|| {
                Error::Config(format!(
                    "smell report for {repo} year {year} has no line-count sidecar in {}",
                    lines_dir.display()
                ))
            })?;
            let line_bytes = fs::read(lines_path).map_err(|e| Error::io(lines_path, e))?;
            digests.push((lines_path.display().to_string(), sha256_hex(&line_bytes)));
            let line_counts = ingest::load_line_counts(BufReader::new(line_bytes.as_slice()))?;

            let snapshot = match report_paths.get(stem) {
                Some(report_path) => {
                    let format = match report_path.extension().and_then(|s| s.to_str()) {
                        Some("xml") => ReportFormat::CheckstyleXml,
                        _ => ReportFormat::GenericCsv,
                    };
                    let bytes = fs::read(report_path).map_err(|e| Error::io(report_path, e))?;
                    digests.push((report_path.display().to_string(), sha256_hex(&bytes)));
                    ingest::load_smell_report(BufReader::new(bytes.as_slice()), format, &repo, year)?
                }
                None => ingest::SmellSnapshot {
                    repo_id: repo.clone(),
                    snapshot_year: year,
                    ..Default::default()
                },
            };
            snapshot_year.insert(snapshot.with_line_counts(line_counts)?)?;
        }
        if !snapshot_year.is_empty() {
            snapshots.insert(year, snapshot_year);
        }
    }

    Ok(LoadedCorpus {
        commits,
        snapshots,
        input_digests: digests,
    })
}

/// Derived seed for one year's random-control pass, so the negative control
/// re-rolls every year instead of being constant across snapshots.
fn year_seed(seed: u64, year: i32) -> u64 {
    let mut z = seed ^ (year as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the full analysis over an already-loaded corpus. The commit records
/// are classified in place.
pub fn analyze(corpus: &mut LoadedCorpus, config: &RunConfig) -> Result<AnalysisResult> {
    config.validate()?;
    let mut notices = Vec::new();
    let battery_year = config.battery_year();

    let battery_snapshot = corpus.snapshots.get(&battery_year).ok_or_else(|| {
        Error::EmptyEligible(battery_year)
    })?;

    for &year in &config.years {
        if !corpus.snapshots.contains_key(&year) {
            notices.push(format!(
                "year {year}: no snapshot found; temporal analyses touching it are skipped"
            ));
        }
    }

    config.classifier()?.label_commits(&mut corpus.commits);
    let commits = &corpus.commits;
    let index = CommitIndex::new(commits);

    // Per-year eligibility and metric tables.
    let mut eligible_by_year = BTreeMap::new();
    let mut metrics_by_year = BTreeMap::new();
    for (&year, snapshot) in &corpus.snapshots {
        let eligible =
            ingest::select_eligible_files(commits, snapshot, year, config.min_commits, &config.test_pattern)?;
        let rows = compute_file_year_metrics(
            &index,
            snapshot,
            &eligible,
            year,
            year_seed(config.seed, year),
        );
        eligible_by_year.insert(year, eligible);
        metrics_by_year.insert(year, rows);
    }

    let battery_eligible = &eligible_by_year[&battery_year];
    if battery_eligible.is_empty() {
        return Err(Error::EmptyEligible(battery_year));
    }
    let battery_rows = &metrics_by_year[&battery_year];

    // Quality groupings for the battery year.
    let mut groupings = BTreeMap::new();
    let mut skipped_metrics = BTreeMap::new();
    for &metric in &config.metrics {
        let values: Vec<(FileKey, f64)> = battery_rows
            .iter()
            .filter_map(|m| m.value(metric).map(|v| (m.file.clone(), v)))
            .collect();
        if values.len() < 4 {
            let reason = format!(
                "only {} files with a defined {metric} value (need 4)",
                values.len()
            );
            notices.push(format!("metric {metric}: skipped; {reason}"));
            skipped_metrics.insert(metric, reason);
            continue;
        }
        groupings.insert(
            metric,
            partition_quality(&values, metric, config.quartile_fraction)?,
        );
    }

    // Temporal pairs over consecutive configured years with snapshots.
    let mut pairs: Vec<YearPair> = Vec::new();
    let empty_rows: Vec<FileYearMetrics> = Vec::new();
    let empty_set: BTreeSet<FileKey> = BTreeSet::new();
    for window in config.years.windows(2) {
        let (from, to) = (window[0], window[1]);
        if to != from + 1 {
            continue;
        }
        let (Some(snap_from), Some(snap_to)) =
            (corpus.snapshots.get(&from), corpus.snapshots.get(&to))
        else {
            continue;
        };
        pairs.extend(temporal::build_year_pairs(
            snap_from,
            snap_to,
            metrics_by_year.get(&from).unwrap_or(&empty_rows),
            metrics_by_year.get(&to).unwrap_or(&empty_rows),
            eligible_by_year.get(&from).unwrap_or(&empty_set),
            eligible_by_year.get(&to).unwrap_or(&empty_set),
        ));
    }
    let pairs_opt: Option<&[YearPair]> = if pairs.is_empty() {
        notices.push(
            "co-change and removal skipped: no consecutive year pair with snapshots".to_string(),
        );
        None
    } else {
        Some(&pairs)
    };

    // Smell catalog across all loaded years.
    let mut smell_groups: BTreeMap<String, String> = BTreeMap::new();
    for snapshot in corpus.snapshots.values() {
        for smell in snapshot.smells() {
            smell_groups.entry(smell).or_insert_with(|| "Unknown".into());
        }
        for (smell, group) in snapshot.smell_groups() {
            smell_groups.insert(smell, group);
        }
    }

    // Battery per metric.
    let ownership = battery::compute_ownership(&index, battery_eligible, battery_year);
    let value_of: BTreeMap<&FileKey, &FileYearMetrics> =
        battery_rows.iter().map(|m| (&m.file, m)).collect();
    let mut assessments = Vec::new();
    for &metric in &config.metrics {
        let Some(grouping) = groupings.get(&metric) else {
            continue;
        };
        let universe = grouping.universe();
        let values: BTreeMap<FileKey, f64> = universe
            .iter()
            .map(|f| (f.clone(), value_of[f].value(metric).expect("grouped value")))
            .collect();
        let line_counts: BTreeMap<FileKey, u32> = universe
            .iter()
            .map(|f| (f.clone(), value_of[f].line_count))
            .collect();
        let ctx = MetricContext::new(grouping, values, line_counts, &ownership, config.thresholds());
        assessments.extend(battery::evaluate_metric_battery(
            &ctx,
            battery_snapshot,
            &smell_groups,
            pairs_opt,
            config.min_removal_opportunities,
        ));
    }

    // Removal and stability per smell, independent of metric.
    let mut removal = BTreeMap::new();
    let mut stability = BTreeMap::new();
    for smell in smell_groups.keys() {
        removal.insert(
            smell.clone(),
            temporal::removal_probability(smell, &pairs, config.min_removal_opportunities),
        );
        stability.insert(smell.clone(), temporal::stability(smell, &pairs));
    }

    // Smell-free group model on the model year.
    let model_year = config.effective_model_year();
    let mut group_model = BTreeMap::new();
    match corpus.snapshots.get(&model_year) {
        None => notices.push(format!(
            "group model skipped: no snapshot for model year {model_year}"
        )),
        Some(model_snapshot) => {
            let model_rows = &metrics_by_year[&model_year];
            let model_values: BTreeMap<&FileKey, &FileYearMetrics> =
                model_rows.iter().map(|m| (&m.file, m)).collect();
            for &metric in &config.metrics {
                let values: Vec<(FileKey, f64)> = model_rows
                    .iter()
                    .filter_map(|m| m.value(metric).map(|v| (m.file.clone(), v)))
                    .collect();
                if values.len() < 4 {
                    notices.push(format!(
                        "group model for {metric}: skipped; only {} defined values in {model_year}",
                        values.len()
                    ));
                    continue;
                }
                let grouping = partition_quality(&values, metric, config.quartile_fraction)?;
                let potential: BTreeSet<String> = assessments
                    .iter()
                    .filter(|a| a.metric == metric && a.verdict.is_potential())
                    .map(|a| a.smell_name.clone())
                    .collect();
                let line_counts: BTreeMap<FileKey, u32> = grouping
                    .universe()
                    .iter()
                    .map(|f| (f.clone(), model_values[f].line_count))
                    .collect();
                group_model.insert(
                    metric,
                    model::smell_free_analysis(
                        &potential,
                        model_snapshot,
                        &grouping,
                        &line_counts,
                        config.quartile_fraction,
                        model_year,
                    ),
                );
            }
        }
    }

    Ok(AnalysisResult {
        battery_year,
        model_year,
        eligible_by_year,
        metrics_by_year,
        groupings,
        skipped_metrics,
        assessments,
        removal,
        stability,
        group_model,
        smell_groups,
        notices,
    })
}

/// Loads, analyzes and writes the report bundle. Running twice on the same
/// inputs and configuration produces byte-identical output files.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let mut corpus = load_corpus(config)?;
    let result = analyze(&mut corpus, config)?;
    report::write_bundle(&result, config, &corpus.input_digests)?;
    Ok(RunSummary {
        out_dir: config.out_dir.clone(),
        assessments: result.assessments.len(),
        potential: result
            .assessments
            .iter()
            .filter(|a| a.verdict.is_potential())
            .count(),
        notices: result.notices.clone(),
    })
}
