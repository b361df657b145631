//! Per-file-year process metrics and quality grouping.
//!
//! Four target metrics plus a negative control, all oriented so that a lower
//! value is better:
//!
//! * `ccp`: corrective commit probability: bug-fix commits / all commits
//!   touching the file in the year.
//! * `coupling`: mean number of files in the file's commits.
//! * `duration_hours`: mean gross commit duration: time since the same
//!   author's immediately previous commit in the repo, counted only when both
//!   commits fall on the same UTC date (large inactivity gaps would otherwise
//!   read as long tasks).
//! * `detection_days`: mean time from a file's previous touch to a
//!   corrective commit touching it, a lower bound on bug-detection time.
//! * `random_control`: seeded uniform integer in [1, 100] per file; any
//!   property a random metric "passes" estimates the noise floor.
//!
//! Duration and detection can be undefined for a file (no same-day
//! predecessor, no corrective commit with a prior touch); such files drop out
//! of that metric's grouping only.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::HashMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{CommitRecord, FileKey};
use crate::ingest::SnapshotYear;

/// The analysis' target metrics (and negative control).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Ccp,
    Coupling,
    Duration,
    Detection,
    Random,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Ccp,
        MetricKind::Coupling,
        MetricKind::Duration,
        MetricKind::Detection,
        MetricKind::Random,
    ];

    /// Display name used in report tables.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Ccp => "CCP",
            MetricKind::Coupling => "Coupling",
            MetricKind::Duration => "Duration",
            MetricKind::Detection => "Detection",
            MetricKind::Random => "Random",
        }
    }

    /// Lowercase identifier used in file names and CLI flags.
    pub fn slug(self) -> &'static str {
        match self {
            MetricKind::Ccp => "ccp",
            MetricKind::Coupling => "coupling",
            MetricKind::Duration => "duration",
            MetricKind::Detection => "detection",
            MetricKind::Random => "random",
        }
    }

    pub fn from_slug(s: &str) -> Option<MetricKind> {
        MetricKind::ALL.into_iter().find(|m| m.slug() == s)
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl serde::Serialize for MetricKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.slug())
    }
}

impl<'de> serde::Deserialize<'de> for MetricKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MetricKind::from_slug(&s).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "unknown metric {s:?} (expected one of ccp, coupling, duration, detection, random)"
            ))
        })
    }
}

/// Metric values for one eligible file-year.
#[derive(Debug, Clone, PartialEq)]
pub struct FileYearMetrics {
    pub file: FileKey,
    pub year: i32,
    pub commit_count: u32,
    pub ccp: f64,
    pub coupling: f64,
    pub duration_hours: Option<f64>,
    pub detection_days: Option<f64>,
    pub random_control: u32,
    pub line_count: u32,
}

impl FileYearMetrics {
    /// The file's value for a metric; `None` when undefined.
    pub fn value(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Ccp => Some(self.ccp),
            MetricKind::Coupling => Some(self.coupling),
            MetricKind::Duration => self.duration_hours,
            MetricKind::Detection => self.detection_days,
            MetricKind::Random => Some(self.random_control as f64),
        }
    }
}

/// Commit lookup structures shared by the per-file metric computations.
/// Built once from the sorted commit slice; all lists preserve the global
/// `(repo, timestamp, sha)` order.
pub struct CommitIndex<'a> {
    commits: &'a [CommitRecord],
    /// repo -> author -> commit indices, ascending.
    by_author: HashMap<&'a str, HashMap<&'a str, Vec<usize>>>,
    /// repo -> path -> indices of commits touching it, ascending.
    by_file: HashMap<&'a str, HashMap<&'a str, Vec<usize>>>,
}

impl<'a> CommitIndex<'a> {
    pub fn new(commits: &'a [CommitRecord]) -> Self {
        let mut by_author: HashMap<&str, HashMap<&str, Vec<usize>>> = HashMap::new();
        let mut by_file: HashMap<&str, HashMap<&str, Vec<usize>>> = HashMap::new();
        for (idx, c) in commits.iter().enumerate() {
            by_author
                .entry(c.repo_id.as_str())
                .or_default()
                .entry(c.author_id.as_str())
                .or_default()
                .push(idx);
            for f in &c.files {
                by_file
                    .entry(c.repo_id.as_str())
                    .or_default()
                    .entry(f.as_str())
                    .or_default()
                    .push(idx);
            }
        }
        CommitIndex {
            commits,
            by_author,
            by_file,
        }
    }

    pub fn commits(&self) -> &'a [CommitRecord] {
        self.commits
    }

    fn file_idxs(&self, file: &FileKey) -> &[usize] {
        self.by_file
            .get(file.repo_id.as_str())
            .and_then(|m| m.get(file.file_path.as_str()))
            .map_or(&[], Vec::as_slice)
    }

    /// Commits touching `file` during the UTC calendar `year`, in order.
    pub fn file_commits_in_year(
        &self,
        file: &FileKey,
        year: i32,
    ) -> impl Iterator<Item = &'a CommitRecord> + '_ {
        self.file_idxs(file)
            .iter()
            .map(|&i| &self.commits[i])
            .filter(move |c| c.year() == year)
    }

    /// The same author's immediately previous commit in the repo, if any.
    fn author_predecessor(&self, idx: usize) -> Option<&'a CommitRecord> {
        let c = &self.commits[idx];
        let list = self
            .by_author
            .get(c.repo_id.as_str())?
            .get(c.author_id.as_str())?;
        let pos = list.partition_point(|&j| j < idx);
        pos.checked_sub(1).map(|p| &self.commits[list[p]])
    }

    /// The previous commit touching the same file (any author, any year).
    fn file_predecessor(&self, file: &FileKey, idx: usize) -> Option<&'a CommitRecord> {
        let list = self.file_idxs(file);
        let pos = list.partition_point(|&j| j < idx);
        pos.checked_sub(1).map(|p| &self.commits[list[p]])
    }
}

/// Corrective commits / all commits touching the file in the year. `None`
/// only when the file has no commits that year (cannot happen for eligible
/// files).
pub fn compute_ccp(file: &FileKey, year: i32, index: &CommitIndex<'_>) -> Option<f64> {
    let mut total = 0u32;
    let mut corrective = 0u32;
    for c in index.file_commits_in_year(file, year) {
        total += 1;
        if c.is_corrective {
            corrective += 1;
        }
    }
    (total > 0).then(|| corrective as f64 / total as f64)
}

/// Mean number of files per commit over the file's commits in the year.
pub fn compute_coupling(file: &FileKey, year: i32, index: &CommitIndex<'_>) -> Option<f64> {
    let sizes: Vec<usize> = index
        .file_commits_in_year(file, year)
        .map(|c| c.files.len())
        .collect();
    (!sizes.is_empty()).then(|| sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
}

/// Mean gross duration in hours over the file's commits that have a same-day
/// author predecessor. Predecessor search spans the whole repo history; the
/// same-UTC-date filter is applied afterwards.
pub fn compute_duration(file: &FileKey, year: i32, index: &CommitIndex<'_>) -> Option<f64> {
    let mut gaps = Vec::new();
    let idxs: Vec<usize> = index
        .file_idxs(file)
        .iter()
        .copied()
        .filter(|&i| index.commits[i].year() == year)
        .collect();
    for idx in idxs {
        let c = &index.commits[idx];
        if let Some(prev) = index.author_predecessor(idx) {
            if prev.day() == c.day() {
                gaps.push((c.timestamp - prev.timestamp) as f64 / 3_600.0);
            }
        }
    }
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Mean days from the file's previous touch (any commit, any year) to each
/// corrective commit touching it in the year.
pub fn compute_detection(file: &FileKey, year: i32, index: &CommitIndex<'_>) -> Option<f64> {
    let mut gaps = Vec::new();
    let idxs: Vec<usize> = index
        .file_idxs(file)
        .iter()
        .copied()
        .filter(|&i| {
            let c = &index.commits[i];
            c.year() == year && c.is_corrective
        })
        .collect();
    for idx in idxs {
        let c = &index.commits[idx];
        if let Some(prev) = index.file_predecessor(file, idx) {
            gaps.push((c.timestamp - prev.timestamp) as f64 / 86_400.0);
        }
    }
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Deterministic uniform value in [1, 100] for the negative control, keyed by
/// `(seed, repo, path)`.
pub fn assign_random_control(file: &FileKey, seed: u64) -> u32 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(file.repo_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(file.file_path.as_bytes());
    let digest = hasher.finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    1 + (word % 100) as u32
}

/// Computes the full metric row for every eligible file. Files are processed
/// independently in parallel and reduced in key order, so the result is
/// byte-identical across runs.
pub fn compute_file_year_metrics(
    index: &CommitIndex<'_>,
    snapshot: &SnapshotYear,
    eligible: &BTreeSet<FileKey>,
    year: i32,
    seed: u64,
) -> Vec<FileYearMetrics> {
    let files: Vec<&FileKey> = eligible.iter().collect();
    files
        .par_iter()
        .map(|file| {
            let commit_count = index.file_commits_in_year(file, year).count() as u32;
            FileYearMetrics {
                file: (*file).clone(),
                year,
                commit_count,
                ccp: compute_ccp(file, year, index).unwrap_or(0.0),
                coupling: compute_coupling(file, year, index).unwrap_or(1.0),
                duration_hours: compute_duration(file, year, index),
                detection_days: compute_detection(file, year, index),
                random_control: assign_random_control(file, seed),
                line_count: snapshot.line_count(file).unwrap_or(0),
            }
        })
        .collect()
}

/// One of the three quality groups. Lower metric value is better, so `High`
/// holds the lowest quartile of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityGroup {
    High,
    Other,
    Low,
}

impl QualityGroup {
    pub fn name(self) -> &'static str {
        match self {
            QualityGroup::High => "high",
            QualityGroup::Other => "other",
            QualityGroup::Low => "low",
        }
    }
}

/// Assignment of eligible files into high / other / low quality groups for
/// one metric, with the quantile boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityGrouping {
    pub metric: MetricKind,
    pub assignment: BTreeMap<FileKey, QualityGroup>,
    /// Nearest-rank percentile values at the group fractions (25th and 75th
    /// for the default quarter split).
    pub cut_values: (f64, f64),
}

impl QualityGrouping {
    pub fn group_of(&self, file: &FileKey) -> Option<QualityGroup> {
        self.assignment.get(file).copied()
    }

    pub fn files_in(&self, group: QualityGroup) -> BTreeSet<FileKey> {
        self.assignment
            .iter()
            .filter(|(_, g)| **g == group)
            .map(|(f, _)| f.clone())
            .collect()
    }

    pub fn universe(&self) -> BTreeSet<FileKey> {
        self.assignment.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Nearest-rank percentile of an ascending-sorted slice: the value at rank
/// `ceil(q * n)` (1-based).
pub(crate) fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Splits files into quality groups: ascending stable sort by `(value, repo,
/// path)`, first `floor(n * fraction)` files are `High`, the same number at
/// the end are `Low`, the remainder `Other`. The tie-break makes the
/// assignment deterministic and permutation-invariant.
pub fn partition_quality(
    values: &[(FileKey, f64)],
    metric: MetricKind,
    fraction: f64,
) -> Result<QualityGrouping> {
    let n = values.len();
    if n < 4 {
        return Err(Error::TooFewFiles(n));
    }
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::Config(format!(
            "quartile fraction {fraction} outside (0, 0.5]"
        )));
    }
    if let Some((file, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite {metric} value {v} for {file}"
        )));
    }

    let mut sorted: Vec<&(FileKey, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("finite values")
            .then_with(|| a.0.cmp(&b.0))
    });

    let k = (n as f64 * fraction).floor() as usize;
    let mut assignment = BTreeMap::new();
    for (pos, (file, _)) in sorted.iter().enumerate() {
        let group = if pos < k {
            QualityGroup::High
        } else if pos >= n - k {
            QualityGroup::Low
        } else {
            QualityGroup::Other
        };
        assignment.insert(file.clone(), group);
    }

    let sorted_values: Vec<f64> = sorted.iter().map(|(_, v)| *v).collect();
    let cut_values = (
        nearest_rank(&sorted_values, fraction),
        nearest_rank(&sorted_values, 1.0 - fraction),
    );

    Ok(QualityGrouping {
        metric,
        assignment,
        cut_values,
    })
}
