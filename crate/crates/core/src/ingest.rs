//! Corpus loading: normalized commit streams, smell reports, line-count
//! sidecars, and the eligibility filter.
//!
//! Commits arrive as one JSON record per line with fields `repo`, `sha`,
//! `author`, `ts` (integer UTC seconds), `msg`, and `files`. Smell reports
//! are either CheckStyle XML or a generic `file,smell,count` CSV; line counts
//! come from a `file,lines` CSV sidecar. Loading is deterministic: the
//! returned commit set is sorted by `(repo, timestamp, sha)` regardless of
//! input order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::HashSet;
use std::io::BufRead;

use chrono::{DateTime, Datelike};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies a file within a corpus: repository id plus repo-relative path
/// with normalized separators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileKey {
    pub repo_id: String,
    pub file_path: String,
}

impl FileKey {
    pub fn new(repo_id: impl Into<String>, file_path: impl Into<String>) -> Self {
        FileKey {
            repo_id: repo_id.into(),
            file_path: normalize_path(&file_path.into()),
        }
    }
}

impl std::fmt::Display for FileKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.repo_id, self.file_path)
    }
}

/// One commit from the normalized export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    #[serde(rename = "repo")]
    pub repo_id: String,
    #[serde(rename = "sha")]
    pub commit_id: String,
    #[serde(rename = "author")]
    pub author_id: String,
    /// Seconds since the Unix epoch, UTC. Always positive.
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(rename = "msg")]
    pub message: String,
    /// Repo-relative paths touched by the commit. Never empty.
    pub files: Vec<String>,
    /// Filled by the commit classifier, not part of the wire format.
    #[serde(skip)]
    pub is_corrective: bool,
}

impl CommitRecord {
    /// UTC calendar year of the commit.
    pub fn year(&self) -> i32 {
        DateTime::from_timestamp(self.timestamp, 0)
            .map(|dt| dt.year())
            .unwrap_or(0)
    }

    /// UTC day index (days since epoch), used for same-date comparisons.
    pub fn day(&self) -> i64 {
        self.timestamp.div_euclid(86_400)
    }

    pub fn touches(&self, file: &FileKey) -> bool {
        self.repo_id == file.repo_id && self.files.iter().any(|f| f == &file.file_path)
    }
}

/// Per-(repo, year) smell occurrence counts and file line counts, taken from
/// a static-analysis run over the January-1st code version of that year.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellSnapshot {
    pub repo_id: String,
    pub snapshot_year: i32,
    /// file path -> smell name -> occurrence count. Files present in the
    /// line-count sidecar but free of smells appear with an empty map.
    pub entries: BTreeMap<String, BTreeMap<String, u32>>,
    /// file path -> line count. Presence here defines which files were
    /// analyzable that year.
    pub line_counts: BTreeMap<String, u32>,
    /// smell name -> CheckStyle category, when the report format carries one.
    pub smell_groups: BTreeMap<String, String>,
}

impl SmellSnapshot {
    /// Attaches the line-count sidecar, validating that every file carrying a
    /// smell entry has a line count, and adding smell-free files with empty
    /// entry maps.
    pub fn with_line_counts(mut self, line_counts: BTreeMap<String, u32>) -> Result<Self> {
        for file in self.entries.keys() {
            if !line_counts.contains_key(file) {
                return Err(Error::InvalidInput(format!(
                    "smell report for {} year {} mentions {} which has no line count",
                    self.repo_id, self.snapshot_year, file
                )));
            }
        }
        for file in line_counts.keys() {
            self.entries.entry(file.clone()).or_default();
        }
        self.line_counts = line_counts;
        Ok(self)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.line_counts.contains_key(path)
    }

    pub fn smell_count(&self, path: &str, smell: &str) -> u32 {
        self.entries
            .get(path)
            .and_then(|m| m.get(smell))
            .copied()
            .unwrap_or(0)
    }
}

/// All repositories' snapshots for one year, the unit the analysis works on.
#[derive(Debug, Clone, Default)]
pub struct SnapshotYear {
    pub year: i32,
    by_repo: BTreeMap<String, SmellSnapshot>,
}

impl SnapshotYear {
    pub fn new(year: i32) -> Self {
        SnapshotYear {
            year,
            by_repo: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, snapshot: SmellSnapshot) -> Result<()> {
        if snapshot.snapshot_year != self.year {
            return Err(Error::InvalidInput(format!(
                "snapshot year {} does not match collection year {}",
                snapshot.snapshot_year, self.year
            )));
        }
        if self.by_repo.contains_key(&snapshot.repo_id) {
            return Err(Error::InvalidInput(format!(
                "duplicate snapshot for repo {} year {}",
                snapshot.repo_id, self.year
            )));
        }
        self.by_repo.insert(snapshot.repo_id.clone(), snapshot);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.by_repo.is_empty()
    }

    pub fn repos(&self) -> impl Iterator<Item = &SmellSnapshot> {
        self.by_repo.values()
    }

    pub fn contains(&self, file: &FileKey) -> bool {
        self.by_repo
            .get(&file.repo_id)
            .map_or(false, |s| s.contains(&file.file_path))
    }

    pub fn line_count(&self, file: &FileKey) -> Option<u32> {
        self.by_repo
            .get(&file.repo_id)
            .and_then(|s| s.line_counts.get(&file.file_path))
            .copied()
    }

    /// Occurrence count for `smell` in `file`; 0 when absent.
    pub fn smell_count(&self, file: &FileKey, smell: &str) -> u32 {
        self.by_repo
            .get(&file.repo_id)
            .map_or(0, |s| s.smell_count(&file.file_path, smell))
    }

    /// The file's full smell-count map, when the file is in the snapshot.
    pub fn file_smells(&self, file: &FileKey) -> Option<&BTreeMap<String, u32>> {
        self.by_repo
            .get(&file.repo_id)
            .and_then(|s| s.entries.get(&file.file_path))
    }

    /// Every file analyzable this year.
    pub fn files(&self) -> impl Iterator<Item = FileKey> + '_ {
        self.by_repo.values().flat_map(|s| {
            s.line_counts.keys().map(|p| FileKey {
                repo_id: s.repo_id.clone(),
                file_path: p.clone(),
            })
        })
    }

    /// Names of all smells occurring anywhere this year.
    pub fn smells(&self) -> BTreeSet<String> {
        self.by_repo
            .values()
            .flat_map(|s| s.entries.values().flat_map(|m| m.keys().cloned()))
            .collect()
    }

    /// smell -> category over all repos; later repos do not override earlier.
    pub fn smell_groups(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for snap in self.by_repo.values() {
            for (smell, group) in &snap.smell_groups {
                out.entry(smell.clone()).or_insert_with(|| group.clone());
            }
        }
        out
    }
}

/// Smell report wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    CheckstyleXml,
    GenericCsv,
}

fn normalize_path(path: &str) -> String {
    path.replace('\\', "/")
}

/// Loads a line-delimited commit stream. Rejects malformed lines (naming the
/// line number) and duplicate `(repo, sha)` pairs (naming the id); the result
/// is sorted by `(repo, timestamp, sha)`, so shuffled input yields an
/// identical corpus.
pub fn load_commits<R: BufRead>(reader: R) -> Result<Vec<CommitRecord>> {
    let mut commits = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedCommit {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: CommitRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedCommit {
                line: line_no,
                reason: e.to_string(),
            })?;
        if record.timestamp <= 0 {
            return Err(Error::MalformedCommit {
                line: line_no,
                reason: format!("timestamp {} is not positive", record.timestamp),
            });
        }
        if record.files.is_empty() {
            return Err(Error::MalformedCommit {
                line: line_no,
                reason: "commit touches no files".into(),
            });
        }
        record.files = record.files.iter().map(|f| normalize_path(f)).collect();
        if !seen.insert((record.repo_id.clone(), record.commit_id.clone())) {
            return Err(Error::DuplicateCommit {
                repo_id: record.repo_id,
                commit_id: record.commit_id,
            });
        }
        commits.push(record);
    }

    commits.sort_by(|a, b| {
        (&a.repo_id, a.timestamp, &a.commit_id).cmp(&(&b.repo_id, b.timestamp, &b.commit_id))
    });
    Ok(commits)
}

/// Parses a smell report into a snapshot (entries only; line counts are
/// attached separately via [`SmellSnapshot::with_line_counts`]).
pub fn load_smell_report<R: BufRead>(
    reader: R,
    format: ReportFormat,
    repo_id: &str,
    snapshot_year: i32,
) -> Result<SmellSnapshot> {
    match format {
        ReportFormat::CheckstyleXml => parse_checkstyle_xml(reader, repo_id, snapshot_year),
        ReportFormat::GenericCsv => parse_generic_csv(reader, repo_id, snapshot_year),
    }
}

/// Extracts the smell name from a CheckStyle `source` attribute: the last
/// dotted segment minus a trailing `Check`.
pub fn smell_name_from_source(source: &str) -> String {
    let last = source.rsplit('.').next().unwrap_or(source);
    last.strip_suffix("Check").unwrap_or(last).to_string()
}

/// Maps the CheckStyle package segment before the check name to the category
/// labels used in reports.
fn checkstyle_group(source: &str) -> String {
    let mut segments = source.rsplit('.');
    segments.next();
    let package = segments.next().unwrap_or("");
    match package {
        "annotation" => "Annotation",
        "blocks" => "Block",
        "coding" => "Coding",
        "design" => "Class Design",
        "header" => "Header",
        "imports" => "Import",
        "indentation" => "Indentation",
        "javadoc" => "JavaDoc Comments",
        "metrics" => "Metrics",
        "modifier" => "Modifiers",
        "naming" => "Naming Conventions",
        "regexp" => "Regexp",
        "sizes" => "Size Violation",
        "whitespace" => "Whitespace",
        _ => "Misc",
    }
    .to_string()
}

fn parse_checkstyle_xml<R: BufRead>(
    reader: R,
    repo_id: &str,
    snapshot_year: i32,
) -> Result<SmellSnapshot> {
    let mut xml = Reader::from_reader(reader);
    xml.config_mut().trim_text(true);

    let mut snapshot = SmellSnapshot {
        repo_id: repo_id.to_string(),
        snapshot_year,
        ..Default::default()
    };
    let mut current_file: Option<String> = None;
    let mut buf = Vec::new();

    let report_err = |offset: u64, reason: String| Error::MalformedReport {
        offset: offset as usize,
        reason,
    };

    loop {
        let event = xml
            .read_event_into(&mut buf)
            .map_err(|e| report_err(xml.buffer_position(), e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => match e.name().as_ref() {
                b"file" => {
                    let mut name = None;
                    for attr in e.attributes() {
                        let attr =
                            attr.map_err(|e| report_err(xml.buffer_position(), e.to_string()))?;
                        if attr.key.as_ref() == b"name" {
                            let value = attr
                                .unescape_value()
                                .map_err(|e| report_err(xml.buffer_position(), e.to_string()))?;
                            name = Some(normalize_path(&value));
                        }
                    }
                    let name = name.ok_or_else(|| {
                        report_err(xml.buffer_position(), "<file> without name attribute".into())
                    })?;
                    snapshot.entries.entry(name.clone()).or_default();
                    current_file = Some(name);
                }
                b"error" => {
                    let file = current_file.clone().ok_or_else(|| {
                        report_err(xml.buffer_position(), "<error> outside of <file>".into())
                    })?;
                    let mut source = None;
                    for attr in e.attributes() {
                        let attr =
                            attr.map_err(|e| report_err(xml.buffer_position(), e.to_string()))?;
                        if attr.key.as_ref() == b"source" {
                            source = Some(attr.unescape_value().map_err(|e| {
                                report_err(xml.buffer_position(), e.to_string())
                            })?.into_owned());
                        }
                    }
                    let source = source.ok_or_else(|| {
                        report_err(
                            xml.buffer_position(),
                            "<error> without source attribute".into(),
                        )
                    })?;
                    let smell = smell_name_from_source(&source);
                    snapshot
                        .smell_groups
                        .entry(smell.clone())
                        .or_insert_with(|| checkstyle_group(&source));
                    *snapshot
                        .entries
                        .entry(file)
                        .or_default()
                        .entry(smell)
                        .or_insert(0) += 1;
                }
                _ => {}
            },
            Event::End(ref e) if e.name().as_ref() == b"file" => current_file = None,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(snapshot)
}

fn parse_generic_csv<R: BufRead>(
    reader: R,
    repo_id: &str,
    snapshot_year: i32,
) -> Result<SmellSnapshot> {
    let mut snapshot = SmellSnapshot {
        repo_id: repo_id.to_string(),
        snapshot_year,
        ..Default::default()
    };
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);

    for (idx, record) in csv.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::MalformedReport {
            offset: line,
            reason: format!("line {line}: {e}"),
        })?;
        if idx == 0 && record.get(0) == Some("file") {
            continue; // optional header row
        }
        if record.len() != 3 {
            return Err(Error::MalformedReport {
                offset: line,
                reason: format!("line {line}: expected file,smell,count"),
            });
        }
        let file = normalize_path(record.get(0).unwrap());
        let smell = record.get(1).unwrap().to_string();
        let count: i64 = record.get(2).unwrap().trim().parse().map_err(|e| {
            Error::MalformedReport {
                offset: line,
                reason: format!("line {line}: bad count: {e}"),
            }
        })?;
        if count < 0 {
            return Err(Error::MalformedReport {
                offset: line,
                reason: format!("line {line}: negative count {count}"),
            });
        }
        *snapshot
            .entries
            .entry(file)
            .or_default()
            .entry(smell)
            .or_insert(0) += count as u32;
    }
    Ok(snapshot)
}

/// Loads a `file,lines` sidecar CSV.
pub fn load_line_counts<R: BufRead>(reader: R) -> Result<BTreeMap<String, u32>> {
    let mut out = BTreeMap::new();
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    for (idx, record) in csv.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::MalformedReport {
            offset: line,
            reason: format!("line {line}: {e}"),
        })?;
        if idx == 0 && record.get(0) == Some("file") {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::MalformedReport {
                offset: line,
                reason: format!("line {line}: expected file,lines"),
            });
        }
        let file = normalize_path(record.get(0).unwrap());
        let lines: u32 = record.get(1).unwrap().trim().parse().map_err(|e| {
            Error::MalformedReport {
                offset: line,
                reason: format!("line {line}: bad line count: {e}"),
            }
        })?;
        out.insert(file, lines);
    }
    Ok(out)
}

/// Files eligible for analysis in `year`: at least `min_commits` commits in
/// the UTC calendar year, a path that does not contain `test_pattern`
/// (case-insensitively), and presence in that year's snapshot (the file was
/// analyzable).
pub fn select_eligible_files(
    commits: &[CommitRecord],
    snapshot: &SnapshotYear,
    year: i32,
    min_commits: u32,
    test_pattern: &str,
) -> Result<BTreeSet<FileKey>> {
    if min_commits < 1 {
        return Err(Error::InvalidInput("min_commits must be at least 1".into()));
    }
    let pattern = test_pattern.to_lowercase();
    let mut counts: BTreeMap<FileKey, u32> = BTreeMap::new();
    for c in commits {
        if c.year() != year {
            continue;
        }
        for f in &c.files {
            let key = FileKey {
                repo_id: c.repo_id.clone(),
                file_path: f.clone(),
            };
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    Ok(counts
        .into_iter()
        .filter(|(file, n)| {
            *n >= min_commits
                && !(!pattern.is_empty() && file.file_path.to_lowercase().contains(&pattern))
                && snapshot.contains(file)
        })
        .map(|(file, _)| file)
        .collect())
}
