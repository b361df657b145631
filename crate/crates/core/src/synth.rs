//! Synthetic corpus generation with known causal structure.
//!
//! The generator plants four kinds of smells so every battery property has a
//! ground-truth target:
//!
//! * [`SmellKind::Causal`]: presence adds `effect_delta` to the file's
//!   per-commit bug probability. Should come out `Potential`.
//! * [`SmellKind::ConfoundLen`]: present exactly in files above a line-count
//!   threshold, with a count that grows with length. Long files are also
//!   buggier (the `length_bug_slope` confound), so the smell looks predictive
//!   but must fail the length control.
//! * [`SmellKind::DevStyle`]: a per-author habit. Flagged authors write
//!   buggier code and all of their files carry the smell, so it predicts
//!   quality across the corpus but shows nothing within any single author's
//!   files; the twins control must reject it.
//! * [`SmellKind::Random`]: independent noise; rejected by some property.
//!
//! Output uses the exact wire formats the loaders consume (commit JSONL,
//! CheckStyle XML, line-count CSV), and everything derives deterministically
//! from the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::battery::Property;
use crate::error::{Error, Result};
use crate::ingest::{self, CommitRecord, ReportFormat, SnapshotYear};

/// What a planted smell does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmellKind {
    Causal,
    ConfoundLen,
    DevStyle,
    Random,
}

/// One planted smell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmellSpec {
    pub name: String,
    pub kind: SmellKind,
    /// Fraction of files carrying the smell (for `DevStyle`: fraction of
    /// authors with the habit).
    pub prevalence: f64,
    /// Added per-commit bug probability (`Causal`), or the flagged author's
    /// bug-rate boost (`DevStyle`).
    pub effect_delta: f64,
    /// Year-over-year probability that a present smell stays present.
    pub persistence: f64,
}

/// Parameters of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_repos: usize,
    pub files_per_repo: usize,
    /// Consecutive snapshot years, oldest first.
    pub years: Vec<i32>,
    pub authors_per_repo: usize,
    /// Poisson mean of commits per file-year.
    pub commits_per_file: f64,
    /// Fraction of file-years floored to `min_commits` commits (the rest are
    /// capped below it, so this is the eligible fraction).
    pub eligible_fraction: f64,
    pub min_commits: u32,
    /// Per-commit bug probability for an unaffected file.
    pub base_bug_rate: f64,
    /// Extra bug probability for the longest files (scaled by length rank),
    /// creating the length-to-quality confound the length control screens.
    pub length_bug_slope: f64,
    pub smell_specs: Vec<SmellSpec>,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_repos: 10,
            files_per_repo: 200,
            years: vec![2017, 2018, 2019],
            authors_per_repo: 8,
            commits_per_file: 12.0,
            eligible_fraction: 0.9,
            min_commits: 10,
            base_bug_rate: 0.1,
            length_bug_slope: 0.06,
            smell_specs: vec![
                SmellSpec {
                    name: "BugProne".into(),
                    kind: SmellKind::Causal,
                    prevalence: 0.3,
                    effect_delta: 0.15,
                    persistence: 0.85,
                },
                SmellSpec {
                    name: "LengthProxy".into(),
                    kind: SmellKind::ConfoundLen,
                    prevalence: 0.25,
                    effect_delta: 0.0,
                    persistence: 1.0,
                },
                SmellSpec {
                    name: "AuthorHabit".into(),
                    kind: SmellKind::DevStyle,
                    prevalence: 0.3,
                    effect_delta: 0.12,
                    persistence: 1.0,
                },
                SmellSpec {
                    name: "NoiseMarker".into(),
                    kind: SmellKind::Random,
                    prevalence: 0.3,
                    effect_delta: 0.0,
                    persistence: 0.85,
                },
            ],
            seed: 1,
        }
    }
}

impl CorpusSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_repos == 0 || self.files_per_repo == 0 || self.authors_per_repo == 0 {
            return err("repos, files and authors must all be positive".into());
        }
        if self.years.is_empty() {
            return err("at least one year required".into());
        }
        if self.years.windows(2).any(|w| w[1] != w[0] + 1) {
            return err(format!("years must be consecutive: {:?}", self.years));
        }
        if !(self.commits_per_file > 0.0) {
            return err("commits_per_file must be positive".into());
        }
        for p in [
            self.eligible_fraction,
            self.base_bug_rate,
            self.length_bug_slope,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("probability {p} outside [0, 1]"));
            }
        }
        for s in &self.smell_specs {
            if !(s.prevalence > 0.0 && s.prevalence < 1.0) {
                return err(format!(
                    "smell {}: prevalence {} outside (0, 1)",
                    s.name, s.prevalence
                ));
            }
            if !(0.0..=1.0).contains(&s.persistence) {
                return err(format!("smell {}: persistence outside [0, 1]", s.name));
            }
            if s.effect_delta < 0.0 || s.effect_delta > 1.0 {
                return err(format!("smell {}: effect_delta outside [0, 1]", s.name));
            }
        }
        Ok(())
    }
}

/// What the battery is expected to conclude for a planted smell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedOutcome {
    Potential,
    Rejected,
}

/// Ground truth for one planted smell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthEntry {
    pub name: String,
    pub kind: SmellKind,
    pub expected: ExpectedOutcome,
    /// The property designed to reject the smell, when there is one.
    pub expected_failure: Option<Property>,
}

/// Expected battery outcome per smell. A `Causal` smell with a zero effect
/// carries no signal and downgrades to random semantics.
pub fn expected_verdicts(spec: &CorpusSpec) -> Vec<GroundTruthEntry> {
    spec.smell_specs
        .iter()
        .map(|s| {
            let (expected, expected_failure) = match s.kind {
                SmellKind::Causal if s.effect_delta > 0.0 => (ExpectedOutcome::Potential, None),
                SmellKind::Causal => (ExpectedOutcome::Rejected, None),
                SmellKind::ConfoundLen => (ExpectedOutcome::Rejected, Some(Property::Length)),
                SmellKind::DevStyle => (ExpectedOutcome::Rejected, Some(Property::Twins)),
                SmellKind::Random => (ExpectedOutcome::Rejected, None),
            };
            GroundTruthEntry {
                name: s.name.clone(),
                kind: s.kind,
                expected,
                expected_failure,
            }
        })
        .collect()
}

/// A generated corpus in the loaders' wire formats.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub commits_jsonl: String,
    /// year -> repo -> CheckStyle XML.
    pub snapshots_xml: BTreeMap<i32, BTreeMap<String, String>>,
    /// year -> repo -> line-count CSV.
    pub line_csvs: BTreeMap<i32, BTreeMap<String, String>>,
    pub ground_truth_json: String,
    pub truth: Vec<GroundTruthEntry>,
}

impl GeneratedCorpus {
    /// Writes `commits.jsonl`, `smells/<year>/<repo>.xml`,
    /// `lines/<year>/<repo>.csv` and `ground_truth.json` under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        let write = |path: &Path, content: &str| -> Result<()> {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(path, content).map_err(|e| Error::io(path, e))
        };
        write(&dir.join("commits.jsonl"), &self.commits_jsonl)?;
        for (year, repos) in &self.snapshots_xml {
            for (repo, xml) in repos {
                write(&dir.join(format!("smells/{year}/{repo}.xml")), xml)?;
            }
        }
        for (year, repos) in &self.line_csvs {
            for (repo, csv) in repos {
                write(&dir.join(format!("lines/{year}/{repo}.csv")), csv)?;
            }
        }
        write(&dir.join("ground_truth.json"), &self.ground_truth_json)
    }

    /// Parses the generated artifacts back through the regular loaders, so
    /// anything the loaders would reject fails here too.
    pub fn parse(&self) -> Result<(Vec<CommitRecord>, BTreeMap<i32, SnapshotYear>)> {
        let commits = ingest::load_commits(self.commits_jsonl.as_bytes())?;
        let mut snapshots = BTreeMap::new();
        for (year, repos) in &self.snapshots_xml {
            let mut snap_year = SnapshotYear::new(*year);
            for (repo, xml) in repos {
                let lines = self
                    .line_csvs
                    .get(year)
                    .and_then(|m| m.get(repo))
                    .map(|csv| ingest::load_line_counts(csv.as_bytes()))
                    .transpose()?
                    .unwrap_or_default();
                let snapshot =
                    ingest::load_smell_report(xml.as_bytes(), ReportFormat::CheckstyleXml, repo, *year)?
                        .with_line_counts(lines)?;
                snap_year.insert(snapshot)?;
            }
            snapshots.insert(*year, snap_year);
        }
        Ok((commits, snapshots))
    }
}

const CORRECTIVE_TEMPLATES: &[&str] = &[
    "Fix NPE in {}",
    "Fix race condition in {}",
    "Patch memory leak in {}",
    "Repair broken state handling in {}",
    "Fix crash when {} reloads",
    "Hotfix for {} outage",
    "Fix regression in {} ordering",
    "Handle error path in {}",
];

const NEUTRAL_TEMPLATES: &[&str] = &[
    "Add caching to {}",
    "Refactor {} internals",
    "Update documentation for {}",
    "Extend {} configuration",
    "Rename helpers in {}",
    "Improve logging in {}",
    "Tidy imports in {}",
    "Add metrics hooks to {}",
];

const AUX_PATHS: &[&str] = &[
    "build/gen/bindings.xml",
    "build/gen/catalog.xml",
    "ci/pipeline.yaml",
    "docs/changelog.md",
    "docs/notes.md",
    "gradle/deps.lock",
];

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn year_start(year: i32) -> i64 {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("valid year")
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

fn pseudo_sha(repo: &str, counter: u64) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(repo.as_bytes());
    hasher.update(counter.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(40);
    for byte in digest.iter().take(20) {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

/// CheckStyle-style source attribute for a planted smell, grouped by kind.
fn smell_source(spec: &SmellSpec) -> String {
    let package = match spec.kind {
        SmellKind::Causal => "coding",
        SmellKind::ConfoundLen => "sizes",
        SmellKind::DevStyle => "naming",
        SmellKind::Random => "whitespace",
    };
    format!("synthetic.checks.{package}.{}Check", spec.name)
}

struct FileState {
    path: String,
    owner: usize,
    base_lines: u32,
    /// Base-line-count rank in [0, 1] across the corpus.
    length_rank: f64,
    lines: u32,
    alive: bool,
    /// Current count per smell spec index (0 = absent).
    smell_counts: Vec<u32>,
    /// Stable per-file count used by DevStyle smells.
    habit_count: u32,
}

/// Generates a corpus. Deterministic for a given spec: per-repo RNG streams
/// are derived from the seed, so repos could be generated in parallel with
/// the same result.
pub fn generate(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;

    let n_total = spec.n_repos * spec.files_per_repo;
    let lines_dist = LogNormal::new(150f64.ln(), 0.8).expect("valid lognormal");

    // Phase 1: per-file static state, then corpus-wide length thresholds.
    let mut repos: Vec<Vec<FileState>> = Vec::with_capacity(spec.n_repos);
    let mut owner_flags: Vec<Vec<Vec<bool>>> = Vec::with_capacity(spec.n_repos);
    for r in 0..spec.n_repos {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, r as u64));
        let flags: Vec<Vec<bool>> = spec
            .smell_specs
            .iter()
            .map(|s| {
                (0..spec.authors_per_repo)
                    .map(|_| s.kind == SmellKind::DevStyle && rng.random_bool(s.prevalence))
                    .collect()
            })
            .collect();
        owner_flags.push(flags);

        let files = (0..spec.files_per_repo)
            .map(|f| {
                let base_lines = (lines_dist.sample(&mut rng).round() as u32).clamp(10, 20_000);
                FileState {
                    path: format!("src/module{:02}/File{f:03}.java", f / 25),
                    owner: rng.random_range(0..spec.authors_per_repo),
                    base_lines,
                    length_rank: 0.0,
                    lines: base_lines,
                    alive: true,
                    smell_counts: vec![0; spec.smell_specs.len()],
                    habit_count: 1 + rng.random_range(0..3),
                }
            })
            .collect();
        repos.push(files);
    }

    let mut all_lines: Vec<u32> = repos
        .iter()
        .flat_map(|files| files.iter().map(|f| f.base_lines))
        .collect();
    all_lines.sort_unstable();
    let rank_of = |lines: u32| -> f64 {
        let below = all_lines.partition_point(|&l| l < lines);
        below as f64 / (n_total.max(2) - 1) as f64
    };
    // Present-iff-long thresholds at the (1 - prevalence) quantile.
    let confound_threshold: Vec<u32> = spec
        .smell_specs
        .iter()
        .map(|s| {
            let rank = (((1.0 - s.prevalence) * n_total as f64).ceil() as usize).clamp(1, n_total);
            all_lines[rank - 1]
        })
        .collect();
    for files in &mut repos {
        for f in files.iter_mut() {
            f.length_rank = rank_of(f.base_lines);
        }
    }

    // Phase 2: walk the years, evolving smells and emitting artifacts.
    let mut commits_jsonl = String::new();
    let mut snapshots_xml: BTreeMap<i32, BTreeMap<String, String>> = BTreeMap::new();
    let mut line_csvs: BTreeMap<i32, BTreeMap<String, String>> = BTreeMap::new();

    for r in 0..spec.n_repos {
        let repo_id = format!("r{r:02}");
        let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, 0x1000 + r as u64));
        let poisson = Poisson::new(spec.commits_per_file).expect("positive mean");
        let mut commit_counter = 0u64;

        for (year_idx, &year) in spec.years.iter().enumerate() {
            let start = year_start(year);
            let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<checkstyle version=\"8.36\">\n");
            let mut lines_csv = String::from("file,lines\n");

            for f_idx in 0..spec.files_per_repo {
                // Split borrows: smell evolution needs the file mutably.
                let file = &mut repos[r][f_idx];
                if !file.alive {
                    continue;
                }
                if year_idx > 0 {
                    if rng.random_bool(0.02) {
                        file.alive = false;
                        continue;
                    }
                    let drift = 1.0 + rng.random_range(-0.05..0.05);
                    file.lines = ((file.lines as f64 * drift).round() as u32).max(10);
                }

                // Evolve each smell's presence and count.
                for (s_idx, smell) in spec.smell_specs.iter().enumerate() {
                    let count = match smell.kind {
                        SmellKind::Causal | SmellKind::Random => {
                            let present = file.smell_counts[s_idx] > 0;
                            if year_idx == 0 {
                                if rng.random_bool(smell.prevalence) {
                                    1 + rng.random_range(0..3)
                                } else {
                                    0
                                }
                            } else if present {
                                if rng.random_bool(smell.persistence) {
                                    // Mostly stable counts; occasional drift.
                                    let c = file.smell_counts[s_idx];
                                    if rng.random_bool(0.9) {
                                        c
                                    } else if rng.random_bool(0.5) {
                                        c + 1
                                    } else {
                                        c.saturating_sub(1).max(1)
                                    }
                                } else {
                                    0
                                }
                            } else {
                                // Stationary marginal prevalence.
                                let gain = (smell.prevalence * (1.0 - smell.persistence)
                                    / (1.0 - smell.prevalence))
                                    .clamp(0.0, 1.0);
                                if rng.random_bool(gain) {
                                    1 + rng.random_range(0..3)
                                } else {
                                    0
                                }
                            }
                        }
                        SmellKind::ConfoundLen => {
                            let threshold = confound_threshold[s_idx];
                            if file.lines >= threshold {
                                1 + (file.lines - threshold) / 50
                            } else {
                                0
                            }
                        }
                        SmellKind::DevStyle => {
                            if owner_flags[r][s_idx][file.owner] {
                                file.habit_count
                            } else {
                                0
                            }
                        }
                    };
                    file.smell_counts[s_idx] = count;
                }

                // Bug probability for this file-year.
                let mut bug_rate = spec.base_bug_rate + spec.length_bug_slope * file.length_rank;
                for (s_idx, smell) in spec.smell_specs.iter().enumerate() {
                    match smell.kind {
                        SmellKind::Causal if file.smell_counts[s_idx] > 0 => {
                            bug_rate += smell.effect_delta;
                        }
                        SmellKind::DevStyle if owner_flags[r][s_idx][file.owner] => {
                            bug_rate += smell.effect_delta;
                        }
                        _ => {}
                    }
                }
                let bug_rate = bug_rate.clamp(0.0, 1.0);

                // Commits for this file-year.
                let raw = poisson.sample(&mut rng) as u32;
                let n_commits = if rng.random_bool(spec.eligible_fraction) {
                    raw.max(spec.min_commits)
                } else {
                    raw.min(spec.min_commits.saturating_sub(1))
                };
                let stem = format!("File{f_idx:03}");
                for _ in 0..n_commits {
                    let author = if rng.random_bool(0.85) || spec.authors_per_repo == 1 {
                        file.owner
                    } else {
                        let mut other = rng.random_range(0..spec.authors_per_repo - 1);
                        if other >= file.owner {
                            other += 1;
                        }
                        other
                    };
                    let day = rng.random_range(0..365i64);
                    let ts = start
                        + day * 86_400
                        + rng.random_range(9..18i64) * 3_600
                        + rng.random_range(0..3_600i64);
                    let corrective = rng.random_bool(bug_rate);
                    let templates = if corrective {
                        CORRECTIVE_TEMPLATES
                    } else {
                        NEUTRAL_TEMPLATES
                    };
                    let message =
                        templates[rng.random_range(0..templates.len())].replace("{}", &stem);
                    let mut files = vec![file.path.clone()];
                    // Tangled housekeeping files give the coupling metric
                    // variance without touching other analyzed files.
                    if !corrective && rng.random_bool(0.35) {
                        let extras = rng.random_range(1..=3usize);
                        for _ in 0..extras {
                            let aux = AUX_PATHS[rng.random_range(0..AUX_PATHS.len())];
                            if !files.iter().any(|f| f == aux) {
                                files.push(aux.to_string());
                            }
                        }
                    }
                    let record = CommitRecord {
                        repo_id: repo_id.clone(),
                        commit_id: pseudo_sha(&repo_id, commit_counter),
                        author_id: format!("d{r:02}a{author:02}"),
                        timestamp: ts,
                        message,
                        files,
                        is_corrective: false,
                    };
                    commit_counter += 1;
                    commits_jsonl
                        .push_str(&serde_json::to_string(&record).expect("serializable record"));
                    commits_jsonl.push('\n');
                }

                // Snapshot rows.
                let _ = writeln!(lines_csv, "{},{}", file.path, file.lines);
                if file.smell_counts.iter().any(|&c| c > 0) {
                    let _ = writeln!(xml, "<file name=\"{}\">", xml_escape(&file.path));
                    for (s_idx, smell) in spec.smell_specs.iter().enumerate() {
                        for occurrence in 0..file.smell_counts[s_idx] {
                            let _ = writeln!(
                                xml,
                                "  <error line=\"{}\" severity=\"warning\" message=\"{}\" source=\"{}\"/>",
                                1 + occurrence * 10,
                                xml_escape(&smell.name),
                                smell_source(smell),
                            );
                        }
                    }
                    xml.push_str("</file>\n");
                }
            }

            xml.push_str("</checkstyle>\n");
            snapshots_xml
                .entry(year)
                .or_default()
                .insert(repo_id.clone(), xml);
            line_csvs
                .entry(year)
                .or_default()
                .insert(repo_id.clone(), lines_csv);
        }
    }

    let truth = expected_verdicts(spec);
    let ground_truth_json = serde_json::to_string_pretty(&serde_json::json!({
        "seed": spec.seed,
        "smells": truth,
    }))
    .expect("serializable ground truth");

    Ok(GeneratedCorpus {
        commits_jsonl,
        snapshots_xml,
        line_csvs,
        ground_truth_json,
        truth,
    })
}
