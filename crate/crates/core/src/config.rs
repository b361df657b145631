//! Run configuration: one flat key-value file capturing every input path and
//! threshold, so a report bundle is reproducible from its manifest alone.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::battery::Thresholds;
use crate::classify::{CommitClassifier, DEFAULT_CORRECTIVE_TOKENS};
use crate::error::{Error, Result};
use crate::metrics::MetricKind;

/// Full configuration of an analysis run.
///
/// Loaded from a flat TOML file; every field has a default so a config may
/// specify only what it overrides. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Line-delimited commit export.
    pub commits: PathBuf,
    /// Directory with `smells/<year>/<repo>.{xml,csv}` reports.
    pub smells_dir: PathBuf,
    /// Directory with `lines/<year>/<repo>.csv` sidecars.
    pub lines_dir: PathBuf,
    /// Report bundle destination.
    pub out_dir: PathBuf,
    /// Snapshot years, ascending. The last is the battery year; co-change
    /// and removal need at least two consecutive years.
    pub years: Vec<i32>,
    /// Target metrics to evaluate.
    pub metrics: Vec<MetricKind>,
    /// Commits-per-year floor for file eligibility.
    pub min_commits: u32,
    /// Hit floor for predictive power and co-change opportunity pairs.
    pub min_files: usize,
    /// Floor on qualifying (repo, owner) twin cells.
    pub min_twin_cells: usize,
    /// Opportunity floor below which removal probability is not reported.
    pub min_removal_opportunities: usize,
    /// Lift required for a Robust verdict.
    pub robust_lift: f64,
    /// Relaxed lift floor for an Almost verdict (non-positive).
    pub almost_lift: f64,
    /// Length property fails at or above this line-count correlation.
    pub length_corr_cap: f64,
    /// Fraction for the high and low quality groups (and length quartiles).
    pub quartile_fraction: f64,
    /// Corrective-evidence tokens for the commit classifier.
    pub corrective_tokens: Vec<String>,
    /// Negation tokens vetoing corrective evidence.
    pub negation_tokens: Vec<String>,
    /// Case-insensitive substring marking test files.
    pub test_pattern: String,
    /// Seed for the random negative control.
    pub seed: u64,
    /// Year for the smell-free group model; defaults to the year before the
    /// battery year when available.
    pub model_year: Option<i32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            commits: PathBuf::from("commits.jsonl"),
            smells_dir: PathBuf::from("smells"),
            lines_dir: PathBuf::from("lines"),
            out_dir: PathBuf::from("out"),
            years: vec![2019],
            metrics: MetricKind::ALL.to_vec(),
            min_commits: 10,
            min_files: 200,
            min_twin_cells: 10,
            min_removal_opportunities: 200,
            robust_lift: 0.10,
            almost_lift: -0.10,
            length_corr_cap: 0.5,
            quartile_fraction: 0.25,
            corrective_tokens: DEFAULT_CORRECTIVE_TOKENS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            negation_tokens: Vec::new(),
            test_pattern: "test".into(),
            seed: 1,
            model_year: None,
        }
    }
}

impl RunConfig {
    /// Loads a flat TOML config file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical serialized form, used for the manifest and its hash.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.years.is_empty() {
            return err("years must not be empty".into());
        }
        if self.years.windows(2).any(|w| w[1] <= w[0]) {
            return err(format!("years must be strictly ascending: {:?}", self.years));
        }
        if self.metrics.is_empty() {
            return err("metrics must not be empty".into());
        }
        let unique: BTreeSet<_> = self.metrics.iter().collect();
        if unique.len() != self.metrics.len() {
            return err("metrics contain duplicates".into());
        }
        if self.min_commits < 1 {
            return err("min_commits must be at least 1".into());
        }
        if !(self.quartile_fraction > 0.0 && self.quartile_fraction <= 0.5) {
            return err(format!(
                "quartile_fraction {} outside (0, 0.5]; group fractions must sum to 1",
                self.quartile_fraction
            ));
        }
        for (name, v) in [
            ("robust_lift", self.robust_lift),
            ("almost_lift", self.almost_lift),
            ("length_corr_cap", self.length_corr_cap),
        ] {
            if !v.is_finite() {
                return err(format!("{name} must be finite"));
            }
        }
        if self.robust_lift <= 0.0 {
            return err("robust_lift must be positive".into());
        }
        if self.almost_lift > 0.0 {
            return err("almost_lift must not be positive".into());
        }
        if self.corrective_tokens.is_empty() {
            return err("corrective_tokens must not be empty".into());
        }
        if let Some(model_year) = self.model_year {
            if !self.years.contains(&model_year) {
                return err(format!("model_year {model_year} not in years"));
            }
        }
        Ok(())
    }

    /// The year the battery evaluates: the most recent configured year.
    pub fn battery_year(&self) -> i32 {
        *self.years.last().expect("validated non-empty")
    }

    /// The model evaluation year: configured, or the year before the battery
    /// year when the run has one.
    pub fn effective_model_year(&self) -> i32 {
        self.model_year.unwrap_or_else(|| {
            if self.years.len() >= 2 {
                self.years[self.years.len() - 2]
            } else {
                self.battery_year()
            }
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            min_files: self.min_files,
            min_twin_cells: self.min_twin_cells,
            robust_lift: self.robust_lift,
            almost_lift: self.almost_lift,
            length_corr_cap: self.length_corr_cap,
            quartile_fraction: self.quartile_fraction,
        }
    }

    pub fn classifier(&self) -> Result<CommitClassifier> {
        CommitClassifier::from_tokens(&self.corrective_tokens, &self.negation_tokens)
    }
}
