//! Screens code smells for *potentially causal* influence on software quality.
//!
//! The engine consumes normalized commit exports and per-year smell reports,
//! computes four process metrics per file-year (corrective commit probability,
//! commit coupling, commit duration, bug detection time) plus a seeded random
//! negative control, and then runs a five-property battery per smell:
//! predictive power, monotonicity, co-change, a twin (same developer, same
//! repository) control, and a file-length control. Smells that survive all
//! five are reported as `Potential`; stricter and looser lift thresholds give
//! `Robust` and `Almost`.
//!
//! The [`synth`] module generates corpora with known causal structure so the
//! whole battery can be validated against ground truth.

pub mod battery;
pub mod classify;
pub mod config;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod temporal;

// pub use battery::{Property, PropertyResult, SmellAssessment, Verdict};
pub use classify::{ClassifierRule, CommitClassifier, Polarity};
// pub use config::RunConfig;
pub use error::{Error, Result};
pub use ingest::{CommitRecord, FileKey, SmellSnapshot, SnapshotYear};
pub use metrics::{FileYearMetrics, MetricKind, QualityGroup, QualityGrouping};
// pub use model::GroupModelResult;
pub use stats::ConfusionStats;
// pub use synth::{CorpusSpec, SmellKind, SmellSpec};
