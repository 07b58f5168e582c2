//! Pattern search, Soll/Ist comparison and model metrics.

pub mod catalog;
pub mod diff;
pub mod matcher;
pub mod metrics;
pub mod template;

pub use catalog::{builtin_catalog, scan_catalog};
pub use diff::{diff_maps, DeviationReport, DiffError, DiffTolerance, FlowDeviationKind};
pub use matcher::{match_pattern, scan, MatchResult};
pub use metrics::{metrics, Metrics};
pub use template::{PatternTemplate, Polarity};
