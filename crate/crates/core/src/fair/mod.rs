//! FAIR scoring, badges, usage counters, and search index entries.

mod badges;
mod index;
mod metrics;
mod report;

use thiserror::Error;

pub use badges::{assign_badges, Badge, BadgeKind, KnownPlatforms};
pub use index::{index_entries, EntryKind, IndexEntry};
pub use metrics::{record_event, MetricCounters, MetricEvent};
pub use report::{fair_report, FairCheck, FairReport, LetterScore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("package version is not published")]
    NotPublished,
    #[error("no such file in package: {0}")]
    UnknownPath(String),
}
