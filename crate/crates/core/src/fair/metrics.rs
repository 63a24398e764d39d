use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::package::ReplicationPackage;

/// Usage counters for one package identifier. Counters only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricCounters {
    pub per_file_downloads: BTreeMap<String, u64>,
    pub package_downloads: u64,
    pub explore_count: u64,
    pub access_requests: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricEvent {
    FileDownload(String),
    PackageDownload,
    Explore,
    AccessRequest,
}

impl MetricCounters {
    /// Zeroed counters covering every file of `pkg`.
    pub fn for_package(pkg: &ReplicationPackage) -> Self {
        let mut c = Self::default();
        c.register_paths(pkg.files.iter().map(|f| f.path.as_str()));
        c
    }

    /// Adds zeroed per-file counters for paths not yet tracked.
    pub fn register_paths<'a>(&mut self, paths: impl IntoIterator<Item = &'a str>) {
        for p in paths {
            self.per_file_downloads.entry(p.to_string()).or_insert(0);
        }
    }

    pub fn apply(&mut self, event: &MetricEvent) -> Result<(), MetricsError> {
        match event {
            MetricEvent::FileDownload(path) => {
                let slot =
                    self.per_file_downloads.get_mut(path).ok_or_else(|| MetricsError::UnknownPath(path.clone()))?;
                *slot += 1;
            }
            MetricEvent::PackageDownload => self.package_downloads += 1,
            MetricEvent::Explore => self.explore_count += 1,
            MetricEvent::AccessRequest => self.access_requests += 1,
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> Vec<u8> {
        crate::canonical::to_vec(self)
    }
}

/// Returns `counters` with exactly one counter incremented.
pub fn record_event(counters: &MetricCounters, event: &MetricEvent) -> Result<MetricCounters, MetricsError> {
    let mut next = counters.clone();
    next.apply(event)?;
    Ok(next)
}
