use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::package::{FileRole, ReplicationPackage, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BadgeKind {
    OpenData,
    OpenMaterials,
    ReproducibilityCertification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Badge {
    pub kind: BadgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_platform: Option<String>,
    pub awarded_at: Timestamp,
}

impl Badge {
    /// Certification badges carry their origin; the others never do.
    pub fn check(&self) -> Result<(), String> {
        let certification = self.kind == BadgeKind::ReproducibilityCertification;
        match (&self.origin_platform, certification) {
            (Some(p), true) if !p.trim().is_empty() => Ok(()),
            (None, false) => Ok(()),
            _ if certification => Err("reproducibility-certification badge needs an origin".into()),
            _ => Err(format!("{:?} badge must not carry an origin", self.kind)),
        }
    }
}

/// Reproducibility platforms whose exports earn a certification badge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownPlatforms(BTreeSet<String>);

impl KnownPlatforms {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(names.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, platform: &str) -> bool {
        self.0.contains(platform)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for KnownPlatforms {
    fn default() -> Self {
        Self::new(["code-ocean-like", "whole-tale-like", "binder-like", "renku-like"])
    }
}

impl std::str::FromStr for KnownPlatforms {
    type Err = std::convert::Infallible;

    /// Comma-separated list.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::new(s.split(',').map(str::trim).filter(|s| !s.is_empty())))
    }
}

/// Badges earned by a published package, ordered by kind.
///
/// Badges the package already holds keep their award time, so re-running
/// on an assigned package is a no-op; new ones are stamped with `now`.
pub fn assign_badges(
    pkg: &ReplicationPackage,
    known: &KnownPlatforms,
    now: Timestamp,
) -> Result<Vec<Badge>, MetricsError> {
    if !pkg.is_published() {
        return Err(MetricsError::NotPublished);
    }
    let licensed = pkg.metadata.license.is_some();
    let mut earned: Vec<(BadgeKind, Option<String>)> = Vec::new();
    if licensed && pkg.has_role(FileRole::Data) {
        earned.push((BadgeKind::OpenData, None));
    }
    if licensed && pkg.has_role(FileRole::Code) {
        earned.push((BadgeKind::OpenMaterials, None));
    }
    if let Some(origin) = pkg.provenance.origin_platform.as_deref().filter(|o| known.contains(o)) {
        earned.push((BadgeKind::ReproducibilityCertification, Some(origin.to_string())));
    }
    Ok(earned
        .into_iter()
        .map(|(kind, origin_platform)| {
            let awarded_at = pkg
                .badges
                .iter()
                .find(|b| b.kind == kind && b.origin_platform == origin_platform)
                .map_or(now, |b| b.awarded_at);
            Badge { kind, origin_platform, awarded_at }
        })
        .collect())
}
