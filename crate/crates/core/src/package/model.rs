use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::checksum::Checksum;
use super::ident::{PersistentIdentifier, Timestamp};
use super::path::{PathError, RelativePath};
use super::role::FileRole;
use crate::fair::Badge;
use crate::runseq::{RunSeqError, RunSequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackageError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("duplicate path in package: {0}")]
    DuplicatePath(RelativePath),
    #[error("no such file in package: {0}")]
    UnknownPath(String),
    #[error("invalid metadata: {0}")]
    InvalidMetadata(String),
    #[error("package version is not published")]
    NotPublished,
    #[error("package version is already published")]
    AlreadyPublished,
    #[error("published package versions are immutable")]
    PublishedImmutable,
    #[error("run script: {0}")]
    RunScript(#[from] RunSeqError),
    #[error("package invariant violated: {0}")]
    Invariant(String),
}

/// Descriptive metadata for a replication package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PackageMetadata {
    pub title: String,
    pub authors: Vec<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
}

impl PackageMetadata {
    pub fn new(title: impl Into<String>, authors: Vec<String>) -> Self {
        Self { title: title.into(), authors, description: String::new(), keywords: Vec::new(), license: None }
    }

    pub fn with_keywords<I, S>(mut self, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keywords = keywords.into_iter().map(Into::into).collect();
        self.dedup_keywords();
        self
    }

    pub fn with_license(mut self, license: impl Into<String>) -> Self {
        self.license = Some(license.into());
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// Removes repeated keywords, keeping first occurrences in order.
    pub fn dedup_keywords(&mut self) {
        let mut seen = BTreeSet::new();
        self.keywords.retain(|k| seen.insert(k.clone()));
    }

    pub fn validate(&self) -> Result<(), PackageError> {
        if self.title.trim().is_empty() {
            return Err(PackageError::InvalidMetadata("title must not be empty".into()));
        }
        if self.authors.is_empty() || self.authors.iter().any(|a| a.trim().is_empty()) {
            return Err(PackageError::InvalidMetadata("authors must be a non-empty list of names".into()));
        }
        let unique: BTreeSet<_> = self.keywords.iter().collect();
        if unique.len() != self.keywords.len() {
            return Err(PackageError::InvalidMetadata("keywords must be unique".into()));
        }
        if let Some(license) = &self.license {
            if license.trim().is_empty() {
                return Err(PackageError::InvalidMetadata("license must not be blank".into()));
            }
        }
        Ok(())
    }
}

/// `(identifier, version)` pointer to another package version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VersionRef {
    pub id: PersistentIdentifier,
    pub version: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProvenanceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<VersionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_platform: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imported_at: Option<Timestamp>,
}

impl ProvenanceRecord {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackageState {
    Draft,
    Published,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FileEntry {
    pub path: RelativePath,
    pub checksum: Checksum,
    pub size: u64,
    pub media_type: String,
    pub role: FileRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationPackage {
    pub id: PersistentIdentifier,
    pub version: u32,
    pub state: PackageState,
    pub metadata: PackageMetadata,
    pub files: Vec<FileEntry>,
    pub run_sequence: Option<RunSequence>,
    pub provenance: ProvenanceRecord,
    pub badges: Vec<Badge>,
    pub lint_acknowledged: bool,
}

impl ReplicationPackage {
    pub fn is_published(&self) -> bool {
        self.state == PackageState::Published
    }

    pub fn version_ref(&self) -> VersionRef {
        VersionRef { id: self.id.clone(), version: self.version }
    }

    pub fn file(&self, path: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path.as_str() == path)
    }

    pub fn file_with_role(&self, role: FileRole) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.role == role)
    }

    pub fn dockerfile(&self) -> Option<&FileEntry> {
        self.file_with_role(FileRole::Dockerfile)
    }

    pub fn runscript(&self) -> Option<&FileEntry> {
        self.file_with_role(FileRole::Runscript)
    }

    pub fn has_role(&self, role: FileRole) -> bool {
        self.file_with_role(role).is_some()
    }

    /// Errors with `PublishedImmutable` unless the package is still a draft.
    pub fn ensure_draft(&self) -> Result<(), PackageError> {
        if self.is_published() {
            Err(PackageError::PublishedImmutable)
        } else {
            Ok(())
        }
    }

    /// Transition draft -> published.
    pub fn publish(mut self) -> Result<Self, PackageError> {
        if self.is_published() {
            return Err(PackageError::AlreadyPublished);
        }
        self.state = PackageState::Published;
        Ok(self)
    }

    pub fn check_invariants(&self) -> Result<(), PackageError> {
        let bad = |msg: String| Err(PackageError::Invariant(msg));
        if self.version < 1 {
            return bad("version must be at least 1".into());
        }
        self.metadata.validate()?;
        let mut seen = BTreeSet::new();
        for f in &self.files {
            if !seen.insert(f.path.as_str()) {
                return Err(PackageError::DuplicatePath(f.path.clone()));
            }
        }
        for role in [FileRole::Dockerfile, FileRole::Runscript] {
            if self.files.iter().filter(|f| f.role == role).count() > 1 {
                return bad(format!("more than one {role} file"));
            }
        }
        if let Some(from) = &self.provenance.derived_from {
            if from.version < 1 {
                return bad("derivedFrom version must be at least 1".into());
            }
            if from.id == self.id && from.version >= self.version {
                return bad(format!("derivedFrom version {} is not lower than {}", from.version, self.version));
            }
        }
        if let Some(platform) = &self.provenance.origin_platform {
            if platform.trim().is_empty() {
                return bad("originPlatform must not be blank".into());
            }
        }
        for badge in &self.badges {
            badge.check().map_err(PackageError::Invariant)?;
        }
        Ok(())
    }
}
