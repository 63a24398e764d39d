use std::collections::BTreeSet;

use super::checksum::compute_checksum;
use super::ident::PersistentIdentifier;
use super::model::{
    FileEntry, PackageError, PackageMetadata, PackageState, ProvenanceRecord, ReplicationPackage, VersionRef,
};
use super::path::{normalize_path, RelativePath};
use super::role::{classify_role, media_type_for, FileRole};
use crate::runseq::{parse_run_script, RunSeqError, RunSequence, SequenceSource};

/// An uploaded file before it becomes a [`FileEntry`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewFile {
    pub path: String,
    pub bytes: Vec<u8>,
    pub role: Option<FileRole>,
}

impl NewFile {
    pub fn new(path: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Self { path: path.into(), bytes: bytes.into(), role: None }
    }

    pub fn with_role(mut self, role: FileRole) -> Self {
        self.role = Some(role);
        self
    }
}

fn make_entry(path: RelativePath, bytes: &[u8], role: FileRole) -> FileEntry {
    FileEntry {
        media_type: media_type_for(&path, role),
        checksum: compute_checksum(bytes),
        size: bytes.len() as u64,
        path,
        role,
    }
}

fn sequence_from_script(bytes: &[u8]) -> Result<RunSequence, PackageError> {
    let text = std::str::from_utf8(bytes).map_err(|_| RunSeqError::NotUtf8)?;
    Ok(parse_run_script(text)?)
}

/// Builds a draft version 1 under a freshly drawn identifier.
pub fn create_package(metadata: PackageMetadata, entries: &[NewFile]) -> Result<ReplicationPackage, PackageError> {
    create_package_with_id(PersistentIdentifier::random(&mut rand::rng()), metadata, entries)
}

/// Builds a draft version 1 under `id`, which the caller guarantees is unused.
///
/// When a run script is among the files its commands seed the run sequence.
pub fn create_package_with_id(
    id: PersistentIdentifier,
    mut metadata: PackageMetadata,
    entries: &[NewFile],
) -> Result<ReplicationPackage, PackageError> {
    metadata.dedup_keywords();
    metadata.validate()?;

    let mut seen = BTreeSet::new();
    let mut files = Vec::with_capacity(entries.len());
    let mut run_sequence = None;
    for entry in entries {
        let path = normalize_path(&entry.path)?;
        if !seen.insert(path.clone()) {
            return Err(PackageError::DuplicatePath(path));
        }
        let role = classify_role(&path, entry.role);
        if role == FileRole::Runscript {
            run_sequence = Some(sequence_from_script(&entry.bytes)?);
        }
        files.push(make_entry(path, &entry.bytes, role));
    }

    let pkg = ReplicationPackage {
        id,
        version: 1,
        state: PackageState::Draft,
        metadata,
        files,
        run_sequence,
        provenance: ProvenanceRecord::default(),
        badges: Vec::new(),
        lint_acknowledged: false,
    };
    pkg.check_invariants()?;
    Ok(pkg)
}

/// File and metadata edits applied when deriving a new version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionChanges {
    pub additions: Vec<NewFile>,
    pub replacements: Vec<NewFile>,
    pub removals: Vec<String>,
    pub metadata: Option<PackageMetadata>,
}

impl VersionChanges {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn touches_role(&self, base: &ReplicationPackage, role: FileRole) -> bool {
        let changed = |p: &str| {
            normalize_path(p).ok().and_then(|p| base.file(p.as_str()).map(|f| f.role == role)).unwrap_or(false)
        };
        self.removals.iter().any(|p| changed(p))
            || self.replacements.iter().any(|f| changed(&f.path) || f.role == Some(role))
            || self.additions.iter().any(|f| normalize_path(&f.path).is_ok_and(|p| classify_role(&p, f.role) == role))
    }
}

/// Derives draft version `base.version + 1` from a published base.
///
/// The base value is left untouched. Files that are not replaced or removed
/// keep their entries (and so their checksums). The run sequence is carried
/// over unless it came from a run script that this change replaces or
/// removes. Badges are cleared; they are re-assigned on publish.
pub fn new_version(base: &ReplicationPackage, changes: VersionChanges) -> Result<ReplicationPackage, PackageError> {
    if !base.is_published() {
        return Err(PackageError::NotPublished);
    }
    let dockerfile_changed = changes.touches_role(base, FileRole::Dockerfile);

    let mut files = base.files.clone();
    let mut run_sequence = base.run_sequence.clone();
    let script_sourced = |seq: &Option<RunSequence>| seq.as_ref().is_none_or(|s| s.source == SequenceSource::Runscript);

    for raw in &changes.removals {
        let path = normalize_path(raw)?;
        let idx =
            files.iter().position(|f| f.path == path).ok_or_else(|| PackageError::UnknownPath(path.to_string()))?;
        let removed = files.remove(idx);
        if removed.role == FileRole::Runscript && script_sourced(&run_sequence) {
            run_sequence = None;
        }
    }
    for new in &changes.replacements {
        let path = normalize_path(&new.path)?;
        let slot =
            files.iter_mut().find(|f| f.path == path).ok_or_else(|| PackageError::UnknownPath(path.to_string()))?;
        let role = new.role.unwrap_or(slot.role);
        *slot = make_entry(path, &new.bytes, role);
        if role == FileRole::Runscript && script_sourced(&run_sequence) {
            run_sequence = Some(sequence_from_script(&new.bytes)?);
        }
    }
    for new in &changes.additions {
        let path = normalize_path(&new.path)?;
        if files.iter().any(|f| f.path == path) {
            return Err(PackageError::DuplicatePath(path));
        }
        let role = classify_role(&path, new.role);
        if role == FileRole::Runscript && script_sourced(&run_sequence) {
            run_sequence = Some(sequence_from_script(&new.bytes)?);
        }
        files.push(make_entry(path, &new.bytes, role));
    }

    let mut metadata = changes.metadata.unwrap_or_else(|| base.metadata.clone());
    metadata.dedup_keywords();
    metadata.validate()?;

    let pkg = ReplicationPackage {
        id: base.id.clone(),
        version: base.version + 1,
        state: PackageState::Draft,
        metadata,
        files,
        run_sequence,
        provenance: ProvenanceRecord {
            derived_from: Some(VersionRef { id: base.id.clone(), version: base.version }),
            origin_platform: None,
            imported_at: None,
        },
        badges: Vec::new(),
        lint_acknowledged: base.lint_acknowledged && !dockerfile_changed,
    };
    pkg.check_invariants()?;
    Ok(pkg)
}
