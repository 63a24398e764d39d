//! Canonical manifest encoding for replication packages.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::ident::PersistentIdentifier;
use super::model::{FileEntry, PackageMetadata, PackageState, ProvenanceRecord, ReplicationPackage};
use crate::canonical;
use crate::fair::Badge;
use crate::runseq::RunSequence;

pub const MANIFEST_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("malformed manifest JSON: {0}")]
    MalformedJson(String),
    #[error("manifest schema violation: {0}")]
    SchemaViolation(String),
    #[error("manifest invariant violation: {0}")]
    InvariantViolation(String),
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ManifestOut<'a> {
    manifest_version: u64,
    id: &'a PersistentIdentifier,
    version: u32,
    state: PackageState,
    metadata: &'a PackageMetadata,
    files: &'a [FileEntry],
    #[serde(skip_serializing_if = "Option::is_none")]
    run_sequence: Option<&'a RunSequence>,
    provenance: &'a ProvenanceRecord,
    badges: &'a [Badge],
    lint_acknowledged: bool,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ManifestIn {
    #[allow(dead_code)]
    manifest_version: u64,
    id: PersistentIdentifier,
    version: u32,
    state: PackageState,
    metadata: PackageMetadata,
    files: Vec<FileEntry>,
    #[serde(default)]
    run_sequence: Option<RunSequence>,
    provenance: ProvenanceRecord,
    badges: Vec<Badge>,
    lint_acknowledged: bool,
}

/// Canonical JSON bytes for `pkg`. Equal packages give equal bytes.
pub fn serialize_manifest(pkg: &ReplicationPackage) -> Vec<u8> {
    canonical::to_vec(&ManifestOut {
        manifest_version: MANIFEST_VERSION,
        id: &pkg.id,
        version: pkg.version,
        state: pkg.state,
        metadata: &pkg.metadata,
        files: &pkg.files,
        run_sequence: pkg.run_sequence.as_ref(),
        provenance: &pkg.provenance,
        badges: &pkg.badges,
        lint_acknowledged: pkg.lint_acknowledged,
    })
}

pub fn parse_manifest(bytes: &[u8]) -> Result<ReplicationPackage, ManifestError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ManifestError::MalformedJson(e.to_string()))?;
    match value.get("manifestVersion").and_then(Value::as_u64) {
        Some(MANIFEST_VERSION) => {}
        Some(other) => return Err(ManifestError::SchemaViolation(format!("unknown manifestVersion {other}"))),
        None => return Err(ManifestError::SchemaViolation("missing or non-integer manifestVersion".into())),
    }
    let doc: ManifestIn = serde_json::from_value(value).map_err(|e| ManifestError::SchemaViolation(e.to_string()))?;
    if doc.version < 1 {
        return Err(ManifestError::SchemaViolation("version must be at least 1".into()));
    }
    let pkg = ReplicationPackage {
        id: doc.id,
        version: doc.version,
        state: doc.state,
        metadata: doc.metadata,
        files: doc.files,
        run_sequence: doc.run_sequence,
        provenance: doc.provenance,
        badges: doc.badges,
        lint_acknowledged: doc.lint_acknowledged,
    };
    pkg.check_invariants().map_err(|e| ManifestError::InvariantViolation(e.to_string()))?;
    Ok(pkg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::package::{create_package, NewFile, PackageMetadata};

    fn sample() -> ReplicationPackage {
        let meta = PackageMetadata::new("T", vec!["A".into()]).with_keywords(["k1", "k2"]);
        create_package(meta, &[NewFile::new("data/a.csv", "1,2\n"), NewFile::new("run", "python go.py\n")]).unwrap()
    }

    #[test]
    fn deterministic_and_canonical() {
        let pkg = sample();
        let a = serialize_manifest(&pkg);
        assert_eq!(a, serialize_manifest(&pkg));
        assert!(canonical::is_canonical(&a));
        assert!(a.ends_with(b"}\n"));
        assert!(std::str::from_utf8(&a).unwrap().contains("\"manifestVersion\":1"));
    }

    #[test]
    fn omits_absent_run_sequence() {
        let mut pkg = sample();
        pkg.run_sequence = None;
        let text = String::from_utf8(serialize_manifest(&pkg)).unwrap();
        assert!(!text.contains("runSequence"));
        assert_eq!(parse_manifest(text.as_bytes()).unwrap(), pkg);
    }

    #[test]
    fn parse_inverts_serialize() {
        let pkg = sample();
        assert_eq!(parse_manifest(&serialize_manifest(&pkg)).unwrap(), pkg);
    }

    #[test]
    fn version_zero_is_schema_violation() {
        let text = String::from_utf8(serialize_manifest(&sample())).unwrap();
        let bad = text.replace("\"version\":1}\n", "\"version\":0}\n");
        assert_ne!(bad, text);
        assert!(matches!(parse_manifest(bad.as_bytes()), Err(ManifestError::SchemaViolation(_))));
    }

    #[test]
    fn unknown_manifest_version() {
        let text = String::from_utf8(serialize_manifest(&sample())).unwrap();
        let bad = text.replace("\"manifestVersion\":1", "\"manifestVersion\":2");
        assert!(matches!(parse_manifest(bad.as_bytes()), Err(ManifestError::SchemaViolation(_))));
    }

    #[test]
    fn truncated_is_malformed() {
        let bytes = serialize_manifest(&sample());
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(parse_manifest(cut), Err(ManifestError::MalformedJson(_))));
    }

    #[test]
    fn invariant_violations_detected() {
        let mut pkg = sample();
        let dup = pkg.files[0].clone();
        pkg.files.push(dup);
        let bytes = serialize_manifest(&pkg);
        assert!(matches!(parse_manifest(&bytes), Err(ManifestError::InvariantViolation(_))));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = String::from_utf8(serialize_manifest(&sample())).unwrap();
        let bad = text.replacen('{', "{\"zzz\":1,", 1);
        assert!(matches!(parse_manifest(bad.as_bytes()), Err(ManifestError::SchemaViolation(_))));
    }
}
