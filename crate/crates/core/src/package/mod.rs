//! Replication-package data model: identifiers, file entries, versioning
//! with provenance, and the canonical manifest.

mod checksum;
mod ident;
mod manifest;
mod model;
mod ops;
mod path;
mod role;

pub use checksum::{compute_checksum, Checksum};
pub use ident::{InvalidIdentifier, PersistentIdentifier, Timestamp};
pub use manifest::{parse_manifest, serialize_manifest, ManifestError, MANIFEST_VERSION};
pub use model::{
    FileEntry, PackageError, PackageMetadata, PackageState, ProvenanceRecord, ReplicationPackage, VersionRef,
};
pub use ops::{create_package, create_package_with_id, new_version, NewFile, VersionChanges};
pub use path::{normalize_path, PathError, RelativePath};
pub use role::{classify_role, media_type_for, FileRole};
