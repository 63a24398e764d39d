//! File-backed package store.
//!
//! Layout under the root directory:
//!
//! ```text
//! objects/<hh>/<rest-of-digest>        content-addressed blobs
//! packages/<SUFFIX>/v<N>/manifest.json canonical manifest
//! packages/<SUFFIX>/v<N>/draft-token   capability token while a draft
//! counters/<SUFFIX>.json               usage counters
//! tmp/                                 staging area for atomic renames
//! ```
//!
//! Every write lands in `tmp/` first and is renamed into place. Blobs are
//! written before the manifest that references them.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::fair::MetricCounters;
use crate::package::{
    compute_checksum, parse_manifest, serialize_manifest, Checksum, ManifestError, PersistentIdentifier,
    ReplicationPackage,
};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("stored manifest {path} is unreadable: {source}")]
    Manifest { path: PathBuf, source: ManifestError },
    #[error("blob {0} does not match its digest")]
    CorruptBlob(Checksum),
    #[error("refusing to overwrite published manifest {0}")]
    PublishedImmutable(PathBuf),
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    tmp_seq: AtomicU64,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in ["objects", "packages", "counters", "tmp"] {
            fs::create_dir_all(root.join(dir))?;
        }
        // Leftovers from an interrupted write were never renamed into place.
        for entry in fs::read_dir(root.join("tmp"))? {
            let _ = fs::remove_file(entry?.path());
        }
        Ok(Self { root, locks: Mutex::new(HashMap::new()), tmp_seq: AtomicU64::new(0) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Runs `f` while holding the write lock for `id`.
    pub fn with_lock<T>(&self, id: &PersistentIdentifier, f: impl FnOnce() -> T) -> T {
        let lock = {
            let mut map = self.locks.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(id.suffix().to_string()).or_default().clone()
        };
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        f()
    }

    fn write_atomic(&self, dest: &Path, bytes: &[u8]) -> io::Result<()> {
        let n = self.tmp_seq.fetch_add(1, Ordering::Relaxed);
        let tmp = self.root.join("tmp").join(format!("{}-{n}", std::process::id()));
        let result = (|| {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(bytes)?;
            file.sync_all()?;
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(&tmp, dest)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }

    fn blob_path(&self, digest: &Checksum) -> PathBuf {
        let hex = digest.as_str();
        self.root.join("objects").join(&hex[..2]).join(&hex[2..])
    }

    pub fn put_blob(&self, bytes: &[u8]) -> Result<Checksum, StoreError> {
        let digest = compute_checksum(bytes);
        let path = self.blob_path(&digest);
        if !path.exists() {
            self.write_atomic(&path, bytes)?;
        }
        Ok(digest)
    }

    pub fn has_blob(&self, digest: &Checksum) -> bool {
        self.blob_path(digest).is_file()
    }

    /// Reads a blob and verifies it against its digest.
    pub fn get_blob(&self, digest: &Checksum) -> Result<Vec<u8>, StoreError> {
        let bytes = fs::read(self.blob_path(digest))?;
        if !digest.matches(&bytes) {
            return Err(StoreError::CorruptBlob(digest.clone()));
        }
        Ok(bytes)
    }

    fn package_dir(&self, id: &PersistentIdentifier) -> PathBuf {
        self.root.join("packages").join(id.suffix())
    }

    fn version_dir(&self, id: &PersistentIdentifier, version: u32) -> PathBuf {
        self.package_dir(id).join(format!("v{version}"))
    }

    /// Claims an unused identifier by creating its package directory.
    pub fn allocate_id(&self) -> Result<PersistentIdentifier, StoreError> {
        let mut rng = rand::rng();
        loop {
            let id = PersistentIdentifier::random(&mut rng);
            match fs::create_dir(self.package_dir(&id)) {
                Ok(()) => return Ok(id),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn exists(&self, id: &PersistentIdentifier) -> bool {
        !self.versions(id).is_empty()
    }

    pub fn ids(&self) -> Result<Vec<PersistentIdentifier>, StoreError> {
        let mut ids: Vec<_> = fs::read_dir(self.root.join("packages"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|s| PersistentIdentifier::from_suffix(s).ok()))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Versions with a stored manifest, ascending.
    pub fn versions(&self, id: &PersistentIdentifier) -> Vec<u32> {
        let Ok(entries) = fs::read_dir(self.package_dir(id)) else {
            return Vec::new();
        };
        let mut versions: Vec<u32> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("manifest.json").is_file())
            .filter_map(|e| e.file_name().to_str()?.strip_prefix('v')?.parse().ok())
            .collect();
        versions.sort_unstable();
        versions
    }

    pub fn manifest_bytes(&self, id: &PersistentIdentifier, version: u32) -> Result<Option<Vec<u8>>, StoreError> {
        match fs::read(self.version_dir(id, version).join("manifest.json")) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load(&self, id: &PersistentIdentifier, version: u32) -> Result<Option<ReplicationPackage>, StoreError> {
        let Some(bytes) = self.manifest_bytes(id, version)? else {
            return Ok(None);
        };
        parse_manifest(&bytes).map(Some).map_err(|source| StoreError::Manifest {
            path: self.version_dir(id, version).join("manifest.json"),
            source,
        })
    }

    /// Persists a manifest. Every referenced blob must already be stored,
    /// and a published manifest is never replaced.
    pub fn write_manifest(&self, pkg: &ReplicationPackage) -> Result<(), StoreError> {
        let path = self.version_dir(&pkg.id, pkg.version).join("manifest.json");
        if let Some(existing) = self.load(&pkg.id, pkg.version)? {
            if existing.is_published() {
                return Err(StoreError::PublishedImmutable(path));
            }
        }
        if let Some(missing) = pkg.files.iter().find(|f| !self.has_blob(&f.checksum)) {
            return Err(StoreError::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("blob {} for {} is not stored", missing.checksum, missing.path),
            )));
        }
        self.write_atomic(&path, &serialize_manifest(pkg))?;
        Ok(())
    }

    pub fn write_draft_token(&self, id: &PersistentIdentifier, version: u32, token: &str) -> Result<(), StoreError> {
        self.write_atomic(&self.version_dir(id, version).join("draft-token"), token.as_bytes())?;
        Ok(())
    }

    pub fn draft_token(&self, id: &PersistentIdentifier, version: u32) -> Option<String> {
        fs::read_to_string(self.version_dir(id, version).join("draft-token")).ok()
    }

    pub fn remove_draft_token(&self, id: &PersistentIdentifier, version: u32) -> Result<(), StoreError> {
        match fs::remove_file(self.version_dir(id, version).join("draft-token")) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    fn counters_path(&self, id: &PersistentIdentifier) -> PathBuf {
        self.root.join("counters").join(format!("{}.json", id.suffix()))
    }

    pub fn counters(&self, id: &PersistentIdentifier) -> Result<Option<MetricCounters>, StoreError> {
        match fs::read(self.counters_path(id)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Io(io::Error::new(io::ErrorKind::InvalidData, e))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Callers hold the id lock so read-modify-write cycles never interleave.
    pub fn write_counters(&self, id: &PersistentIdentifier, counters: &MetricCounters) -> Result<(), StoreError> {
        self.write_atomic(&self.counters_path(id), &counters.to_canonical_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::package::{create_package_with_id, NewFile, PackageMetadata};

    fn pkg(store: &Store) -> (ReplicationPackage, Vec<NewFile>) {
        let files = vec![NewFile::new("a.csv", "1,2\n"), NewFile::new("b.py", "pass\n")];
        let id = store.allocate_id().unwrap();
        let p = create_package_with_id(id, PackageMetadata::new("T", vec!["A".into()]), &files).unwrap();
        (p, files)
    }

    #[test]
    fn blobs_are_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let d = store.put_blob(b"abc").unwrap();
        assert_eq!(store.put_blob(b"abc").unwrap(), d);
        let path = dir.path().join("objects/ba/7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(path.is_file());
        assert_eq!(store.get_blob(&d).unwrap(), b"abc");
        fs::write(&path, b"abd").unwrap();
        assert!(matches!(store.get_blob(&d), Err(StoreError::CorruptBlob(_))));
    }

    #[test]
    fn manifest_requires_blobs_and_is_immutable_once_published() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let (p, files) = pkg(&store);
        assert!(store.write_manifest(&p).is_err());
        for f in &files {
            store.put_blob(&f.bytes).unwrap();
        }
        store.write_manifest(&p).unwrap();
        assert_eq!(store.versions(&p.id), [1]);
        assert_eq!(store.load(&p.id, 1).unwrap().unwrap(), p);

        let published = p.publish().unwrap();
        store.write_manifest(&published).unwrap();
        let before = store.manifest_bytes(&published.id, 1).unwrap().unwrap();
        let mut altered = published.clone();
        altered.metadata.title = "changed".into();
        assert!(matches!(store.write_manifest(&altered), Err(StoreError::PublishedImmutable(_))));
        assert_eq!(store.manifest_bytes(&published.id, 1).unwrap().unwrap(), before);
        assert_eq!(store.ids().unwrap(), std::slice::from_ref(&published.id));
    }

    #[test]
    fn counters_roundtrip_and_tmp_is_clean() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let (p, _) = pkg(&store);
        assert_eq!(store.counters(&p.id).unwrap(), None);
        let mut c = MetricCounters::for_package(&p);
        c.explore_count = 4;
        store.write_counters(&p.id, &c).unwrap();
        assert_eq!(store.counters(&p.id).unwrap(), Some(c));
        assert_eq!(fs::read_dir(dir.path().join("tmp")).unwrap().count(), 0);
    }

    #[test]
    fn stale_tmp_files_removed_on_open() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("tmp")).unwrap();
        fs::write(dir.path().join("tmp/half-written"), b"x").unwrap();
        Store::open(dir.path()).unwrap();
        assert_eq!(fs::read_dir(dir.path().join("tmp")).unwrap().count(), 0);
    }
}
