//! Offline package directories: the files plus a `repro-package.json`
//! draft manifest listing them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::package::{
    create_package_with_id, FileRole, NewFile, PackageError, PackageMetadata, PersistentIdentifier, RelativePath,
    ReplicationPackage,
};
use crate::runseq::RunSequence;

pub const LOCAL_MANIFEST: &str = "repro-package.json";

#[derive(Debug, thiserror::Error)]
pub enum LocalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a package manifest: {source}")]
    Malformed { path: PathBuf, source: serde_json::Error },
    #[error("{0} already holds a package")]
    Exists(PathBuf),
    #[error(transparent)]
    Package(#[from] PackageError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LocalError + '_ {
    move |source| LocalError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalFile {
    pub path: RelativePath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<FileRole>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LocalPackage {
    pub metadata: PackageMetadata,
    #[serde(default)]
    pub files: Vec<LocalFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_sequence: Option<RunSequence>,
}

impl LocalPackage {
    pub fn new(metadata: PackageMetadata) -> Self {
        Self { metadata, files: Vec::new(), run_sequence: None }
    }

    pub fn manifest_path(dir: &Path) -> PathBuf {
        dir.join(LOCAL_MANIFEST)
    }

    /// Creates `dir` if needed and writes an empty package into it.
    pub fn init(dir: &Path, metadata: PackageMetadata) -> Result<Self, LocalError> {
        let path = Self::manifest_path(dir);
        if path.exists() {
            return Err(LocalError::Exists(dir.to_path_buf()));
        }
        metadata.validate()?;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let pkg = Self::new(metadata);
        pkg.save(dir)?;
        Ok(pkg)
    }

    pub fn load(dir: &Path) -> Result<Self, LocalError> {
        let path = Self::manifest_path(dir);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        serde_json::from_slice(&bytes).map_err(|source| LocalError::Malformed { path, source })
    }

    pub fn save(&self, dir: &Path) -> Result<(), LocalError> {
        let path = Self::manifest_path(dir);
        fs::write(&path, canonical::to_vec(self)).map_err(io_err(&path))
    }

    /// Adds or updates the entry for `path`.
    pub fn upsert(&mut self, path: RelativePath, role: Option<FileRole>) {
        match self.files.iter_mut().find(|f| f.path == path) {
            Some(f) => f.role = role.or(f.role),
            None => {
                self.files.push(LocalFile { path, role });
                self.files.sort_by(|a, b| a.path.cmp(&b.path));
            }
        }
    }

    /// Reads every listed file from `dir`.
    pub fn read_files(&self, dir: &Path) -> Result<Vec<NewFile>, LocalError> {
        self.files
            .iter()
            .map(|f| {
                let on_disk = dir.join(f.path.as_str());
                let bytes = fs::read(&on_disk).map_err(io_err(&on_disk))?;
                let file = NewFile::new(f.path.as_str(), bytes);
                Ok(match f.role {
                    Some(r) => file.with_role(r),
                    None => file,
                })
            })
            .collect()
    }

    /// Builds the draft package these files would deposit as, under a
    /// placeholder identifier.
    pub fn assemble(&self, dir: &Path) -> Result<(ReplicationPackage, Vec<NewFile>), LocalError> {
        let files = self.read_files(dir)?;
        let id = PersistentIdentifier::from_suffix("000000").expect("valid suffix");
        let mut pkg = create_package_with_id(id, self.metadata.clone(), &files)?;
        if let Some(seq) = &self.run_sequence {
            pkg.run_sequence = Some(seq.clone());
        }
        pkg.check_invariants()?;
        Ok((pkg, files))
    }
}
