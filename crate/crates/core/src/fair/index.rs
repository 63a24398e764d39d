use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::package::{PersistentIdentifier, ReplicationPackage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Package,
    File,
}

/// One searchable record: the package itself, or one of its files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub kind: EntryKind,
    pub identifier: PersistentIdentifier,
    pub version: u32,
    pub text: String,
}

/// One package entry (title, keywords, authors) plus one entry per file
/// (path and media type).
pub fn index_entries(pkg: &ReplicationPackage) -> Result<Vec<IndexEntry>, MetricsError> {
    if !pkg.is_published() {
        return Err(MetricsError::NotPublished);
    }
    let m = &pkg.metadata;
    let package_text = format!("{}\n{}\n{}", m.title, m.keywords.join(", "), m.authors.join("; "));
    let mut entries = vec![IndexEntry {
        kind: EntryKind::Package,
        identifier: pkg.id.clone(),
        version: pkg.version,
        text: package_text,
    }];
    entries.extend(pkg.files.iter().map(|f| IndexEntry {
        kind: EntryKind::File,
        identifier: pkg.id.clone(),
        version: pkg.version,
        text: format!("{} ({})", f.path, f.media_type),
    }));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::package::{create_package, NewFile, PackageMetadata};

    fn published(files: &[NewFile]) -> ReplicationPackage {
        create_package(PackageMetadata::new("Title", vec!["A".into()]), files).unwrap().publish().unwrap()
    }

    #[test]
    fn one_plus_per_file() {
        let files: Vec<_> = (0..5).map(|i| NewFile::new(format!("f{i}.csv"), "x")).collect();
        let entries = index_entries(&published(&files)).unwrap();
        assert_eq!(entries.len(), 6);
        assert_eq!(entries[0].kind, EntryKind::Package);
        assert!(entries[1..].iter().all(|e| e.kind == EntryKind::File));
    }

    #[test]
    fn filename_is_searchable() {
        let entries = index_entries(&published(&[NewFile::new("data/survey_2020.csv", "x")])).unwrap();
        assert!(entries[1].text.contains("survey_2020.csv"));
    }

    #[test]
    fn zero_files() {
        assert_eq!(index_entries(&published(&[])).unwrap().len(), 1);
    }

    #[test]
    fn drafts_rejected() {
        let draft = create_package(PackageMetadata::new("T", vec!["A".into()]), &[]).unwrap();
        assert_eq!(index_entries(&draft), Err(MetricsError::NotPublished));
    }
}
