//! Explore bundles: the zip handed to (and received back from) a
//! reproducibility platform.
//!
//! Members, in order: `manifest.json`, `launch-plan.json` (only when the
//! package has a Dockerfile and a run sequence), then `files/<path>` for
//! every file entry. Nothing else.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};

use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::package::{parse_manifest, FileEntry, ReplicationPackage};
use crate::runseq::LaunchPlan;

pub const MANIFEST_MEMBER: &str = "manifest.json";
pub const LAUNCH_PLAN_MEMBER: &str = "launch-plan.json";
pub const FILES_PREFIX: &str = "files/";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("not a readable zip archive: {0}")]
    NotZip(String),
    #[error("bundle has no manifest.json")]
    MissingManifest,
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("bad launch plan: {0}")]
    LaunchPlan(String),
    #[error("bundle member {0} is missing")]
    MissingFile(String),
    #[error("digest mismatch for {0}")]
    DigestMismatch(String),
    #[error("unexpected bundle member {0}")]
    UnexpectedMember(String),
    #[error("bundle content exceeds {0} bytes")]
    TooLarge(u64),
}

/// A verified bundle: the manifest's package, its file bytes in manifest
/// order, and the launch plan when present.
#[derive(Debug)]
pub struct ParsedBundle {
    pub package: ReplicationPackage,
    pub files: Vec<(FileEntry, Vec<u8>)>,
    pub launch_plan: Option<LaunchPlan>,
}

/// Writes a bundle. `content` yields the bytes for a file entry.
pub fn write_bundle<F, E>(
    manifest: &[u8],
    launch_plan: Option<&LaunchPlan>,
    files: &[FileEntry],
    mut content: F,
) -> Result<Vec<u8>, E>
where
    F: FnMut(&FileEntry) -> Result<Vec<u8>, E>,
    E: From<std::io::Error>,
{
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    // Fixed timestamps keep bundles byte-reproducible.
    let opts = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644)
        .large_file(false);
    let add = |zip: &mut ZipWriter<Cursor<Vec<u8>>>, name: &str, bytes: &[u8]| -> std::io::Result<()> {
        zip.start_file(name, opts).map_err(std::io::Error::other)?;
        zip.write_all(bytes)
    };
    add(&mut zip, MANIFEST_MEMBER, manifest)?;
    if let Some(plan) = launch_plan {
        add(&mut zip, LAUNCH_PLAN_MEMBER, &plan.to_canonical_json())?;
    }
    for entry in files {
        let bytes = content(entry)?;
        add(&mut zip, &format!("{FILES_PREFIX}{}", entry.path), &bytes)?;
    }
    let cursor = zip.finish().map_err(std::io::Error::other)?;
    Ok(cursor.into_inner())
}

fn read_member(
    archive: &mut ZipArchive<Cursor<&[u8]>>,
    index: usize,
    budget: &mut u64,
    cap: u64,
) -> Result<Vec<u8>, BundleError> {
    let file = archive.by_index(index).map_err(|e| BundleError::NotZip(e.to_string()))?;
    let mut out = Vec::new();
    file.take(budget.saturating_add(1)).read_to_end(&mut out).map_err(|e| BundleError::NotZip(e.to_string()))?;
    if out.len() as u64 > *budget {
        return Err(BundleError::TooLarge(cap));
    }
    *budget -= out.len() as u64;
    Ok(out)
}

/// Opens and verifies a bundle: every manifest entry must have a matching
/// `files/` member with the recorded digest, and there may be no extra
/// members (directory entries are ignored). At most `cap` bytes are
/// decompressed in total.
pub fn read_bundle(bytes: &[u8], cap: u64) -> Result<ParsedBundle, BundleError> {
    let mut archive = ZipArchive::new(Cursor::new(bytes)).map_err(|e| BundleError::NotZip(e.to_string()))?;
    let mut members: BTreeMap<String, usize> = BTreeMap::new();
    for i in 0..archive.len() {
        let name = archive.by_index_raw(i).map_err(|e| BundleError::NotZip(e.to_string()))?.name().to_string();
        if name.ends_with('/') {
            continue;
        }
        members.insert(name, i);
    }

    let mut budget = cap;
    let manifest_idx = members.remove(MANIFEST_MEMBER).ok_or(BundleError::MissingManifest)?;
    let manifest = read_member(&mut archive, manifest_idx, &mut budget, cap)?;
    let package = parse_manifest(&manifest).map_err(|e| BundleError::Manifest(e.to_string()))?;

    let launch_plan = match members.remove(LAUNCH_PLAN_MEMBER) {
        Some(i) => {
            let raw = read_member(&mut archive, i, &mut budget, cap)?;
            Some(serde_json::from_slice(&raw).map_err(|e| BundleError::LaunchPlan(e.to_string()))?)
        }
        None => None,
    };

    let mut files = Vec::with_capacity(package.files.len());
    for entry in &package.files {
        let name = format!("{FILES_PREFIX}{}", entry.path);
        let i = members.remove(&name).ok_or_else(|| BundleError::MissingFile(name.clone()))?;
        let content = read_member(&mut archive, i, &mut budget, cap)?;
        if content.len() as u64 != entry.size || !entry.checksum.matches(&content) {
            return Err(BundleError::DigestMismatch(entry.path.to_string()));
        }
        files.push((entry.clone(), content));
    }
    if let Some(extra) = members.into_keys().next() {
        return Err(BundleError::UnexpectedMember(extra));
    }
    Ok(ParsedBundle { package, files, launch_plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::package::{create_package, serialize_manifest, NewFile, PackageMetadata};

    fn sample() -> (ReplicationPackage, Vec<NewFile>) {
        let files = vec![
            NewFile::new("Dockerfile", "FROM alpine:3.19\n"),
            NewFile::new("run", "python a.py\n"),
            NewFile::new("data/a.csv", "1,2\n"),
        ];
        let pkg = create_package(PackageMetadata::new("T", vec!["A".into()]), &files).unwrap().publish().unwrap();
        (pkg, files)
    }

    fn bundle(pkg: &ReplicationPackage, files: &[NewFile], plan: Option<&LaunchPlan>) -> Vec<u8> {
        write_bundle::<_, std::io::Error>(&serialize_manifest(pkg), plan, &pkg.files, |e| {
            Ok(files.iter().find(|f| f.path.trim_start_matches("./") == e.path.as_str()).unwrap().bytes.clone())
        })
        .unwrap()
    }

    fn member_names(zip: &[u8]) -> Vec<String> {
        let mut a = ZipArchive::new(Cursor::new(zip)).unwrap();
        (0..a.len()).map(|i| a.by_index(i).unwrap().name().to_string()).collect()
    }

    #[test]
    fn layout_and_roundtrip() {
        let (pkg, files) = sample();
        let plan = crate::runseq::build_launch_plan(&pkg).unwrap();
        let zip = bundle(&pkg, &files, Some(&plan));
        assert_eq!(
            member_names(&zip),
            ["manifest.json", "launch-plan.json", "files/Dockerfile", "files/run", "files/data/a.csv"]
        );
        let parsed = read_bundle(&zip, u64::MAX).unwrap();
        assert_eq!(parsed.package, pkg);
        assert_eq!(parsed.launch_plan, Some(plan));
        assert_eq!(parsed.files.len(), 3);
        // Reproducible bytes.
        assert_eq!(zip, bundle(&pkg, &files, parsed.launch_plan.as_ref()));
    }

    #[test]
    fn corrupted_file_detected() {
        let (pkg, mut files) = sample();
        files[2].bytes = b"1,3\n".to_vec();
        let zip = bundle(&pkg, &files, None);
        assert!(matches!(read_bundle(&zip, u64::MAX), Err(BundleError::DigestMismatch(_))));
    }

    #[test]
    fn extra_and_missing_members() {
        let (pkg, files) = sample();
        let zip = bundle(&pkg, &files, None);
        let mut a = ZipArchive::new(Cursor::new(zip.as_slice())).unwrap();
        let mut w = ZipWriter::new(Cursor::new(Vec::new()));
        for i in 0..a.len() {
            w.raw_copy_file(a.by_index(i).unwrap()).unwrap();
        }
        w.start_file("notes.txt", SimpleFileOptions::default()).unwrap();
        w.write_all(b"x").unwrap();
        let extra = w.finish().unwrap().into_inner();
        assert!(matches!(read_bundle(&extra, u64::MAX), Err(BundleError::UnexpectedMember(m)) if m == "notes.txt"));

        let mut short = pkg.clone();
        short.files.truncate(2);
        let partial = bundle(&short, &files, None);
        // A manifest listing a file the archive lacks.
        let mut claims = short.clone();
        claims.files.push(pkg.files[2].clone());
        let lying = write_bundle::<_, std::io::Error>(&serialize_manifest(&claims), None, &short.files, |e| {
            Ok(files.iter().find(|f| f.path == e.path.as_str()).unwrap().bytes.clone())
        })
        .unwrap();
        assert!(read_bundle(&partial, u64::MAX).is_ok());
        assert!(matches!(read_bundle(&lying, u64::MAX), Err(BundleError::MissingFile(_))));
    }

    #[test]
    fn not_a_zip_and_cap() {
        assert!(matches!(read_bundle(b"nope", u64::MAX), Err(BundleError::NotZip(_))));
        let (pkg, files) = sample();
        let zip = bundle(&pkg, &files, None);
        assert!(matches!(read_bundle(&zip, 10), Err(BundleError::TooLarge(10))));
    }
}
