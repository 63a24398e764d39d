use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::index::{index_entries, EntryKind};
use super::MetricsError;
use crate::canonical;
use crate::dockerfile::LintReport;
use crate::package::{parse_manifest, serialize_manifest, PersistentIdentifier, ReplicationPackage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FairCheck {
    pub check_id: String,
    pub passed: bool,
    pub note: String,
}

/// Score for one FAIR letter: passed checks over total checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterScore {
    pub score: f64,
    pub checks: Vec<FairCheck>,
}

impl LetterScore {
    fn from_checks(checks: Vec<FairCheck>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        Self { score: passed as f64 / checks.len() as f64, checks }
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairReport {
    pub findable: LetterScore,
    pub accessible: LetterScore,
    pub interoperable: LetterScore,
    pub reusable: LetterScore,
}

impl FairReport {
    pub fn letters(&self) -> [(&'static str, &LetterScore); 4] {
        [("F", &self.findable), ("A", &self.accessible), ("I", &self.interoperable), ("R", &self.reusable)]
    }

    pub fn to_canonical_json(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }
}

fn check(id: &str, passed: bool, pass_note: &str, fail_note: &str) -> FairCheck {
    FairCheck { check_id: id.to_string(), passed, note: if passed { pass_note } else { fail_note }.to_string() }
}

/// Scores a published package against the fixed rubric
/// (F: 4 checks, A: 2, I: 2, R: 4).
///
/// `lint` is the report for the package's Dockerfile, when the caller has
/// one. The lint check passes without a Dockerfile, with an acknowledged
/// lint, or with a non-blocking report.
pub fn fair_report(pkg: &ReplicationPackage, lint: Option<&LintReport>) -> Result<FairReport, MetricsError> {
    if !pkg.is_published() {
        return Err(MetricsError::NotPublished);
    }
    let m = &pkg.metadata;

    let id_ok = pkg.id.to_string().parse::<PersistentIdentifier>().as_ref() == Ok(&pkg.id);
    let entries = index_entries(pkg)?;
    let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
    for e in entries.iter().filter(|e| e.kind == EntryKind::File) {
        for f in &pkg.files {
            if e.text.contains(f.path.as_str()) {
                *hits.entry(f.path.as_str()).or_default() += 1;
            }
        }
    }
    let all_indexed = pkg.files.iter().all(|f| hits.get(f.path.as_str()).is_some_and(|&n| n >= 1));
    let findable = LetterScore::from_checks(vec![
        check("F1-identifier", id_ok, "persistent identifier assigned", "identifier malformed"),
        check(
            "F2-title-authors",
            !m.title.trim().is_empty() && !m.authors.is_empty(),
            "title and authors present",
            "title or authors missing",
        ),
        check("F3-keywords", !m.keywords.is_empty(), "keywords present", "no keywords"),
        check("F4-files-indexed", all_indexed, "every file is indexed", "some files are not indexed"),
    ]);

    let retrievable = pkg.check_invariants().is_ok();
    let accessible = LetterScore::from_checks(vec![
        check(
            "A1-files-retrievable",
            retrievable,
            "every file has a unique relative path",
            "file paths are not uniquely addressable",
        ),
        check("A2-manifest-retrievable", pkg.is_published(), "published manifest is stored", "manifest not published"),
    ]);

    let manifest = serialize_manifest(pkg);
    let canonical_ok = canonical::is_canonical(&manifest) && parse_manifest(&manifest).as_ref() == Ok(pkg);
    let media_ok = pkg.files.iter().all(|f| f.media_type.contains('/'));
    let interoperable = LetterScore::from_checks(vec![
        check(
            "I1-canonical-manifest",
            canonical_ok,
            "manifest is canonical JSON",
            "manifest does not round-trip canonically",
        ),
        check("I2-media-types", media_ok, "every file has a media type", "files lack media types"),
    ]);

    let (lint_ok, lint_note) = match (pkg.dockerfile(), lint) {
        (None, _) => (true, "no Dockerfile to lint"),
        (Some(_), _) if pkg.lint_acknowledged => (true, "lint findings acknowledged"),
        (Some(_), Some(r)) if !r.blocking => (true, "Dockerfile lint is non-blocking"),
        (Some(_), Some(_)) => (false, "Dockerfile has blocking lint findings"),
        (Some(_), None) => (false, "no lint report available"),
    };
    let reusable = LetterScore::from_checks(vec![
        check("R1-license", m.license.is_some(), "license present", "no license"),
        check("R2-run-sequence", pkg.run_sequence.is_some(), "execution commands captured", "no run sequence"),
        check("R3-dockerfile", pkg.dockerfile().is_some(), "Dockerfile present", "no Dockerfile"),
        FairCheck { check_id: "R4-lint".into(), passed: lint_ok, note: lint_note.into() },
    ]);

    Ok(FairReport { findable, accessible, interoperable, reusable })
}
