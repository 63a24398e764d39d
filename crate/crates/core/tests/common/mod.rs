//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use repro_bridge::fair::{assign_badges, KnownPlatforms};
use repro_bridge::package::{
    create_package_with_id, FileRole, NewFile, PackageMetadata, PersistentIdentifier, ProvenanceRecord,
    ReplicationPackage, Timestamp, VersionRef,
};
use repro_bridge::runseq::{Phase, RunSequence, SequenceSource};
use repro_bridge::service::{BackgroundServer, ServiceConfig};
use reqwest::blocking::multipart::{Form, Part};
use reqwest::blocking::Client;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/lint")
}

/// `(file name, seeded rule id)` for every lint fixture; clean ones have `None`.
pub fn lint_fixtures() -> Vec<(PathBuf, Option<String>)> {
    let mut out: Vec<_> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "Dockerfile"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let seeded = name.strip_prefix("seeded-").map(|rest| rest[..5].to_ascii_uppercase());
            (p, seeded)
        })
        .collect();
    out.sort();
    out
}

pub fn start_server(root: &Path) -> BackgroundServer {
    let config = ServiceConfig::new(root).with_listen("127.0.0.1:0".parse().unwrap());
    BackgroundServer::start(config).expect("server starts")
}

pub fn http() -> Client {
    Client::builder().timeout(None).build().unwrap()
}

pub fn metadata(title: &str) -> PackageMetadata {
    PackageMetadata::new(title, vec!["Tester, T.".into()]).with_license("CC-BY-4.0")
}

/// A multipart deposit form; `roles` are sent for files that declare one.
pub fn form(meta: Option<&PackageMetadata>, files: &[NewFile], removals: &[&str]) -> Form {
    let mut form = Form::new();
    if let Some(m) = meta {
        form = form.part("metadata", Part::bytes(serde_json::to_vec(m).unwrap()));
    }
    let roles: BTreeMap<&str, FileRole> = files.iter().filter_map(|f| f.role.map(|r| (f.path.as_str(), r))).collect();
    for f in files {
        form = form.part("file", Part::bytes(f.bytes.clone()).file_name(f.path.clone()));
    }
    if !roles.is_empty() {
        form = form.part("roles", Part::bytes(serde_json::to_vec(&roles).unwrap()));
    }
    for r in removals {
        form = form.text("remove", r.to_string());
    }
    form
}

/// Status and JSON body (or `Null` for non-JSON bodies).
pub fn status_json(resp: reqwest::blocking::Response) -> (u16, Value) {
    let status = resp.status().as_u16();
    let bytes = resp.bytes().unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub fn deposit(base: &str, meta: &PackageMetadata, files: &[NewFile], ack: bool) -> (u16, Value) {
    let resp = http()
        .post(format!("{base}/api/packages"))
        .header("X-Repro-Acknowledge", if ack { "1" } else { "0" })
        .multipart(form(Some(meta), files, &[]))
        .send()
        .unwrap();
    status_json(resp)
}

pub fn suffix(id: &Value) -> String {
    id.as_str().unwrap().rsplit('/').next().unwrap().to_string()
}

pub fn publish(base: &str, suffix: &str, version: Option<u32>) -> (u16, Value) {
    let mut req = http().post(format!("{base}/api/packages/{suffix}/publish"));
    if let Some(v) = version {
        req = req.query(&[("version", v)]);
    }
    status_json(req.send().unwrap())
}

/// Deposits and publishes; returns the id suffix.
pub fn deposit_published(base: &str, meta: &PackageMetadata, files: &[NewFile]) -> String {
    let (status, body) = deposit(base, meta, files, false);
    assert_eq!(status, 201, "{body}");
    let s = suffix(&body["id"]);
    let (status, body) = publish(base, &s, None);
    assert_eq!(status, 200, "{body}");
    s
}

pub fn get(url: String) -> reqwest::blocking::Response {
    http().get(url).send().unwrap()
}

pub fn manifest(base: &str, suffix: &str, version: Option<u32>) -> ReplicationPackage {
    let mut url = format!("{base}/api/packages/{suffix}");
    if let Some(v) = version {
        url.push_str(&format!("?version={v}"));
    }
    let resp = get(url);
    assert_eq!(resp.status().as_u16(), 200);
    repro_bridge::package::parse_manifest(&resp.bytes().unwrap()).expect("served manifest parses")
}

pub fn search(base: &str, q: &str) -> Vec<Value> {
    let resp = http().get(format!("{base}/api/search")).query(&[("q", q)]).send().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    serde_json::from_slice::<Vec<Value>>(&resp.bytes().unwrap()).unwrap()
}

/// Digest over every path (files and directories) under `root` and the
/// bytes of every file.
pub fn tree_hash(root: &Path) -> String {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Option<Vec<u8>>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            if path.is_dir() {
                out.push((rel, None));
                walk(&path, root, out);
            } else {
                out.push((rel, Some(std::fs::read(&path).unwrap())));
            }
        }
    }
    let mut entries = Vec::new();
    walk(root, root, &mut entries);
    entries.sort();
    let mut h = Sha256::new();
    for (path, bytes) in entries {
        h.update(path.as_bytes());
        h.update([0]);
        match bytes {
            Some(b) => {
                h.update(b"f");
                h.update((b.len() as u64).to_le_bytes());
                h.update(&b);
            }
            None => h.update(b"d"),
        }
    }
    hex::encode(h.finalize())
}

// ---- random packages ----

pub fn arb_role() -> impl Strategy<Value = Option<FileRole>> {
    prop_oneof![
        3 => Just(None),
        1 => prop::sample::select(vec![FileRole::Data, FileRole::Code, FileRole::Documentation, FileRole::Other]).prop_map(Some),
    ]
}

pub fn arb_metadata() -> impl Strategy<Value = PackageMetadata> {
    (
        "[A-Z][A-Za-z0-9 ,.:'-]{0,40}",
        prop::collection::vec("[A-Z][a-z]{1,10}, [A-Z]\\.", 1..4),
        prop::collection::btree_set("[a-z]{2,10}( [a-z]{2,8})?", 0..5),
        "\\PC{0,60}",
        prop::option::of(prop::sample::select(vec!["CC-BY-4.0", "CC0-1.0", "MIT", "GPL-3.0-or-later"])),
    )
        .prop_map(|(title, authors, keywords, description, license)| {
            let mut m = PackageMetadata::new(title, authors).with_keywords(keywords).with_description(description);
            m.license = license.map(str::to_string);
            m
        })
}

pub fn arb_files() -> impl Strategy<Value = Vec<NewFile>> {
    let path = "[a-z][a-z0-9_]{0,6}(/[a-z][a-z0-9_]{0,6}){0,2}\\.(csv|py|r|txt|json|dat|md|do)";
    (
        prop::collection::btree_map(path, (prop::collection::vec(any::<u8>(), 0..64), arb_role()), 1..8),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(files, dockerfile, runscript)| {
            let mut out: Vec<NewFile> = files
                .into_iter()
                .map(|(p, (bytes, role))| {
                    let f = NewFile::new(p, bytes);
                    match role {
                        Some(r) => f.with_role(r),
                        None => f,
                    }
                })
                .collect();
            if dockerfile {
                out.push(NewFile::new("Dockerfile", "FROM python:3.11-slim\nWORKDIR /workspace\nCOPY . .\n"));
            }
            if runscript {
                out.push(NewFile::new("run.sh", "#!/bin/sh\npython main.py\npython report.py\n"));
            }
            out
        })
}

pub fn arb_steps() -> impl Strategy<Value = Vec<(Phase, String)>> {
    prop::collection::vec(
        (prop::sample::select(vec![Phase::Inside, Phase::Outside]), "[a-z][a-z0-9 ./=_-]{0,30}[a-z0-9]"),
        1..6,
    )
}

pub fn arb_suffix() -> impl Strategy<Value = String> {
    "[0-9A-Z]{6}"
}

/// Everything needed to build one valid package, published or not.
#[derive(Debug, Clone)]
pub struct PackageSpec {
    pub suffix: String,
    pub meta: PackageMetadata,
    pub files: Vec<NewFile>,
    pub steps: Option<Vec<(Phase, String)>>,
    pub version: u32,
    pub derived: bool,
    pub origin: Option<String>,
    pub imported_at: Option<i64>,
    pub publish: bool,
    pub awarded_at: i64,
    pub lint_acknowledged: bool,
}

pub fn arb_spec() -> impl Strategy<Value = PackageSpec> {
    (
        arb_suffix(),
        arb_metadata(),
        arb_files(),
        prop::option::of(arb_steps()),
        1u32..6,
        any::<bool>(),
        prop::option::of(
            prop::sample::select(vec!["whole-tale-like", "binder-like", "lab-cluster"]).prop_map(str::to_string),
        ),
        prop::option::of(0i64..4_000_000_000),
        any::<bool>(),
        0i64..4_000_000_000,
        any::<bool>(),
    )
        .prop_map(
            |(suffix, meta, files, steps, version, derived, origin, imported_at, publish, awarded_at, ack)| {
                PackageSpec {
                    suffix,
                    meta,
                    files,
                    steps,
                    version,
                    derived,
                    origin,
                    imported_at,
                    publish,
                    awarded_at,
                    lint_acknowledged: ack,
                }
            },
        )
}

impl PackageSpec {
    pub fn build(&self) -> ReplicationPackage {
        let id = PersistentIdentifier::from_suffix(&self.suffix).unwrap();
        let mut pkg = create_package_with_id(id.clone(), self.meta.clone(), &self.files).expect("spec is valid");
        if let Some(steps) = &self.steps {
            let seq =
                RunSequence::from_steps(steps.iter().map(|(p, c)| (*p, c.as_str())), "sh", SequenceSource::Manual)
                    .unwrap();
            pkg.run_sequence = Some(seq);
        }
        pkg.version = self.version;
        pkg.lint_acknowledged = self.lint_acknowledged && pkg.dockerfile().is_some();
        pkg.provenance = ProvenanceRecord {
            derived_from: (self.derived && self.version > 1).then(|| VersionRef { id, version: self.version - 1 }),
            origin_platform: self.origin.clone(),
            imported_at: self.imported_at.map(Timestamp::from_unix),
        };
        if self.publish {
            pkg = pkg.publish().unwrap();
            pkg.badges =
                assign_badges(&pkg, &KnownPlatforms::default(), Timestamp::from_unix(self.awarded_at)).unwrap();
        }
        pkg
    }
}
