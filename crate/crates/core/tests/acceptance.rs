//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use repro_bridge::canonical;
use repro_bridge::dockerfile::{lint_source, Severity};
use repro_bridge::fair::{fair_report, BadgeKind, FairReport};
use repro_bridge::package::{
    create_package, parse_manifest, serialize_manifest, FileRole, NewFile, PackageMetadata, PersistentIdentifier,
};
use repro_bridge::runseq::{build_launch_plan, Phase, RunSequence, SequenceSource};
use reqwest::blocking::multipart::{Form, Part};

use common::*;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repro-bridge"))
}

fn lint_corpus() -> Outcome {
    let fixtures = lint_fixtures();
    let clean = fixtures.iter().filter(|(_, s)| s.is_none()).count();
    let seeded: BTreeSet<_> = fixtures.iter().filter_map(|(_, s)| s.clone()).collect();
    let all_rules: BTreeSet<_> = (1..=6).map(|i| format!("RB00{i}")).collect();
    check!(
        fixtures.len() == 12 && clean == 6 && seeded == all_rules,
        "corpus shape: {} files, {clean} clean, seeded {seeded:?}",
        fixtures.len()
    );

    let sources: Vec<_> = fixtures.iter().map(|(p, _)| std::fs::read_to_string(p).unwrap()).collect();
    let start = Instant::now();
    let reports: Vec<_> = sources.iter().map(|s| lint_source(s)).collect();
    let elapsed = start.elapsed();
    for ((path, expected), report) in fixtures.iter().zip(&reports) {
        let name = path.file_name().unwrap().to_string_lossy();
        let report = report.as_ref().map_err(|e| format!("{name}: {e}"))?;
        let found: Vec<&str> = report.findings.iter().map(|f| f.rule_id.id()).collect();
        let want: Vec<&str> = expected.iter().map(String::as_str).collect();
        check!(found == want, "{name}: expected {want:?}, got {found:?}");

        let blocking = report.findings.iter().any(|f| f.severity == Severity::Error);
        let code = bin().arg("lint").arg(path).output().unwrap().status.code();
        check!(code == Some(if blocking { 1 } else { 0 }), "{name}: lint exit {code:?}");
    }
    check!(elapsed < Duration::from_secs(1), "linting took {elapsed:?}");
    Ok(format!("12 Dockerfiles, exact rule ids, exit codes ok, lint {elapsed:.1?}"))
}

fn gate_files(dockerfile: &str) -> Vec<NewFile> {
    vec![
        NewFile::new("Dockerfile", dockerfile),
        NewFile::new("run.sh", "python main.py\n"),
        NewFile::new("main.py", "print('hello')\n"),
    ]
}

fn deposit_gate() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("store");
    let server = start_server(&root);
    let base = server.url();
    let clean = std::fs::read_to_string(fixture_dir().join("clean-01-python.Dockerfile")).unwrap();
    deposit_published(&base, &metadata("Existing package"), &gate_files(&clean));

    let seeded = std::fs::read_to_string(fixture_dir().join("seeded-rb002-hostpath.Dockerfile")).unwrap();
    let meta = metadata("Host path package");
    let before = tree_hash(&root);
    let (status, body) = deposit(&base, &meta, &gate_files(&seeded), false);
    let after = tree_hash(&root);
    check!(status == 409, "unacknowledged deposit returned {status}");
    let rules: Vec<_> = body["findings"].as_array().unwrap().iter().map(|f| f["ruleId"].as_str().unwrap()).collect();
    check!(rules.contains(&"RB002"), "409 body lacks RB002: {body}");
    check!(before == after, "store changed after a blocked deposit");

    let (status, body) = deposit(&base, &meta, &gate_files(&seeded), true);
    check!(status == 201, "acknowledged deposit returned {status}: {body}");
    let resp = http()
        .get(format!("{base}/api/packages/{}", suffix(&body["id"])))
        .header("X-Draft-Token", body["draftToken"].as_str().unwrap())
        .send()
        .unwrap();
    let pkg = parse_manifest(&resp.bytes().unwrap()).map_err(|e| e.to_string())?;
    check!(pkg.lint_acknowledged, "manifest does not record lintAcknowledged");
    Ok("409 with RB002, store tree hash unchanged; acknowledged deposit 201 with lintAcknowledged".into())
}

const ZIP_ORACLE: &str = r#"
import hashlib, json, sys, zipfile
z = zipfile.ZipFile(sys.argv[1])
m = json.loads(z.read("manifest.json"))
names = {n for n in z.namelist() if not n.endswith("/")}
expected = {"manifest.json", "launch-plan.json"} | {"files/" + f["path"] for f in m["files"]}
bad = [f["path"] for f in m["files"] if hashlib.sha256(z.read("files/" + f["path"])).hexdigest() != f["checksum"]]
print(len(m["files"]), len(bad), names == expected)
"#;

fn round_trip() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let server = start_server(&tmp.path().join("store"));
    let base = server.url();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut files = vec![
        NewFile::new("Dockerfile", std::fs::read(fixture_dir().join("clean-01-python.Dockerfile")).unwrap()),
        NewFile::new(
            "run.sh",
            "#!/bin/sh\npython code/m000.py\npython code/m001.py\nRscript code/fig.R\npython code/m002.py --all\nmake tables\n",
        ),
    ];
    for i in 0..98 {
        let mut bytes = vec![0u8; 100_000];
        rng.fill(&mut bytes[..]);
        let path = match i % 4 {
            0 => format!("code/m{i:03}.py"),
            1 => format!("data/raw/part-{i:03}.csv"),
            2 => format!("data/derived/part-{i:03}.dat"),
            _ => format!("docs/appendix-{i:03}.txt"),
        };
        let f = NewFile::new(path, bytes);
        files.push(if i == 3 { f.with_role(FileRole::Data) } else { f });
    }

    let start = Instant::now();
    let id = deposit_published(&base, &metadata("Hundred file package").with_keywords(["bulk"]), &files);
    let original = manifest(&base, &id, None);
    let bundle = get(format!("{base}/api/packages/{id}/explore")).bytes().unwrap().to_vec();
    let form = Form::new()
        .part("bundle", Part::bytes(bundle.clone()).file_name("bundle.zip"))
        .text("originPlatform", "whole-tale-like");
    let (status, body) = status_json(http().post(format!("{base}/api/import")).multipart(form).send().unwrap());
    let elapsed = start.elapsed();
    check!(status == 201, "import returned {status}: {body}");
    let imported = manifest(&base, &suffix(&body["id"]), None);

    check!(
        original.files.len() == 100 && imported.files.len() == 100,
        "file counts {} / {}",
        original.files.len(),
        imported.files.len()
    );
    for f in &original.files {
        let g = imported.file(f.path.as_str()).ok_or(format!("{} missing after import", f.path))?;
        check!(g.checksum == f.checksum && g.role == f.role, "{} differs after import", f.path);
    }
    let steps = |s: &Option<RunSequence>| {
        s.as_ref().map(|s| s.commands.iter().map(|c| (c.phase, c.command.clone())).collect::<Vec<_>>())
    };
    check!(
        steps(&original.run_sequence).is_some_and(|s| s.len() == 5),
        "original sequence {:?}",
        original.run_sequence
    );
    check!(steps(&original.run_sequence) == steps(&imported.run_sequence), "run sequences differ");
    check!(
        imported.run_sequence.as_ref().unwrap().source == SequenceSource::PlatformImport,
        "imported sequence source"
    );
    let cert = imported.badges.iter().find(|b| b.kind == BadgeKind::ReproducibilityCertification);
    check!(
        cert.is_some_and(|b| b.origin_platform.as_deref() == Some("whole-tale-like")),
        "certification badge: {:?}",
        imported.badges
    );

    let zip_path = tmp.path().join("bundle.zip");
    std::fs::write(&zip_path, &bundle).unwrap();
    let out = Command::new("python3")
        .arg("-c")
        .arg(ZIP_ORACLE)
        .arg(&zip_path)
        .output()
        .map_err(|e| format!("python3: {e}"))?;
    let verdict = String::from_utf8_lossy(&out.stdout).trim().to_string();
    check!(verdict == "100 0 True", "independent zip check: {verdict:?} {}", String::from_utf8_lossy(&out.stderr));
    check!(elapsed < Duration::from_secs(10), "round trip took {elapsed:?}");
    Ok(format!(
        "100 files / {:.1} MB equal after import, certified, python zip+sha256 oracle agrees, {elapsed:.1?}",
        bundle.len() as f64 / 1e6
    ))
}

fn post_version(base: &str, id: &str, files: &[NewFile]) -> (u16, serde_json::Value) {
    status_json(
        http().post(format!("{base}/api/packages/{id}/versions")).multipart(form(None, files, &[])).send().unwrap(),
    )
}

fn provenance_chain() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let server = start_server(&tmp.path().join("store"));
    let base = server.url();
    let id = deposit_published(&base, &metadata("Chain"), &[NewFile::new("data/x.csv", "v,1\n")]);
    for v in 2..=5u32 {
        let (status, body) = post_version(&base, &id, &[NewFile::new("data/x.csv", format!("v,{v}\n"))]);
        check!(status == 201 && body["version"] == v, "version {v}: {status} {body}");
        let (status, _) = publish(&base, &id, Some(v));
        check!(status == 200, "publish v{v}: {status}");
    }
    let pid = PersistentIdentifier::from_route(&id).unwrap();
    let versions = server.service().store().versions(&pid);
    check!(versions == vec![1, 2, 3, 4, 5], "stored versions {versions:?}");
    check!(get(format!("{base}/api/packages/{id}?version=6")).status().as_u16() == 404, "v6 exists");

    let mut visited = Vec::new();
    let mut current = manifest(&base, &id, Some(5));
    while let Some(from) = current.provenance.derived_from.clone() {
        check!(from.id == pid && visited.len() < 5, "chain leaves the package or loops: {from:?}");
        visited.push(from.version);
        current = manifest(&base, &id, Some(from.version));
    }
    check!(visited == vec![4, 3, 2, 1], "derivedFrom walk {visited:?}");
    Ok("versions {1..5}; derivedFrom walk 5 -> 4,3,2,1 terminates".into())
}

fn findability() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("store");
    let server = start_server(&root);
    let base = server.url();
    let mut ids = Vec::new();
    for i in 0..20 {
        let mut keywords = vec![format!("topic{i:02}q")];
        if i % 3 == 0 {
            keywords.push("wetland".into());
        }
        let meta = metadata(&format!("Survey number {i}")).with_keywords(keywords);
        let files = [
            NewFile::new(format!("data/obs-k{i:02}x.csv"), format!("n\n{i}\n")),
            NewFile::new("README.md", "shared readme\n"),
        ];
        ids.push(PersistentIdentifier::from_route(&deposit_published(&base, &meta, &files)).unwrap().to_string());
    }
    let hit_ids = |hits: &[serde_json::Value]| {
        hits.iter().map(|h| h["id"].as_str().unwrap().to_string()).collect::<BTreeSet<_>>()
    };

    let mut queries: Vec<String> = (0..20).map(|i| format!("obs-k{i:02}x.csv")).collect();
    queries.push("wetland".into());
    let before: Vec<_> = queries.iter().map(|q| search(&base, q)).collect();
    let mut exact = 0;
    for (i, hits) in before.iter().take(20).enumerate() {
        if hit_ids(hits) == BTreeSet::from([ids[i].clone()]) {
            exact += 1;
        }
    }
    check!(exact == 20, "exact filename queries {exact}/20");
    let want: BTreeSet<_> = (0..20).filter(|i| i % 3 == 0).map(|i| ids[i].clone()).collect();
    let wetland = &before[20];
    check!(hit_ids(wetland) == want && wetland.iter().all(|h| h["kind"] == "package"), "keyword query: {wetland:?}");

    drop(server);
    let server = start_server(&root);
    let after: Vec<_> = queries.iter().map(|q| search(&server.url(), q)).collect();
    check!(before == after, "results changed after restart");
    Ok(format!("filename queries 20/20 exact, keyword query {} packages, identical after restart", want.len()))
}

fn manifest_canonicalization() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let cases = AtomicUsize::new(0);
    runner
        .run(&arb_spec(), |spec| {
            cases.fetch_add(1, Ordering::Relaxed);
            let pkg = spec.build();
            let bytes = serialize_manifest(&pkg);
            prop_assert_eq!(&bytes, &serialize_manifest(&spec.build()));
            prop_assert!(canonical::is_canonical(&bytes));
            let parsed = parse_manifest(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(parsed, pkg);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let n = cases.into_inner();
    check!(n >= 1000, "only {n} cases ran");
    Ok(format!("{n} random packages: deterministic bytes, parse(serialize(p)) == p"))
}

fn concurrency() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let server = start_server(&tmp.path().join("store"));
    let base = Arc::new(server.url());
    let id = Arc::new(deposit_published(&base, &metadata("Busy"), &[NewFile::new("data/x.csv", "a,b\n1,2\n")]));

    let downloads: Vec<_> = (0..32)
        .map(|_| {
            let (base, id) = (base.clone(), id.clone());
            std::thread::spawn(move || get(format!("{base}/api/packages/{id}/files/data/x.csv")).status().as_u16())
        })
        .collect();
    let ok = downloads.into_iter().map(|h| h.join().unwrap()).filter(|s| *s == 200).count();
    let (_, metrics) = status_json(get(format!("{base}/api/packages/{id}/metrics")));
    let count = metrics["perFileDownloads"]["data/x.csv"].as_u64();
    check!(ok == 32 && count == Some(32), "{ok} downloads succeeded, counter {count:?}");

    let conflicts = Arc::new(AtomicUsize::new(0));
    let writers: Vec<_> = (0..8)
        .map(|w| {
            let (base, id, conflicts) = (base.clone(), id.clone(), conflicts.clone());
            std::thread::spawn(move || -> Result<u64, String> {
                for attempt in 0..2000 {
                    let (status, body) =
                        post_version(&base, &id, &[NewFile::new(format!("data/w{w}.csv"), format!("{attempt}\n"))]);
                    match status {
                        201 => {
                            let v = body["version"].as_u64().unwrap();
                            let (status, _) = publish(&base, &id, Some(v as u32));
                            return if status == 200 { Ok(v) } else { Err(format!("publish v{v}: {status}")) };
                        }
                        409 => {
                            conflicts.fetch_add(1, Ordering::Relaxed);
                            std::thread::sleep(Duration::from_millis(2 + (w as u64 * 3) % 7));
                        }
                        other => return Err(format!("writer {w}: {other} {body}")),
                    }
                }
                Err(format!("writer {w} never got a version"))
            })
        })
        .collect();
    let mut created = Vec::new();
    for h in writers {
        created.push(h.join().unwrap()?);
    }
    created.sort_unstable();
    check!(created == (2..=9).collect::<Vec<u64>>(), "created versions {created:?}");
    let pid = PersistentIdentifier::from_route(&id).unwrap();
    check!(server.service().store().versions(&pid) == (1..=9).collect::<Vec<u32>>(), "stored versions");
    for v in 2..=9 {
        let from = manifest(&base, &id, Some(v)).provenance.derived_from.map(|r| r.version);
        check!(from == Some(v - 1), "v{v} derived from {from:?}");
    }
    Ok(format!(
        "32 concurrent downloads -> counter 32; 8 writers -> versions 2..9 after {} retried conflicts",
        conflicts.load(Ordering::Relaxed)
    ))
}

fn launch_plan() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    let seen_k = Arc::new(std::sync::Mutex::new(BTreeSet::new()));
    let strategy = (
        prop::collection::vec("[a-z][a-z0-9 ._-]{0,20}[a-z0-9]", 1..=20),
        prop::collection::vec("[a-z][a-z0-9 ._-]{0,20}[a-z0-9]", 0..3),
        any::<u64>(),
    );
    let k_seen = seen_k.clone();
    runner
        .run(&strategy, move |(inside, outside, seed)| {
            k_seen.lock().unwrap().insert(inside.len());
            // Interleave the manual outside steps at seeded positions.
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut steps: Vec<(Phase, &str)> = inside.iter().map(|c| (Phase::Inside, c.as_str())).collect();
            let mut slots: Vec<usize> = outside.iter().map(|_| rng.random_range(0..=inside.len())).collect();
            slots.sort_unstable();
            for (j, (o, slot)) in outside.iter().zip(slots).enumerate() {
                steps.insert(slot + j, (Phase::Outside, o.as_str()));
            }
            let mut pkg = create_package(
                PackageMetadata::new("Plan", vec!["P, P.".into()]),
                &[NewFile::new("Dockerfile", "FROM python:3.11-slim\n"), NewFile::new("main.py", "")],
            )
            .unwrap();
            pkg.run_sequence =
                Some(RunSequence::from_steps(steps.iter().copied(), "sh", SequenceSource::Manual).unwrap());
            let plan = build_launch_plan(&pkg).unwrap();

            let phases: Vec<Phase> = plan.steps().map(|(p, _)| p).collect();
            let first_inside = phases.iter().position(|p| *p == Phase::Inside).unwrap();
            prop_assert!(phases[first_inside..].iter().all(|p| *p == Phase::Inside));
            prop_assert_eq!(&plan.inside, &inside);
            prop_assert_eq!(plan.outside.len(), outside.len() + 2);
            prop_assert_eq!(&plan.outside[1..=outside.len()], &outside[..]);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let seen = seen_k.lock().unwrap();
    Ok(format!(
        "256 random plans, k in [{}, {}]: outside before inside, inside order preserved",
        seen.first().unwrap(),
        seen.last().unwrap()
    ))
}

fn scores(r: &FairReport) -> [f64; 4] {
    r.letters().map(|(_, s)| s.score)
}

fn fair_monotonicity() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 100, failure_persistence: None, ..Config::default() });
    let cases = AtomicUsize::new(0);
    runner
        .run(&arb_spec(), |mut spec| {
            cases.fetch_add(1, Ordering::Relaxed);
            spec.publish = true;
            spec.meta.license = None;
            spec.steps = None;
            spec.files.retain(|f| f.path != "run.sh");
            let lint = |p: &repro_bridge::package::ReplicationPackage| {
                p.dockerfile().map(|d| {
                    let src = spec.files.iter().find(|f| f.path == d.path.as_str()).unwrap();
                    lint_source(std::str::from_utf8(&src.bytes).unwrap()).unwrap()
                })
            };
            let report =
                |p: &repro_bridge::package::ReplicationPackage| scores(&fair_report(p, lint(p).as_ref()).unwrap());

            let base = spec.build();
            let mut licensed = base.clone();
            licensed.metadata.license = Some("CC-BY-4.0".into());
            let mut sequenced = base.clone();
            sequenced.run_sequence =
                Some(RunSequence::from_steps([(Phase::Inside, "make all")], "sh", SequenceSource::Manual).unwrap());
            let mut both = licensed.clone();
            both.run_sequence = sequenced.run_sequence.clone();

            let b = report(&base);
            for variant in [&licensed, &sequenced, &both] {
                let v = report(variant);
                prop_assert!(v.iter().zip(&b).all(|(after, before)| after >= before), "{:?} -> {:?}", b, v);
            }

            // Fully equipped: license, keywords, Dockerfile, run sequence.
            let mut full = spec.clone();
            full.meta.license = Some("CC0-1.0".into());
            if full.meta.keywords.is_empty() {
                full.meta.keywords.push("replication".into());
            }
            if !full.files.iter().any(|f| f.path == "Dockerfile") {
                full.files.push(NewFile::new("Dockerfile", "FROM python:3.11-slim\nWORKDIR /workspace\nCOPY . .\n"));
            }
            full.steps = Some(vec![(Phase::Inside, "python main.py".into())]);
            let spec_full = full.clone();
            let pkg = full.build();
            let lint = pkg.dockerfile().map(|d| {
                let src = spec_full.files.iter().find(|f| f.path == d.path.as_str()).unwrap();
                lint_source(std::str::from_utf8(&src.bytes).unwrap()).unwrap()
            });
            let s = scores(&fair_report(&pkg, lint.as_ref()).unwrap());
            prop_assert_eq!(s, [1.0; 4]);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} random packages: license/run sequence never lower a letter; equipped packages score 1.0 x4",
        cases.into_inner()
    ))
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("lint corpus", lint_corpus),
        ("deposit gate", deposit_gate),
        ("explore/import round trip", round_trip),
        ("provenance chain", provenance_chain),
        ("findability", findability),
        ("manifest canonicalization", manifest_canonicalization),
        ("concurrency", concurrency),
        ("launch plan ordering", launch_plan),
        ("FAIR monotonicity", fair_monotonicity),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{took:.1?}]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{took:.1?}]", n + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.1?}", criteria.len() - failed, criteria.len(), total.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
