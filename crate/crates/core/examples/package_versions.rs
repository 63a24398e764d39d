//! Assemble a replication package, serialize its manifest, and derive
//! versions that record where they came from.

use std::error::Error;

use repro_bridge::package::{
    create_package, new_version, parse_manifest, serialize_manifest, FileRole, NewFile, PackageMetadata, VersionChanges,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let meta = PackageMetadata::new("Minimum wage and employment", vec!["Card, D.".into(), "Krueger, A.".into()])
        .with_keywords(["labor", "minimum wage", "labor"])
        .with_license("CC-BY-4.0");
    let files = [
        NewFile::new("data/survey.csv", "store,fte\n1,20.5\n2,18.0\n"),
        NewFile::new("code/analysis.R", "d <- read.csv('data/survey.csv')\nsummary(d)\n"),
        NewFile::new("run.sh", "#!/bin/sh\nRscript code/analysis.R\n"),
        NewFile::new("notes/codebook.txt", "fte: full-time equivalents\n").with_role(FileRole::Documentation),
    ];
    let v1 = create_package(meta, &files)?;
    println!("{} v{} ({:?})", v1.id, v1.version, v1.state);
    for f in &v1.files {
        println!("  {:<20} {:<13} {} {}", f.path, format!("{:?}", f.role), &f.checksum.to_string()[..12], f.media_type);
    }
    println!("keywords after dedup: {:?}", v1.metadata.keywords);

    let manifest = serialize_manifest(&v1);
    assert_eq!(parse_manifest(&manifest)?, v1);
    println!("manifest: {} bytes, round-trips", manifest.len());

    // Versions derive from published ones only.
    let mut head = v1.publish()?;
    for round in 1..=3 {
        let changes = VersionChanges {
            replacements: vec![NewFile::new("data/survey.csv", format!("store,fte\n1,{}.0\n", 20 + round))],
            ..Default::default()
        };
        let next = new_version(&head, changes)?;
        let from = next.provenance.derived_from.as_ref().expect("versions record their base");
        println!("v{} derived from v{}", next.version, from.version);
        head = next.publish()?;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
