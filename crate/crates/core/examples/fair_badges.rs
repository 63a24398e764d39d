//! Score a published package against the FAIR rubric, award badges, and
//! count usage.

use std::error::Error;

use repro_bridge::cli::{render_report, OutputMode, Report};
use repro_bridge::dockerfile::lint_source;
use repro_bridge::fair::{
    assign_badges, fair_report, index_entries, record_event, KnownPlatforms, MetricCounters, MetricEvent,
};
use repro_bridge::package::{create_package, NewFile, PackageMetadata, Timestamp};

const DOCKERFILE: &str = "FROM rocker/r-ver:4.3.2\nWORKDIR /workspace\nCOPY . .\n";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let bare = create_package(
        PackageMetadata::new("Untitled replication files", vec!["Roe, R.".into()]),
        &[NewFile::new("results.csv", "x,y\n1,2\n")],
    )?
    .publish()?;

    let complete = create_package(
        PackageMetadata::new("School choice and test scores", vec!["Roe, R.".into()])
            .with_keywords(["education", "lottery"])
            .with_license("CC0-1.0"),
        &[
            NewFile::new("data/lottery.csv", "id,won\n1,0\n2,1\n"),
            NewFile::new("code/estimate.R", "summary(read.csv('data/lottery.csv'))\n"),
            NewFile::new("Dockerfile", DOCKERFILE),
            NewFile::new("run.sh", "Rscript code/estimate.R\n"),
        ],
    )?
    .publish()?;

    let lint = lint_source(DOCKERFILE)?;
    for (name, pkg, lint) in [("bare", &bare, None), ("complete", &complete, Some(&lint))] {
        let report = fair_report(pkg, lint)?;
        println!("== {name}");
        print!("{}", String::from_utf8(render_report(Report::Fair(&report), OutputMode::Text))?);
    }

    let mut pkg = complete;
    pkg.badges = assign_badges(&pkg, &KnownPlatforms::default(), Timestamp::now())?;
    for b in &pkg.badges {
        println!("badge {:?} awarded {}", b.kind, b.awarded_at);
    }

    let mut counters = MetricCounters::for_package(&pkg);
    for event in [
        MetricEvent::FileDownload("data/lottery.csv".into()),
        MetricEvent::FileDownload("data/lottery.csv".into()),
        MetricEvent::Explore,
        MetricEvent::AccessRequest,
    ] {
        counters = record_event(&counters, &event)?;
    }
    println!("{}", String::from_utf8(counters.to_canonical_json())?.trim_end());

    for entry in index_entries(&pkg)? {
        println!("index {:?}: {}", entry.kind, entry.text.replace('\n', " | "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
