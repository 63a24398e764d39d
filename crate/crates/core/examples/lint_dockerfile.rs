//! Lint Dockerfiles for reproducibility problems and apply the deposit gate.
//!
//! `cargo run --example lint_dockerfile [path/to/Dockerfile]`

use std::error::Error;

use repro_bridge::cli::{render_report, OutputMode, Report};
use repro_bridge::dockerfile::{check_deposit_gate, lint_source, GateDecision};

const PINNED: &str = "\
FROM python:3.11-slim
WORKDIR /app
COPY requirements.txt .
RUN pip install --no-cache-dir numpy==1.26.4 pandas==2.2.2
COPY . .
";

const FRAGILE: &str = "\
FROM ubuntu
ENV API_TOKEN=changeme
COPY /home/alice/analysis ./analysis
ADD https://example.org/data.csv /data/
RUN apt-get update && apt-get install -y r-base
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (name, source) in [("pinned", PINNED), ("fragile", FRAGILE)] {
        let report = lint_source(source)?;
        println!("== {name}: {} findings, blocking={}", report.findings.len(), report.blocking);
        print!("{}", String::from_utf8(render_report(Report::Lint(&report), OutputMode::Text))?);

        match check_deposit_gate(&report, false) {
            GateDecision::Allow => println!("gate: allowed"),
            GateDecision::Deny(_) => {
                println!("gate: denied without confirmation");
                assert!(check_deposit_gate(&report, true).is_allowed());
                println!("gate: allowed once the depositor confirms");
            }
        }
    }

    if let Some(path) = std::env::args().nth(1) {
        let report = lint_source(&std::fs::read_to_string(&path)?)?;
        println!("== {path}");
        print!("{}", String::from_utf8(render_report(Report::Lint(&report), OutputMode::Json))?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
