//! Capture execution commands from a run script or by hand, and turn them
//! into a launch plan for a reproducibility platform.

use std::error::Error;

use repro_bridge::package::{create_package, NewFile, PackageMetadata};
use repro_bridge::runseq::{build_launch_plan, emit_runseq_metadata, parse_run_script, set_manual_sequence, Phase};

const RUN_SCRIPT: &str = "\
#!/usr/bin/env bash
# rebuild every table
python prepare.py --input data/raw.csv \\
    --output data/clean.csv
python models.py
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let seq = parse_run_script(RUN_SCRIPT)?;
    println!("interpreter {}, {} commands", seq.interpreter, seq.commands.len());
    for c in &seq.commands {
        println!("  {} [{:?}] {}", c.index, c.phase, c.command);
    }

    let meta = PackageMetadata::new("Trade elasticities", vec!["Doe, J.".into()]);
    let pkg = create_package(
        meta,
        &[
            NewFile::new("Dockerfile", "FROM python:3.11-slim\nWORKDIR /workspace\nCOPY . .\n"),
            NewFile::new("run.sh", RUN_SCRIPT),
            NewFile::new("prepare.py", "print('prepare')\n"),
            NewFile::new("models.py", "print('models')\n"),
        ],
    )?;
    let plan = build_launch_plan(&pkg)?;
    println!("from run.sh:\n{}", String::from_utf8(plan.to_canonical_json())?);

    // A depositor can also enter the steps by hand, including host-side ones.
    let manual = set_manual_sequence(
        &pkg,
        &[
            (Phase::Outside, "fetch-data --dest data/"),
            (Phase::Inside, "python prepare.py"),
            (Phase::Inside, "python models.py --seed 7"),
        ],
    )?;
    let plan = build_launch_plan(&manual)?;
    for (i, step) in plan.outside.iter().enumerate() {
        println!("outside {i}: {step}");
    }
    for (i, step) in plan.inside.iter().enumerate() {
        println!("inside  {i}: {step}");
    }
    let metadata = emit_runseq_metadata(manual.run_sequence.as_ref().expect("set above"));
    println!("metadata: {metadata}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
