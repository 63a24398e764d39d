//! Build an explore bundle offline and read it back the way an importing
//! platform would, including an altered copy.

use std::error::Error;

use repro_bridge::package::{create_package, serialize_manifest, NewFile, PackageMetadata};
use repro_bridge::runseq::build_launch_plan;
use repro_bridge::service::{read_bundle, write_bundle};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let files = [
        NewFile::new("Dockerfile", "FROM julia:1.10.2\nWORKDIR /workspace\nCOPY . .\n"),
        NewFile::new("run.sh", "julia main.jl\n"),
        NewFile::new("main.jl", "println(sum(1:10))\n"),
    ];
    let pkg = create_package(PackageMetadata::new("Sum check", vec!["Poe, P.".into()]), &files)?.publish()?;
    let manifest = serialize_manifest(&pkg);
    let plan = build_launch_plan(&pkg).ok();

    let bundle = write_bundle::<_, std::io::Error>(&manifest, plan.as_ref(), &pkg.files, |entry| {
        Ok(files.iter().find(|f| f.path == entry.path.as_str()).expect("listed").bytes.clone())
    })?;
    println!("bundle: {} bytes", bundle.len());

    let parsed = read_bundle(&bundle, 1 << 20)?;
    println!("verified {} files; launch plan present: {}", parsed.files.len(), parsed.launch_plan.is_some());
    if let Some(plan) = &parsed.launch_plan {
        for step in plan.outside.iter().chain(&plan.inside) {
            println!("  {step}");
        }
    }

    // A platform that altered main.jl without updating the manifest.
    let altered = write_bundle::<_, std::io::Error>(&manifest, plan.as_ref(), &pkg.files, |entry| {
        let bytes = files.iter().find(|f| f.path == entry.path.as_str()).expect("listed").bytes.clone();
        Ok(if entry.path.as_str() == "main.jl" { b"println(sum(1:11))\n".to_vec() } else { bytes })
    })?;
    match read_bundle(&altered, 1 << 20) {
        Err(e) => println!("altered copy rejected: {e}"),
        Ok(_) => return Err("altered bundle was accepted".into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
