//! Assemble a package directory offline, the way the `package-*`
//! subcommands do, then validate it.

use std::error::Error;

use repro_bridge::cli::run;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("repro-bridge-local-{}", std::process::id()));
    let src = dir.join("src");
    std::fs::create_dir_all(&src)?;
    std::fs::write(src.join("Dockerfile"), "FROM r-base\nCOPY . .\n")?;
    std::fs::write(src.join("run.sh"), "Rscript fit.R\n")?;
    std::fs::write(src.join("fit.R"), "print(1)\n")?;
    let pkg = dir.join("pkg");
    let (pkg, src) = (pkg.to_string_lossy().into_owned(), src.to_string_lossy().into_owned());

    let steps: [Vec<String>; 5] = [
        vec![
            "package-init".into(),
            pkg.clone(),
            "--title".into(),
            "Fit check".into(),
            "--author".into(),
            "Lo, L.".into(),
        ],
        vec![
            "package-add".into(),
            pkg.clone(),
            format!("{src}/Dockerfile"),
            format!("{src}/run.sh"),
            format!("{src}/fit.R"),
        ],
        vec!["package-set-run".into(), pkg.clone(), "--step".into(), "inside:Rscript fit.R".into()],
        vec!["package-validate".into(), pkg.clone()],
        vec!["lint".into(), format!("{src}/Dockerfile")],
    ];
    for args in steps {
        println!("$ repro-bridge {}", args.join(" "));
        let argv = std::iter::once("repro-bridge".to_string()).chain(args);
        let code = run(argv, &mut std::io::stdout(), &mut std::io::stderr());
        println!("(exit {code})");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
