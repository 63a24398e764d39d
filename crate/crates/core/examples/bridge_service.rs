//! Run the bridge service in-process and walk a package through deposit,
//! publish, explore, import, a new version, search, and metrics.

use std::error::Error;

use repro_bridge::cli::{Client, ClientError, Upload};
use repro_bridge::package::{NewFile, PackageMetadata};
use repro_bridge::service::{BackgroundServer, DepositReceipt, ImportReceipt, ServiceConfig};

const GOOD_DOCKERFILE: &str = "FROM python:3.11-slim\nWORKDIR /workspace\nCOPY . .\nRUN pip install numpy==1.26.4\n";
const HOST_PATH_DOCKERFILE: &str = "FROM python:3.11-slim\nWORKDIR /workspace\nCOPY /home/alice/project .\n";

fn upload(dockerfile: &str, acknowledged: bool) -> Upload {
    let meta = PackageMetadata::new("Rainfall and crop yields", vec!["Moe, M.".into()])
        .with_keywords(["agriculture", "climate"])
        .with_license("CC-BY-4.0");
    Upload {
        metadata: Some(serde_json::to_vec(&meta).expect("metadata serializes")),
        files: vec![
            NewFile::new("Dockerfile", dockerfile),
            NewFile::new("run.sh", "python yields.py\n"),
            NewFile::new("yields.py", "print('ok')\n"),
            NewFile::new("data/rainfall.csv", "year,mm\n2020,812\n"),
        ],
        acknowledged,
        ..Default::default()
    }
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let store = std::env::temp_dir().join(format!("repro-bridge-example-{}", std::process::id()));
    let config = ServiceConfig::new(&store).with_listen("127.0.0.1:0".parse()?);
    let server = BackgroundServer::start(config)?;
    let client = Client::new(&server.url())?;
    println!("service at {}", server.url());

    match client.deposit(upload(HOST_PATH_DOCKERFILE, false)) {
        Err(ClientError::Blocked(report)) => println!("host-path Dockerfile blocked: {:?}", report.rules()),
        other => return Err(format!("expected a gate denial, got {other:?}").into()),
    }

    let receipt: DepositReceipt = Client::parse(&client.deposit(upload(GOOD_DOCKERFILE, false))?)?;
    let id = receipt.id.to_string();
    println!("deposited {id} as draft v{}", receipt.version);
    client.publish(&id, None)?;

    let bundle = client.explore(&id, None)?;
    println!("explore bundle: {} bytes", bundle.len());
    let imported: ImportReceipt = Client::parse(&client.import(bundle, "whole-tale-like", None)?)?;
    println!("re-imported as {} with {} badges", imported.id, imported.badges.len());

    let update = Upload {
        files: vec![NewFile::new("data/rainfall.csv", "year,mm\n2020,812\n2021,790\n")],
        ..Default::default()
    };
    let v2: DepositReceipt = Client::parse(&client.new_version(&id, update)?)?;
    client.publish(&id, Some(v2.version))?;
    println!("published v{}", v2.version);

    let file = client.file(&id, "data/rainfall.csv", None)?;
    println!("latest rainfall.csv: {} bytes", file.len());
    println!("search 'rainfall': {}", String::from_utf8(client.search("rainfall")?)?);
    println!("metrics: {}", String::from_utf8(client.metrics(&id)?)?.trim_end());

    drop(server);
    std::fs::remove_dir_all(&store)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
