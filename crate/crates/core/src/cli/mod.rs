//! The `repro-bridge` command line: linting, offline package assembly, and
//! client commands against a running service.
//!
//! Exit codes: 0 success, 1 blocking lint findings (`lint`) or a gate
//! denial (`deposit`, `versions`), 2 usage or input error, 3 server or
//! network error.

mod client;
mod local;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use client::{Client, ClientError, Upload};
pub use local::{LocalError, LocalFile, LocalPackage, LOCAL_MANIFEST};

use crate::canonical;
use crate::dockerfile::{lint_source, LintReport};
use crate::fair::{FairReport, KnownPlatforms, MetricCounters};
use crate::package::{normalize_path, FileRole, NewFile, PackageMetadata, PersistentIdentifier};
use crate::runseq::{parse_run_script, Phase, RunSequence, SequenceSource};
use crate::service::{BackgroundServer, DepositReceipt, PublishReceipt, SearchHit, ServiceConfig, DEFAULT_LISTEN};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BLOCKED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SERVER: i32 = 3;

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8350";

#[derive(Debug, Parser)]
#[command(name = "repro-bridge", version, about = "Replication packages: lint, assemble, deposit, explore")]
pub struct Cli {
    /// Print machine-readable canonical JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Base URL of the bridge service.
    #[arg(long, global = true, env = "RB_SERVER_URL", default_value = DEFAULT_SERVER)]
    pub server: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lint a Dockerfile for reproducibility problems.
    Lint { dockerfile: PathBuf },
    /// Start a package directory.
    PackageInit(InitArgs),
    /// Add files to a package directory, copying them in if they live elsewhere.
    PackageAdd(AddArgs),
    /// Set or clear the package's run sequence.
    PackageSetRun(SetRunArgs),
    /// Check that a package directory would deposit cleanly.
    PackageValidate { dir: PathBuf },
    /// Run the bridge service until interrupted.
    Serve(ServeArgs),
    /// Deposit a package directory as a new draft.
    Deposit(DepositArgs),
    /// Publish a draft version.
    Publish(IdVersion),
    /// Download the explore bundle of a published version.
    Explore(ExploreArgs),
    /// Import a bundle from a reproducibility platform.
    Import(ImportArgs),
    /// Create a new draft version from the latest published one.
    Versions(VersionsArgs),
    /// Search published packages and files.
    Search { query: String },
    /// Show the FAIR report of a published version.
    Fair(IdVersion),
    /// Show usage counters.
    Metrics { id: String },
}

#[derive(Debug, Args)]
pub struct InitArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub title: String,
    #[arg(long = "author", required = true)]
    pub authors: Vec<String>,
    #[arg(long, default_value = "")]
    pub description: String,
    #[arg(long = "keyword")]
    pub keywords: Vec<String>,
    #[arg(long)]
    pub license: Option<String>,
}

#[derive(Debug, Args)]
pub struct AddArgs {
    pub dir: PathBuf,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Path inside the package (single file only).
    #[arg(long = "as")]
    pub as_path: Option<String>,
    #[arg(long)]
    pub role: Option<FileRole>,
}

#[derive(Debug, Args)]
pub struct SetRunArgs {
    pub dir: PathBuf,
    /// Parse the sequence from a run script inside the package.
    #[arg(long, conflicts_with_all = ["steps", "clear"])]
    pub script: Option<String>,
    /// A step as `inside:COMMAND` or `outside:COMMAND`, in order.
    #[arg(long = "step")]
    pub steps: Vec<String>,
    #[arg(long, default_value = "sh")]
    pub interpreter: String,
    #[arg(long, conflicts_with = "steps")]
    pub clear: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = DEFAULT_LISTEN)]
    pub listen: std::net::SocketAddr,
    /// Largest accepted upload, in bytes.
    #[arg(long)]
    pub size_cap: Option<u64>,
    /// Comma-separated platforms whose imports earn certification.
    #[arg(long)]
    pub known_platforms: Option<String>,
}

#[derive(Debug, Args)]
pub struct DepositArgs {
    pub dir: PathBuf,
    /// Confirm a Dockerfile with blocking findings.
    #[arg(long)]
    pub acknowledge: bool,
    /// Publish straight after depositing.
    #[arg(long)]
    pub publish: bool,
}

#[derive(Debug, Args)]
pub struct IdVersion {
    pub id: String,
    #[arg(long)]
    pub version: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    pub id: String,
    #[arg(long)]
    pub version: Option<u32>,
    /// Where to write the zip; defaults to `<suffix>.zip` here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub bundle: PathBuf,
    #[arg(long = "origin")]
    pub origin: String,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct VersionsArgs {
    pub id: String,
    /// Add or replace a file: `LOCAL` or `PATH=LOCAL`.
    #[arg(long = "add")]
    pub add: Vec<String>,
    #[arg(long = "remove")]
    pub remove: Vec<String>,
    /// JSON file with replacement metadata.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    #[arg(long)]
    pub acknowledge: bool,
    #[arg(long)]
    pub publish: bool,
}

/// A report accepted by [`render_report`].
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Lint(&'a LintReport),
    Fair(&'a FairReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Text,
    Json,
}

/// Renders a report: canonical JSON, or text with one finding per line.
pub fn render_report(report: Report<'_>, mode: OutputMode) -> Vec<u8> {
    match (report, mode) {
        (Report::Lint(r), OutputMode::Json) => r.to_canonical_json(),
        (Report::Fair(r), OutputMode::Json) => r.to_canonical_json(),
        (Report::Lint(r), OutputMode::Text) => {
            if r.findings.is_empty() {
                return b"no findings\n".to_vec();
            }
            let mut out = String::new();
            for f in &r.findings {
                out.push_str(&format!("{} {} L{}: {}\n", f.rule_id, f.severity, f.line, f.message));
            }
            out.into_bytes()
        }
        (Report::Fair(r), OutputMode::Text) => {
            let mut out = String::new();
            for (letter, score) in r.letters() {
                out.push_str(&format!("{letter} {}/{}\n", score.passed(), score.checks.len()));
                for c in &score.checks {
                    let mark = if c.passed { "pass" } else { "FAIL" };
                    out.push_str(&format!("  {mark} {}: {}\n", c.check_id, c.note));
                }
            }
            out.into_bytes()
        }
    }
}

/// A failed command: exit code plus a message for stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<LocalError> for Failure {
    fn from(e: LocalError) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx<'a> {
    mode: OutputMode,
    server: String,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn json(&self) -> bool {
        self.mode == OutputMode::Json
    }

    fn print(&mut self, bytes: &[u8]) {
        let _ = self.out.write_all(bytes);
    }

    fn line(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", text.as_ref());
    }

    fn note(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.err, "{}", text.as_ref());
    }

    fn client(&self) -> Result<Client, Failure> {
        Client::new(&self.server).map_err(|e| Failure { code: EXIT_SERVER, message: e.to_string() })
    }

    /// Maps a client error to an exit code, printing any lint report.
    fn client_failure(&mut self, e: ClientError) -> Failure {
        match e {
            ClientError::Blocked(report) => {
                let rendered = render_report(Report::Lint(&report), self.mode);
                if self.json() {
                    self.print(&rendered);
                } else {
                    let _ = self.err.write_all(&rendered);
                }
                Failure {
                    code: EXIT_BLOCKED,
                    message: "deposit blocked: fix the findings or confirm with --acknowledge".into(),
                }
            }
            ClientError::Rejected { .. } => Failure::usage(e.to_string()),
            ClientError::Server(_) => Failure { code: EXIT_SERVER, message: e.to_string() },
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let mode = if cli.json { OutputMode::Json } else { OutputMode::Text };
    let mut ctx = Ctx { mode, server: cli.server, out, err };
    match dispatch(cli.command, &mut ctx) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            ctx.note(format!("error: {}", f.message));
            f.code
        }
    }
}

fn dispatch(command: Command, ctx: &mut Ctx<'_>) -> CmdResult {
    match command {
        Command::Lint { dockerfile } => lint(&dockerfile, ctx),
        Command::PackageInit(a) => package_init(a, ctx),
        Command::PackageAdd(a) => package_add(a, ctx),
        Command::PackageSetRun(a) => package_set_run(a, ctx),
        Command::PackageValidate { dir } => package_validate(&dir, ctx),
        Command::Serve(a) => serve(a, ctx),
        Command::Deposit(a) => deposit(a, ctx),
        Command::Publish(a) => publish(&a.id, a.version, ctx),
        Command::Explore(a) => explore(a, ctx),
        Command::Import(a) => import(a, ctx),
        Command::Versions(a) => versions(a, ctx),
        Command::Search { query } => search(&query, ctx),
        Command::Fair(a) => fair(a, ctx),
        Command::Metrics { id } => metrics(&id, ctx),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn lint_text(path: &Path) -> Result<LintReport, Failure> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    lint_source(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn lint(path: &Path, ctx: &mut Ctx<'_>) -> CmdResult {
    let report = lint_text(path)?;
    ctx.print(&render_report(Report::Lint(&report), ctx.mode));
    if report.blocking {
        Err(Failure { code: EXIT_BLOCKED, message: format!("{}: blocking findings", path.display()) })
    } else {
        Ok(())
    }
}

fn package_init(a: InitArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let mut meta = PackageMetadata::new(a.title, a.authors).with_description(a.description).with_keywords(a.keywords);
    if let Some(l) = a.license {
        meta = meta.with_license(l);
    }
    let pkg = LocalPackage::init(&a.dir, meta)?;
    if ctx.json() {
        ctx.print(&canonical::to_vec(&pkg));
    } else {
        ctx.line(format!("initialized {}", LocalPackage::manifest_path(&a.dir).display()));
    }
    Ok(())
}

/// The package-relative path for `file`: its place under `dir` if it is
/// already there, otherwise its file name.
fn package_path_for(dir: &Path, file: &Path) -> Result<(String, bool), Failure> {
    let canon_dir = dir.canonicalize().map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let canon_file = file.canonicalize().map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
    if let Ok(rel) = canon_file.strip_prefix(&canon_dir) {
        return Ok((rel.to_string_lossy().into_owned(), true));
    }
    let name = file.file_name().ok_or_else(|| Failure::usage(format!("{}: not a file", file.display())))?;
    Ok((name.to_string_lossy().into_owned(), false))
}

fn package_add(a: AddArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    if a.as_path.is_some() && a.files.len() != 1 {
        return Err(Failure::usage("--as takes exactly one file"));
    }
    let mut pkg = LocalPackage::load(&a.dir)?;
    for file in &a.files {
        let (guessed, inside) = package_path_for(&a.dir, file)?;
        let target = a.as_path.clone().unwrap_or(guessed);
        let rel = normalize_path(&target).map_err(|e| Failure::usage(format!("{target}: {e}")))?;
        if rel.as_str() == LOCAL_MANIFEST {
            return Err(Failure::usage(format!("{LOCAL_MANIFEST} is reserved")));
        }
        let dest = a.dir.join(rel.as_str());
        let same = inside && dest.canonicalize().ok() == file.canonicalize().ok();
        if !same {
            if let Some(parent) = dest.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Failure::usage(format!("{}: {e}", parent.display())))?;
            }
            std::fs::copy(file, &dest).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
        }
        if !ctx.json() {
            ctx.line(format!("added {rel}"));
        }
        pkg.upsert(rel, a.role);
    }
    pkg.save(&a.dir)?;
    if ctx.json() {
        ctx.print(&canonical::to_vec(&pkg));
    }
    Ok(())
}

fn parse_step(raw: &str) -> Result<(Phase, String), Failure> {
    let (phase, cmd) =
        raw.split_once(':').ok_or_else(|| Failure::usage(format!("step {raw:?} must look like inside:COMMAND")))?;
    let phase: Phase = phase.trim().parse().map_err(|_| Failure::usage(format!("unknown phase {phase:?}")))?;
    Ok((phase, cmd.trim().to_string()))
}

fn package_set_run(a: SetRunArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let mut pkg = LocalPackage::load(&a.dir)?;
    let seq = if a.clear {
        None
    } else if let Some(script) = &a.script {
        let rel = normalize_path(script).map_err(|e| Failure::usage(format!("{script}: {e}")))?;
        let text = String::from_utf8(read(&a.dir.join(rel.as_str()))?)
            .map_err(|_| Failure::usage(format!("{script}: not UTF-8")))?;
        Some(parse_run_script(&text).map_err(|e| Failure::usage(format!("{script}: {e}")))?)
    } else {
        let steps = a.steps.iter().map(|s| parse_step(s)).collect::<Result<Vec<_>, _>>()?;
        let seq = RunSequence::from_steps(
            steps.iter().map(|(p, c)| (*p, c.as_str())),
            &a.interpreter,
            SequenceSource::Manual,
        )
        .map_err(|e| Failure::usage(e.to_string()))?;
        Some(seq)
    };
    pkg.run_sequence = seq;
    pkg.save(&a.dir)?;
    if ctx.json() {
        ctx.print(&canonical::to_vec(&pkg));
    } else {
        match &pkg.run_sequence {
            Some(s) => ctx.line(format!("run sequence: {} steps", s.commands.len())),
            None => ctx.line("run sequence cleared"),
        }
    }
    Ok(())
}

fn package_validate(dir: &Path, ctx: &mut Ctx<'_>) -> CmdResult {
    let local = LocalPackage::load(dir)?;
    let (pkg, files) = local.assemble(dir)?;
    let report = match pkg.dockerfile() {
        Some(entry) => {
            let bytes = files
                .iter()
                .find(|f| normalize_path(&f.path).is_ok_and(|p| p == entry.path))
                .map(|f| f.bytes.clone())
                .unwrap_or_default();
            let text = String::from_utf8(bytes).map_err(|_| Failure::usage("Dockerfile is not UTF-8"))?;
            Some(lint_source(&text).map_err(|e| Failure::usage(format!("{}: {e}", entry.path)))?)
        }
        None => None,
    };
    if ctx.json() {
        let summary = serde_json::json!({
            "files": pkg.files,
            "lintReport": report,
            "runSequence": pkg.run_sequence,
            "valid": true,
        });
        ctx.print(&canonical::to_vec(&summary));
    } else {
        ctx.line(format!("{}: {} files", dir.display(), pkg.files.len()));
        match &pkg.run_sequence {
            Some(s) => ctx.line(format!("run sequence: {} steps", s.commands.len())),
            None => ctx.line("run sequence: none"),
        }
        match &report {
            Some(r) => {
                let rendered = render_report(Report::Lint(r), OutputMode::Text);
                ctx.print(&rendered);
                if r.blocking {
                    ctx.note("deposit will need --acknowledge");
                }
            }
            None => ctx.line("no Dockerfile"),
        }
    }
    Ok(())
}

fn serve(a: ServeArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let mut config = ServiceConfig::new(&a.store).with_listen(a.listen);
    if let Some(cap) = a.size_cap {
        config = config.with_size_cap(cap);
    }
    if let Some(list) = &a.known_platforms {
        config.known_platforms = list.parse::<KnownPlatforms>().map_err(|e| Failure::usage(format!("{e}")))?;
    }
    let server = BackgroundServer::start(config).map_err(|e| Failure { code: EXIT_SERVER, message: e.to_string() })?;
    ctx.line(format!("listening on {}", server.url()));
    let _ = ctx.out.flush();
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure { code: EXIT_SERVER, message: e.to_string() })?;
    runtime.block_on(async {
        let _ = tokio::signal::ctrl_c().await;
    });
    drop(server);
    ctx.note("stopped");
    Ok(())
}

fn publish(id: &str, version: Option<u32>, ctx: &mut Ctx<'_>) -> CmdResult {
    let client = ctx.client()?;
    let body = client.publish(id, version).map_err(|e| ctx.client_failure(e))?;
    if ctx.json() {
        ctx.print(&body);
        return Ok(());
    }
    let receipt: PublishReceipt = Client::parse(&body).map_err(|e| ctx.client_failure(e))?;
    ctx.line(format!("{} v{} published", receipt.id, receipt.version));
    for b in &receipt.badges {
        let kind = serde_json::to_value(b.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        ctx.line(format!("badge {kind}"));
    }
    Ok(())
}

fn report_draft(body: &[u8], publish_after: bool, ctx: &mut Ctx<'_>) -> CmdResult {
    let receipt: DepositReceipt = Client::parse(body).map_err(|e| ctx.client_failure(e))?;
    if ctx.json() {
        ctx.print(body);
    } else {
        ctx.line(receipt.id.to_string());
        ctx.note(format!("draft version {}; draft token {}", receipt.version, receipt.draft_token));
        if !receipt.lint_report.findings.is_empty() {
            let rendered = render_report(Report::Lint(&receipt.lint_report), OutputMode::Text);
            let _ = ctx.err.write_all(&rendered);
        }
    }
    if publish_after {
        let client = ctx.client()?;
        let body = client.publish(&receipt.id.to_string(), Some(receipt.version)).map_err(|e| ctx.client_failure(e))?;
        if ctx.json() {
            ctx.print(&body);
        } else {
            ctx.note(format!("published version {}", receipt.version));
        }
    }
    Ok(())
}

fn deposit(a: DepositArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let local = LocalPackage::load(&a.dir)?;
    // Catch local mistakes before uploading anything.
    let (_, files) = local.assemble(&a.dir)?;
    let upload = Upload {
        metadata: Some(canonical::to_vec(&local.metadata)),
        files,
        run_sequence: local.run_sequence.as_ref().map(canonical::to_vec),
        removals: Vec::new(),
        acknowledged: a.acknowledge,
    };
    let client = ctx.client()?;
    let body = client.deposit(upload).map_err(|e| ctx.client_failure(e))?;
    report_draft(&body, a.publish, ctx)
}

fn explore(a: ExploreArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let client = ctx.client()?;
    let bytes = client.explore(&a.id, a.version).map_err(|e| ctx.client_failure(e))?;
    let output = match a.output {
        Some(p) => p,
        None => {
            let suffix = PersistentIdentifier::from_route(&a.id)
                .map(|i| i.suffix().to_string())
                .unwrap_or_else(|_| "bundle".into());
            PathBuf::from(format!("{suffix}.zip"))
        }
    };
    std::fs::write(&output, &bytes).map_err(|e| Failure::usage(format!("{}: {e}", output.display())))?;
    if ctx.json() {
        let summary = serde_json::json!({ "bytes": bytes.len(), "path": output.display().to_string() });
        ctx.print(&canonical::to_vec(&summary));
    } else {
        ctx.line(format!("wrote {} ({} bytes)", output.display(), bytes.len()));
    }
    Ok(())
}

fn import(a: ImportArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let bundle = read(&a.bundle)?;
    let client = ctx.client()?;
    let body = client.import(bundle, &a.origin, a.title.as_deref()).map_err(|e| ctx.client_failure(e))?;
    if ctx.json() {
        ctx.print(&body);
    } else {
        let v: serde_json::Value = Client::parse(&body).map_err(|e| ctx.client_failure(e))?;
        ctx.line(v["id"].as_str().unwrap_or_default());
    }
    Ok(())
}

fn versions(a: VersionsArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let mut files = Vec::new();
    for spec in &a.add {
        let (path, local) = match spec.split_once('=') {
            Some((p, l)) => (p.to_string(), PathBuf::from(l)),
            None => {
                let local = PathBuf::from(spec);
                let name = local
                    .file_name()
                    .ok_or_else(|| Failure::usage(format!("{spec}: not a file")))?
                    .to_string_lossy()
                    .into_owned();
                (name, local)
            }
        };
        files.push(NewFile::new(path, read(&local)?));
    }
    let metadata = match &a.metadata {
        Some(p) => {
            let bytes = read(p)?;
            let meta: PackageMetadata =
                serde_json::from_slice(&bytes).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            Some(canonical::to_vec(&meta))
        }
        None => None,
    };
    let upload =
        Upload { metadata, files, run_sequence: None, removals: a.remove.clone(), acknowledged: a.acknowledge };
    let client = ctx.client()?;
    let body = client.new_version(&a.id, upload).map_err(|e| ctx.client_failure(e))?;
    report_draft(&body, a.publish, ctx)
}

fn search(query: &str, ctx: &mut Ctx<'_>) -> CmdResult {
    let client = ctx.client()?;
    let body = client.search(query).map_err(|e| ctx.client_failure(e))?;
    if ctx.json() {
        ctx.print(&body);
        return Ok(());
    }
    let hits: Vec<SearchHit> = Client::parse(&body).map_err(|e| ctx.client_failure(e))?;
    if hits.is_empty() {
        ctx.line("no matches");
    }
    for h in hits {
        let kind = serde_json::to_value(h.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        ctx.line(format!("{} v{} {kind}: {}", h.id, h.version, h.snippet));
    }
    Ok(())
}

fn fair(a: IdVersion, ctx: &mut Ctx<'_>) -> CmdResult {
    let client = ctx.client()?;
    let body = client.fair(&a.id, a.version).map_err(|e| ctx.client_failure(e))?;
    let report: FairReport = Client::parse(&body).map_err(|e| ctx.client_failure(e))?;
    ctx.print(&render_report(Report::Fair(&report), ctx.mode));
    Ok(())
}

fn metrics(id: &str, ctx: &mut Ctx<'_>) -> CmdResult {
    let client = ctx.client()?;
    let body = client.metrics(id).map_err(|e| ctx.client_failure(e))?;
    if ctx.json() {
        ctx.print(&body);
        return Ok(());
    }
    let c: MetricCounters = Client::parse(&body).map_err(|e| ctx.client_failure(e))?;
    ctx.line(format!("packageDownloads {}", c.package_downloads));
    ctx.line(format!("exploreCount {}", c.explore_count));
    ctx.line(format!("accessRequests {}", c.access_requests));
    for (path, n) in &c.per_file_downloads {
        ctx.line(format!("{path} {n}"));
    }
    Ok(())
}
