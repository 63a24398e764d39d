use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::parser::{DockerfileAst, Instruction, Keyword};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "RB001")]
    UnpinnedBaseImage,
    #[serde(rename = "RB002")]
    AbsoluteHostPath,
    #[serde(rename = "RB003")]
    RemoteAdd,
    #[serde(rename = "RB004")]
    UnpinnedPackageInstall,
    #[serde(rename = "RB005")]
    MissingWorkdir,
    #[serde(rename = "RB006")]
    SecretLikeName,
}

impl Rule {
    pub const ALL: [Rule; 6] = [
        Rule::UnpinnedBaseImage,
        Rule::AbsoluteHostPath,
        Rule::RemoteAdd,
        Rule::UnpinnedPackageInstall,
        Rule::MissingWorkdir,
        Rule::SecretLikeName,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::UnpinnedBaseImage => "RB001",
            Rule::AbsoluteHostPath => "RB002",
            Rule::RemoteAdd => "RB003",
            Rule::UnpinnedPackageInstall => "RB004",
            Rule::MissingWorkdir => "RB005",
            Rule::SecretLikeName => "RB006",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::UnpinnedBaseImage => "unpinned-base-image",
            Rule::AbsoluteHostPath => "absolute-host-path",
            Rule::RemoteAdd => "remote-add",
            Rule::UnpinnedPackageInstall => "unpinned-package-install",
            Rule::MissingWorkdir => "missing-workdir",
            Rule::SecretLikeName => "secret-like-name",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::UnpinnedBaseImage | Rule::AbsoluteHostPath => Severity::Error,
            Rule::RemoteAdd | Rule::UnpinnedPackageInstall | Rule::SecretLikeName => Severity::Warning,
            Rule::MissingWorkdir => Severity::Info,
        }
    }

    pub fn from_id(id: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.id() == id)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LintFinding {
    pub rule_id: Rule,
    pub severity: Severity,
    pub line: usize,
    pub message: String,
    pub excerpt: String,
}

impl LintFinding {
    fn new(rule: Rule, ins: &Instruction, message: String, excerpt: impl Into<String>) -> Self {
        Self { rule_id: rule, severity: rule.severity(), line: ins.line_start, message, excerpt: excerpt.into() }
    }
}

/// Findings ordered by `(line, ruleId)`; `blocking` iff any error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LintReportDoc")]
pub struct LintReport {
    pub findings: Vec<LintFinding>,
    pub blocking: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LintReportDoc {
    findings: Vec<LintFinding>,
    blocking: bool,
}

impl TryFrom<LintReportDoc> for LintReport {
    type Error = String;

    fn try_from(doc: LintReportDoc) -> Result<Self, Self::Error> {
        let report = LintReport::new(doc.findings);
        if report.blocking != doc.blocking {
            return Err("blocking flag disagrees with finding severities".into());
        }
        Ok(report)
    }
}

impl LintReport {
    pub fn new(mut findings: Vec<LintFinding>) -> Self {
        findings.sort_by_key(|f| (f.line, f.rule_id));
        let blocking = findings.iter().any(|f| f.severity == Severity::Error);
        Self { findings, blocking }
    }

    pub fn clean() -> Self {
        Self::new(Vec::new())
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.findings.iter().map(|f| f.rule_id).collect()
    }

    pub fn to_canonical_json(&self) -> Vec<u8> {
        crate::canonical::to_vec(self)
    }
}

static HOME_DIR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"/home/[^/\s]+/").unwrap());
static SECRET_NAME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)TOKEN|PASSWORD|SECRET|KEY").unwrap());
static VARIABLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}|\$([A-Za-z_][A-Za-z0-9_]*)").unwrap());

const MUTABLE_TAGS: &[&str] = &["latest", "stable", "devel"];

fn is_drive_path(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 3 && b[0].is_ascii_alphabetic() && b[1] == b':' && (b[2] == b'\\' || b[2] == b'/')
}

fn unquote(s: &str) -> &str {
    s.trim_matches(|c| c == '"' || c == '\'')
}

/// Flags of a COPY/ADD instruction plus its operands (sources then destination).
fn copy_operands(ins: &Instruction) -> (Vec<String>, Vec<String>) {
    let mut flags = Vec::new();
    let mut rest = ins.args_raw.as_str();
    // Flags always precede the (shell- or JSON-form) operand list.
    loop {
        let trimmed = rest.trim_start();
        if !trimmed.starts_with("--") {
            rest = trimmed;
            break;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        flags.push(trimmed[..end].to_string());
        rest = &trimmed[end..];
    }
    let operands = if rest.starts_with('[') {
        serde_json::from_str::<Vec<String>>(rest)
            .unwrap_or_else(|_| rest.split_whitespace().map(str::to_string).collect())
    } else {
        rest.split_whitespace().map(|s| unquote(s).to_string()).collect()
    };
    (flags, operands)
}

fn substitute(text: &str, vars: &BTreeMap<String, String>) -> String {
    VARIABLE
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let name = caps.get(1).or_else(|| caps.get(2)).unwrap().as_str();
            vars.get(name).cloned().unwrap_or_else(|| caps[0].to_string())
        })
        .into_owned()
}

struct FromClause {
    image: String,
    alias: Option<String>,
}

fn parse_from(args: &str) -> Option<FromClause> {
    let mut words = args.split_whitespace().filter(|w| !w.starts_with("--"));
    let image = words.next()?.to_string();
    let alias = match (words.next(), words.next()) {
        (Some(kw), Some(name)) if kw.eq_ignore_ascii_case("as") => Some(name.to_ascii_lowercase()),
        _ => None,
    };
    Some(FromClause { image, alias })
}

/// Why a base image reference is not pinned, if it is not.
fn unpinned_reason(image: &str) -> Option<String> {
    if image.contains('$') {
        return Some(format!("base image {image} cannot be resolved to a pinned reference"));
    }
    if image.contains("@sha256:") {
        return None;
    }
    let last_component = image.rsplit('/').next().unwrap_or(image);
    match last_component.split_once(':') {
        None => Some(format!("base image {image} has no tag or digest")),
        Some((_, tag)) if MUTABLE_TAGS.contains(&tag.to_ascii_lowercase().as_str()) => {
            Some(format!("base image {image} uses mutable tag {tag:?} without a digest"))
        }
        Some(_) => None,
    }
}

fn env_arg_names(ins: &Instruction) -> Vec<String> {
    let words: Vec<&str> = ins.args_raw.split_whitespace().collect();
    match ins.name {
        Keyword::Env => match words.first() {
            Some(first) if !first.contains('=') => vec![first.to_string()],
            _ => words
                .iter()
                .filter_map(|w| w.split_once('=').map(|(k, _)| k))
                .filter(|k| !k.is_empty() && !k.starts_with(['"', '\'']))
                .map(str::to_string)
                .collect(),
        },
        Keyword::Arg => words.iter().map(|w| w.split_once('=').map_or(*w, |(k, _)| k).to_string()).collect(),
        _ => Vec::new(),
    }
}

/// Splits a RUN command into simple commands on `&&`, `||`, `;`, `|`, `&`
/// and newlines, then into whitespace tokens with surrounding quotes removed.
fn simple_commands(command: &str) -> Vec<Vec<String>> {
    command
        .split(['&', '|', ';', '\n'])
        .map(|segment| {
            segment.split_whitespace().map(|t| unquote(t).to_string()).filter(|t| !t.is_empty()).collect::<Vec<_>>()
        })
        .filter(|tokens| !tokens.is_empty())
        .collect()
}

fn basename(s: &str) -> &str {
    s.rsplit('/').next().unwrap_or(s)
}

/// Drops leading env assignments, `sudo`, `env`, and `sh -c` wrappers.
fn strip_wrappers(tokens: &[String]) -> &[String] {
    let mut t = tokens;
    loop {
        match t.first().map(String::as_str) {
            Some(w) if w.contains('=') && !w.starts_with('-') => t = &t[1..],
            Some("sudo") | Some("env") | Some("exec") => t = &t[1..],
            Some(w) if matches!(basename(w), "sh" | "bash") && t.get(1).map(String::as_str) == Some("-c") => {
                t = &t[2..]
            }
            _ => return t,
        }
    }
}

#[derive(Clone, Copy)]
enum Installer {
    Apt,
    Pip,
    Conda,
}

impl Installer {
    fn label(self) -> &'static str {
        match self {
            Installer::Apt => "apt-get install",
            Installer::Pip => "pip install",
            Installer::Conda => "conda install",
        }
    }

    fn value_flags(self) -> &'static [&'static str] {
        match self {
            Installer::Apt => &["-o", "-t", "--target-release", "-c", "--config-file"],
            Installer::Pip => &[
                "-r",
                "--requirement",
                "-c",
                "--constraint",
                "-e",
                "--editable",
                "-i",
                "--index-url",
                "--extra-index-url",
                "-f",
                "--find-links",
                "-t",
                "--target",
                "--prefix",
                "--root",
                "--platform",
                "--python-version",
                "--implementation",
                "--abi",
                "--only-binary",
                "--no-binary",
                "--trusted-host",
                "--cache-dir",
                "--src",
                "--upgrade-strategy",
                "--progress-bar",
                "--log",
                "--proxy",
                "--retries",
                "--timeout",
            ],
            Installer::Conda => &["-c", "--channel", "-n", "--name", "-p", "--prefix", "--file"],
        }
    }

    fn is_pinned(self, spec: &str) -> bool {
        match self {
            Installer::Apt => spec.contains('='),
            Installer::Conda => spec.contains('='),
            Installer::Pip => {
                spec.contains("==")
                    || spec.starts_with('.')
                    || spec.starts_with('/')
                    || spec.contains("://")
                    || spec.starts_with("git+")
                    || [".whl", ".tar.gz", ".zip"].iter().any(|ext| spec.ends_with(ext))
            }
        }
    }
}

/// Locates an install invocation; returns the installer and the tokens after
/// the `install` subcommand.
fn install_invocation(tokens: &[String]) -> Option<(Installer, &[String])> {
    let tokens = strip_wrappers(tokens);
    let program = basename(tokens.first()?);
    let (installer, rest) = match program {
        "apt-get" => (Installer::Apt, &tokens[1..]),
        "pip" | "pip2" | "pip3" => (Installer::Pip, &tokens[1..]),
        "conda" | "mamba" | "micromamba" => (Installer::Conda, &tokens[1..]),
        p if p.starts_with("python") => {
            let m = tokens.iter().position(|t| t == "-m")?;
            if !matches!(tokens.get(m + 1).map(String::as_str), Some("pip" | "pip3")) {
                return None;
            }
            (Installer::Pip, &tokens[m + 2..])
        }
        _ => return None,
    };
    // Subcommand is the first non-option token.
    let mut i = 0;
    while i < rest.len() && rest[i].starts_with('-') {
        if installer.value_flags().contains(&rest[i].as_str()) {
            i += 1;
        }
        i += 1;
    }
    (rest.get(i).map(String::as_str) == Some("install")).then(|| (installer, &rest[i + 1..]))
}

fn unpinned_packages(installer: Installer, args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for arg in args {
        if skip_next {
            skip_next = false;
            continue;
        }
        if arg.starts_with('-') {
            skip_next = installer.value_flags().contains(&arg.as_str());
            continue;
        }
        if !installer.is_pinned(arg) {
            out.push(arg.clone());
        }
    }
    out
}

fn run_command_text(ins: &Instruction) -> String {
    match ins.json_args() {
        Some(argv) if ins.exec_form => argv.join(" "),
        _ => ins.args_raw.clone(),
    }
}

fn check_run_installs(ins: &Instruction) -> Option<LintFinding> {
    let text = run_command_text(ins);
    let mut unpinned: Vec<(Installer, String)> = Vec::new();
    for tokens in simple_commands(&text) {
        if let Some((installer, args)) = install_invocation(&tokens) {
            unpinned.extend(unpinned_packages(installer, args).into_iter().map(|p| (installer, p)));
        }
    }
    let (first_installer, first_pkg) = unpinned.first()?.clone();
    let list: Vec<&str> = unpinned.iter().map(|(_, p)| p.as_str()).collect();
    Some(LintFinding::new(
        Rule::UnpinnedPackageInstall,
        ins,
        format!("{} without pinned versions: {}", first_installer.label(), list.join(", ")),
        first_pkg,
    ))
}

fn host_path_in_text(text: &str) -> Option<String> {
    if let Some(m) = HOME_DIR.find(text) {
        return Some(m.as_str().to_string());
    }
    if text.contains("/Users/") {
        return Some("/Users/".to_string());
    }
    if text.contains("C:\\") {
        return Some("C:\\".to_string());
    }
    None
}

/// Applies every reproducibility rule to a parsed Dockerfile.
pub fn lint_dockerfile(ast: &DockerfileAst) -> LintReport {
    let mut findings = Vec::new();
    let mut global_args: BTreeMap<String, String> = BTreeMap::new();
    let mut stage_aliases: BTreeSet<String> = BTreeSet::new();
    let mut seen_from = false;
    let mut workdir_set = false;

    for ins in &ast.instructions {
        match ins.name {
            Keyword::Arg if !seen_from => {
                for word in ins.args_raw.split_whitespace() {
                    if let Some((k, v)) = word.split_once('=') {
                        global_args.insert(k.to_string(), unquote(v).to_string());
                    }
                }
            }
            Keyword::From => {
                seen_from = true;
                workdir_set = false;
                if let Some(from) = parse_from(&ins.args_raw) {
                    let image = substitute(&from.image, &global_args);
                    let is_stage_ref = stage_aliases.contains(&image.to_ascii_lowercase());
                    if !is_stage_ref && !image.eq_ignore_ascii_case("scratch") {
                        if let Some(reason) = unpinned_reason(&image) {
                            findings.push(LintFinding::new(Rule::UnpinnedBaseImage, ins, reason, from.image.clone()));
                        }
                    }
                    if let Some(alias) = from.alias {
                        stage_aliases.insert(alias);
                    }
                }
            }
            _ => {}
        }

        match ins.name {
            Keyword::Copy | Keyword::Add => {
                let (flags, operands) = copy_operands(ins);
                let from_stage = flags.iter().any(|f| f.starts_with("--from"));
                if operands.len() >= 2 {
                    let (sources, dest) = operands.split_at(operands.len() - 1);
                    let dest = &dest[0];
                    if !from_stage {
                        if let Some(src) = sources.iter().find(|s| s.starts_with('/') || is_drive_path(s)) {
                            findings.push(LintFinding::new(
                                Rule::AbsoluteHostPath,
                                ins,
                                format!("{} copies from absolute host path {src}", ins.name),
                                src.clone(),
                            ));
                        }
                    }
                    if let Some(url) = sources.iter().find(|s| {
                        let lower = s.to_ascii_lowercase();
                        lower.starts_with("http://") || lower.starts_with("https://")
                    }) {
                        findings.push(LintFinding::new(
                            Rule::RemoteAdd,
                            ins,
                            format!("{} fetches remote content {url}; pin it or vendor it", ins.name),
                            url.clone(),
                        ));
                    }
                    let relative_dest = !dest.starts_with('/') && !dest.starts_with('$') && !is_drive_path(dest);
                    if ins.name == Keyword::Copy && relative_dest && !workdir_set {
                        findings.push(LintFinding::new(
                            Rule::MissingWorkdir,
                            ins,
                            format!("COPY to relative destination {dest} before any WORKDIR"),
                            dest.clone(),
                        ));
                    }
                }
            }
            Keyword::Run | Keyword::Workdir | Keyword::Env => {
                if let Some(token) = host_path_in_text(&ins.args_raw) {
                    findings.push(LintFinding::new(
                        Rule::AbsoluteHostPath,
                        ins,
                        format!("{} references host-specific path {token}", ins.name),
                        token,
                    ));
                }
            }
            _ => {}
        }

        if ins.name == Keyword::Workdir {
            workdir_set = true;
        }
        if ins.name == Keyword::Run {
            findings.extend(check_run_installs(ins));
        }
        if matches!(ins.name, Keyword::Env | Keyword::Arg) {
            let names: Vec<String> = env_arg_names(ins).into_iter().filter(|n| SECRET_NAME.is_match(n)).collect();
            if let Some(first) = names.first() {
                findings.push(LintFinding::new(
                    Rule::SecretLikeName,
                    ins,
                    format!(
                        "{} declares secret-like name(s) {}; pass secrets at run time instead",
                        ins.name,
                        names.join(", ")
                    ),
                    first.clone(),
                ));
            }
        }
    }
    LintReport::new(findings)
}
