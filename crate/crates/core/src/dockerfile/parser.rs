use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {detail}")]
    UnknownInstruction { line: usize, detail: String },
    #[error("Dockerfile contains no instructions")]
    EmptyFile,
    #[error("line {line}: expected FROM (only ARG may precede the first FROM)")]
    MissingFrom { line: usize },
    #[error("line {line}: file ends inside a line continuation")]
    DanglingContinuation { line: usize },
}

impl ParseError {
    /// Source line the error points at, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::UnknownInstruction { line, .. }
            | ParseError::MissingFrom { line }
            | ParseError::DanglingContinuation { line } => Some(*line),
            ParseError::EmptyFile => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Keyword {
    From,
    Run,
    Cmd,
    Entrypoint,
    Copy,
    Add,
    Workdir,
    Env,
    Arg,
    Label,
    Expose,
    User,
    Volume,
    Shell,
    Healthcheck,
    Onbuild,
    Stopsignal,
    Maintainer,
}

impl Keyword {
    pub const ALL: [Keyword; 18] = [
        Keyword::From,
        Keyword::Run,
        Keyword::Cmd,
        Keyword::Entrypoint,
        Keyword::Copy,
        Keyword::Add,
        Keyword::Workdir,
        Keyword::Env,
        Keyword::Arg,
        Keyword::Label,
        Keyword::Expose,
        Keyword::User,
        Keyword::Volume,
        Keyword::Shell,
        Keyword::Healthcheck,
        Keyword::Onbuild,
        Keyword::Stopsignal,
        Keyword::Maintainer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::From => "FROM",
            Keyword::Run => "RUN",
            Keyword::Cmd => "CMD",
            Keyword::Entrypoint => "ENTRYPOINT",
            Keyword::Copy => "COPY",
            Keyword::Add => "ADD",
            Keyword::Workdir => "WORKDIR",
            Keyword::Env => "ENV",
            Keyword::Arg => "ARG",
            Keyword::Label => "LABEL",
            Keyword::Expose => "EXPOSE",
            Keyword::User => "USER",
            Keyword::Volume => "VOLUME",
            Keyword::Shell => "SHELL",
            Keyword::Healthcheck => "HEALTHCHECK",
            Keyword::Onbuild => "ONBUILD",
            Keyword::Stopsignal => "STOPSIGNAL",
            Keyword::Maintainer => "MAINTAINER",
        }
    }

    fn supports_exec_form(self) -> bool {
        matches!(self, Keyword::Run | Keyword::Cmd | Keyword::Entrypoint)
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Keyword {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Keyword::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s)).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EscapeChar {
    #[default]
    Backslash,
    Backtick,
}

impl EscapeChar {
    pub fn as_char(self) -> char {
        match self {
            EscapeChar::Backslash => '\\',
            EscapeChar::Backtick => '`',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Instruction {
    pub name: Keyword,
    /// Arguments with continuations joined, leading/trailing space trimmed.
    pub args_raw: String,
    pub exec_form: bool,
    pub line_start: usize,
    pub line_end: usize,
}

impl Instruction {
    /// The JSON array of an exec-form (or JSON-form COPY/ADD) instruction.
    pub fn json_args(&self) -> Option<Vec<String>> {
        if !self.args_raw.starts_with('[') {
            return None;
        }
        serde_json::from_str(&self.args_raw).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DockerfileAst {
    pub escape_char: EscapeChar,
    pub instructions: Vec<Instruction>,
}

/// Reads `# key=value` parser directives at the very top of the file. The
/// first line that is not a directive ends the directive block.
fn read_escape_directive(lines: &[&str]) -> EscapeChar {
    let mut escape = EscapeChar::Backslash;
    for line in lines {
        let Some(body) = line.trim().strip_prefix('#') else { break };
        let Some((key, value)) = body.split_once('=') else { break };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric()) {
            break;
        }
        if key.eq_ignore_ascii_case("escape") {
            match value.trim() {
                "`" => escape = EscapeChar::Backtick,
                "\\" => escape = EscapeChar::Backslash,
                _ => {}
            }
        }
    }
    escape
}

fn has_heredoc(args: &str) -> bool {
    args.split_whitespace().any(|word| {
        word.strip_prefix("<<")
            .map(|rest| rest.trim_start_matches('-'))
            .and_then(|rest| rest.chars().next())
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '"' || c == '\'' || c == '_')
    })
}

fn finish(text: &str, line_start: usize, line_end: usize) -> Result<Instruction, ParseError> {
    let text = text.trim();
    let (word, args) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    };
    let name: Keyword = word.parse().map_err(|_| ParseError::UnknownInstruction {
        line: line_start,
        detail: format!("unknown instruction {word:?}"),
    })?;
    if matches!(name, Keyword::Run | Keyword::Copy | Keyword::Add) && has_heredoc(args) {
        return Err(ParseError::UnknownInstruction {
            line: line_start,
            detail: format!("heredoc syntax in {name} is not supported"),
        });
    }
    let exec_form =
        name.supports_exec_form() && args.starts_with('[') && serde_json::from_str::<Vec<String>>(args).is_ok();
    Ok(Instruction { name, args_raw: args.to_string(), exec_form, line_start, line_end })
}

/// Parses Dockerfile text into its instruction list.
pub fn parse_dockerfile(source: &str) -> Result<DockerfileAst, ParseError> {
    let lines: Vec<&str> = source.lines().collect();
    let escape_char = read_escape_directive(&lines);
    let escape = escape_char.as_char();

    let mut instructions = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in lines.iter().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim_start();
        // Comments and blank lines are dropped, including inside a continuation.
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let body = raw.trim_end();
        let (piece, continues) = match body.strip_suffix(escape) {
            Some(piece) => (piece, true),
            None => (body, false),
        };
        let (start, mut text) = pending.take().unwrap_or((line_no, String::new()));
        text.push_str(piece);
        if continues {
            pending = Some((start, text));
        } else {
            instructions.push(finish(&text, start, line_no)?);
        }
    }
    if let Some((start, _)) = pending {
        return Err(ParseError::DanglingContinuation { line: start });
    }

    let Some(last) = instructions.last() else {
        return Err(ParseError::EmptyFile);
    };
    match instructions.iter().find(|ins| ins.name != Keyword::Arg) {
        Some(first) if first.name == Keyword::From => {}
        Some(first) => return Err(ParseError::MissingFrom { line: first.line_start }),
        None => return Err(ParseError::MissingFrom { line: last.line_end }),
    }
    Ok(DockerfileAst { escape_char, instructions })
}
