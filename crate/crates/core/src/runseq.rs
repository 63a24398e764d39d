//! Execution-command capture: run-script parsing, manual sequences, launch
//! plans, and the `runSequence` metadata profile.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::package::{RelativePath, ReplicationPackage};

/// `conformsTo` marker of the emitted run-sequence profile.
pub const RUNSEQ_PROFILE: &str = "repro-bridge/runseq/v1";

/// Working directory inside the container used by generated launch plans.
pub const CONTAINER_WORKDIR: &str = "/workspace";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunSeqError {
    #[error("run script contains no commands")]
    EmptyScript,
    #[error("run script is not valid UTF-8")]
    NotUtf8,
    #[error("command list is empty")]
    EmptyCommandList,
    #[error("command {0} is blank")]
    BlankCommand(usize),
    #[error("published package versions are immutable")]
    PublishedImmutable,
    #[error("package has no Dockerfile")]
    NoDockerfile,
    #[error("package has no run sequence")]
    NoRunSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Outside,
    Inside,
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outside" => Ok(Phase::Outside),
            "inside" => Ok(Phase::Inside),
            _ => Err(format!("unknown phase {s:?} (expected inside or outside)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceSource {
    Runscript,
    PlatformImport,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunCommand {
    pub index: u32,
    pub phase: Phase,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_dir: Option<RelativePath>,
}

/// Ordered execution commands. Serializes as the `runSequence` profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RunSequenceDoc", into = "RunSequenceDoc")]
pub struct RunSequence {
    pub commands: Vec<RunCommand>,
    pub interpreter: String,
    pub source: SequenceSource,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RunSequenceDoc {
    conforms_to: String,
    interpreter: String,
    source: SequenceSource,
    steps: Vec<RunCommand>,
}

impl TryFrom<RunSequenceDoc> for RunSequence {
    type Error = String;

    fn try_from(doc: RunSequenceDoc) -> Result<Self, Self::Error> {
        if doc.conforms_to != RUNSEQ_PROFILE {
            return Err(format!("unsupported run sequence profile {:?}", doc.conforms_to));
        }
        let seq = RunSequence { commands: doc.steps, interpreter: doc.interpreter, source: doc.source };
        seq.check()?;
        Ok(seq)
    }
}

impl From<RunSequence> for RunSequenceDoc {
    fn from(seq: RunSequence) -> Self {
        RunSequenceDoc {
            conforms_to: RUNSEQ_PROFILE.to_string(),
            interpreter: seq.interpreter,
            source: seq.source,
            steps: seq.commands,
        }
    }
}

impl RunSequence {
    /// Builds a sequence with dense indices from `(phase, command)` pairs.
    pub fn from_steps<I, S>(steps: I, interpreter: &str, source: SequenceSource) -> Result<Self, RunSeqError>
    where
        I: IntoIterator<Item = (Phase, S)>,
        S: AsRef<str>,
    {
        let mut commands = Vec::new();
        for (i, (phase, command)) in steps.into_iter().enumerate() {
            let command = command.as_ref().trim();
            if command.is_empty() {
                return Err(RunSeqError::BlankCommand(i));
            }
            commands.push(RunCommand { index: i as u32, phase, command: command.to_string(), working_dir: None });
        }
        if commands.is_empty() {
            return Err(RunSeqError::EmptyCommandList);
        }
        Ok(RunSequence { commands, interpreter: interpreter.to_string(), source })
    }

    pub fn inside(&self) -> impl Iterator<Item = &RunCommand> {
        self.commands.iter().filter(|c| c.phase == Phase::Inside)
    }

    pub fn outside(&self) -> impl Iterator<Item = &RunCommand> {
        self.commands.iter().filter(|c| c.phase == Phase::Outside)
    }

    /// Same commands, re-attributed to another source.
    pub fn with_source(mut self, source: SequenceSource) -> Self {
        self.source = source;
        self
    }

    pub fn check(&self) -> Result<(), String> {
        if self.interpreter.trim().is_empty() {
            return Err("interpreter must not be empty".into());
        }
        for (i, c) in self.commands.iter().enumerate() {
            if c.index as usize != i {
                return Err(format!("step indices must be dense from 0; found {} at {i}", c.index));
            }
            if c.command.trim().is_empty() {
                return Err(format!("step {i} has an empty command"));
            }
            if c.command.ends_with('\n') || c.command.ends_with('\r') {
                return Err(format!("step {i} ends with a newline"));
            }
        }
        Ok(())
    }
}

fn interpreter_from_shebang(line: &str) -> Option<String> {
    let mut words = line.trim_start_matches("#!").split_whitespace();
    let program = words.next()?;
    let base = program.rsplit('/').next().unwrap_or(program);
    if base == "env" {
        // `#!/usr/bin/env -S python3 -u` and friends
        return words.find(|w| !w.starts_with('-')).map(str::to_string);
    }
    Some(base.to_string())
}

/// Parses a `run` script into inside-phase commands, one per line.
///
/// A leading `#!` line sets the interpreter. Comment and blank lines are
/// dropped. A line ending in `\` is joined with the next one.
pub fn parse_run_script(text: &str) -> Result<RunSequence, RunSeqError> {
    let mut interpreter = "sh".to_string();
    let mut lines = text.lines().peekable();
    if let Some(first) = lines.peek() {
        if first.starts_with("#!") {
            if let Some(interp) = interpreter_from_shebang(first) {
                interpreter = interp;
            }
            lines.next();
        }
    }

    let mut commands: Vec<String> = Vec::new();
    let mut pending: Option<String> = None;
    for line in lines {
        let line = line.trim();
        if pending.is_none() && (line.is_empty() || line.starts_with('#')) {
            continue;
        }
        let (body, continues) = match line.strip_suffix('\\') {
            Some(body) => (body.trim_end(), true),
            None => (line, false),
        };
        let joined = match pending.take() {
            Some(mut acc) => {
                if !body.is_empty() {
                    if !acc.is_empty() {
                        acc.push(' ');
                    }
                    acc.push_str(body);
                }
                acc
            }
            None => body.to_string(),
        };
        if continues {
            pending = Some(joined);
        } else if !joined.is_empty() {
            commands.push(joined);
        }
    }
    if let Some(rest) = pending.filter(|s| !s.is_empty()) {
        commands.push(rest);
    }

    if commands.is_empty() {
        return Err(RunSeqError::EmptyScript);
    }
    RunSequence::from_steps(
        commands.iter().map(|c| (Phase::Inside, c.as_str())),
        &interpreter,
        SequenceSource::Runscript,
    )
}

/// Replaces a draft's run sequence with a manually entered one.
pub fn set_manual_sequence<S: AsRef<str>>(
    pkg: &ReplicationPackage,
    commands: &[(Phase, S)],
) -> Result<ReplicationPackage, RunSeqError> {
    if pkg.ensure_draft().is_err() {
        return Err(RunSeqError::PublishedImmutable);
    }
    let seq = RunSequence::from_steps(commands.iter().map(|(p, c)| (*p, c.as_ref())), "sh", SequenceSource::Manual)?;
    let mut updated = pkg.clone();
    updated.run_sequence = Some(seq);
    Ok(updated)
}

/// Commands to run outside the container (build, run) followed by the
/// commands to run inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchPlan {
    pub outside: Vec<String>,
    pub inside: Vec<String>,
}

impl LaunchPlan {
    pub fn to_canonical_json(&self) -> Vec<u8> {
        crate::canonical::to_vec(self)
    }

    /// Every step in execution order, tagged with its phase.
    pub fn steps(&self) -> impl Iterator<Item = (Phase, &str)> {
        let outside = self.outside.iter().map(|c| (Phase::Outside, c.as_str()));
        outside.chain(self.inside.iter().map(|c| (Phase::Inside, c.as_str())))
    }
}

/// Derives the launch plan for a package with a Dockerfile and a run
/// sequence.
///
/// The outside phase is always the generated build command, then any
/// manually entered outside commands, then the generated run command.
pub fn build_launch_plan(pkg: &ReplicationPackage) -> Result<LaunchPlan, RunSeqError> {
    let dockerfile = pkg.dockerfile().ok_or(RunSeqError::NoDockerfile)?;
    let seq = pkg.run_sequence.as_ref().ok_or(RunSeqError::NoRunSequence)?;
    let tag = pkg.id.suffix().to_ascii_lowercase();

    let mut outside = vec![format!("container-build --tag {tag} --file {} .", dockerfile.path)];
    outside.extend(seq.outside().map(|c| c.command.clone()));
    outside.push(format!("container-run --workdir {CONTAINER_WORKDIR} {tag}"));
    let inside = seq.inside().map(|c| c.command.clone()).collect();
    Ok(LaunchPlan { outside, inside })
}

/// The run sequence as a JSON object in the `runSequence` profile.
pub fn emit_runseq_metadata(seq: &RunSequence) -> Value {
    serde_json::to_value(seq).expect("run sequences always serialize")
}
