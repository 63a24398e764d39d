//! Dockerfile parsing, reproducibility lint rules, and the deposit gate.

mod lint;
mod parser;

pub use lint::{lint_dockerfile, LintFinding, LintReport, Rule, Severity};
pub use parser::{parse_dockerfile, DockerfileAst, EscapeChar, Instruction, Keyword, ParseError};

/// Outcome of the deposit gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateDecision {
    Allow,
    Deny(LintReport),
}

impl GateDecision {
    pub fn is_allowed(&self) -> bool {
        matches!(self, GateDecision::Allow)
    }
}

/// Blocking reports are denied unless the depositor confirmed them.
pub fn check_deposit_gate(report: &LintReport, acknowledged: bool) -> GateDecision {
    if report.blocking && !acknowledged {
        GateDecision::Deny(report.clone())
    } else {
        GateDecision::Allow
    }
}

/// Parses and lints in one step.
pub fn lint_source(source: &str) -> Result<LintReport, ParseError> {
    parse_dockerfile(source).map(|ast| lint_dockerfile(&ast))
}
