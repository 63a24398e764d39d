use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reasons a raw path cannot become a [`RelativePath`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("absolute path not allowed: {0}")]
    AbsolutePath(String),
    #[error("path contains a '.' or '..' segment: {0}")]
    TraversalSegment(String),
    #[error("path contains an empty segment: {0}")]
    EmptySegment(String),
    #[error("path is not in canonical form: {0}")]
    NotCanonical(String),
}

/// A normalized, slash-separated path relative to the package root.
///
/// Never starts with `/`, never contains `.`/`..`/empty segments or
/// backslashes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RelativePath(String);

impl RelativePath {
    pub fn parse(raw: &str) -> Result<Self, PathError> {
        normalize_path(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Last segment of the path.
    pub fn file_name(&self) -> &str {
        self.0.rsplit('/').next().unwrap_or(&self.0)
    }

    /// Lowercased extension of the file name, without the dot.
    pub fn extension(&self) -> Option<String> {
        let name = self.file_name();
        match name.rfind('.') {
            Some(0) | None => None,
            Some(i) => Some(name[i + 1..].to_ascii_lowercase()),
        }
    }
}

impl fmt::Display for RelativePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for RelativePath {
    type Error = PathError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let normalized = normalize_path(&value)?;
        // Stored paths must already be canonical.
        if normalized.0 != value {
            return Err(PathError::NotCanonical(value));
        }
        Ok(normalized)
    }
}

impl From<RelativePath> for String {
    fn from(p: RelativePath) -> Self {
        p.0
    }
}

impl AsRef<str> for RelativePath {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn has_drive_prefix(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 2 && b[0].is_ascii_alphabetic() && b[1] == b':'
}

/// Canonicalizes an uploaded path: backslashes become `/`, leading `./`
/// prefixes are dropped, and anything absolute or traversing is rejected.
pub fn normalize_path(raw: &str) -> Result<RelativePath, PathError> {
    if raw.is_empty() {
        return Err(PathError::Empty);
    }
    let unified = raw.replace('\\', "/");
    if unified.starts_with('/') || has_drive_prefix(&unified) {
        return Err(PathError::AbsolutePath(raw.to_string()));
    }
    let mut rest = unified.as_str();
    while let Some(stripped) = rest.strip_prefix("./") {
        rest = stripped;
    }
    if rest.is_empty() {
        return Err(PathError::EmptySegment(raw.to_string()));
    }
    for segment in rest.split('/') {
        match segment {
            "" => return Err(PathError::EmptySegment(raw.to_string())),
            "." | ".." => return Err(PathError::TraversalSegment(raw.to_string())),
            _ => {}
        }
    }
    Ok(RelativePath(rest.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_dot_prefix() {
        assert_eq!(normalize_path("./data/a.csv").unwrap().as_str(), "data/a.csv");
        assert_eq!(normalize_path("././a").unwrap().as_str(), "a");
    }

    #[test]
    fn rejects_absolute() {
        assert!(matches!(normalize_path("/home/alice/a.csv"), Err(PathError::AbsolutePath(_))));
        assert!(matches!(normalize_path("C:\\data\\a.csv"), Err(PathError::AbsolutePath(_))));
        assert!(matches!(normalize_path("d:/x"), Err(PathError::AbsolutePath(_))));
    }

    #[test]
    fn rejects_traversal() {
        assert!(matches!(normalize_path("a/../b.csv"), Err(PathError::TraversalSegment(_))));
        assert!(matches!(normalize_path("a/./b.csv"), Err(PathError::TraversalSegment(_))));
        assert!(matches!(normalize_path(".."), Err(PathError::TraversalSegment(_))));
    }

    #[test]
    fn rejects_empty_segments() {
        assert!(matches!(normalize_path("a//b"), Err(PathError::EmptySegment(_))));
        assert!(matches!(normalize_path("a/"), Err(PathError::EmptySegment(_))));
        assert!(matches!(normalize_path("./"), Err(PathError::EmptySegment(_))));
        assert_eq!(normalize_path(""), Err(PathError::Empty));
    }

    #[test]
    fn backslashes_become_slashes() {
        assert_eq!(normalize_path("code\\run.py").unwrap().as_str(), "code/run.py");
    }

    #[test]
    fn deserialize_requires_canonical_form() {
        assert!(serde_json::from_str::<RelativePath>("\"a/b\"").is_ok());
        assert!(serde_json::from_str::<RelativePath>("\"./a\"").is_err());
        assert!(serde_json::from_str::<RelativePath>("\"/a\"").is_err());
    }

    #[test]
    fn extension_and_name() {
        let p = normalize_path("x/Table1.CSV").unwrap();
        assert_eq!(p.file_name(), "Table1.CSV");
        assert_eq!(p.extension().as_deref(), Some("csv"));
        assert_eq!(normalize_path(".bashrc").unwrap().extension(), None);
    }
}
