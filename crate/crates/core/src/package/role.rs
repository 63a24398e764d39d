use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::path::RelativePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileRole {
    Data,
    Code,
    Dockerfile,
    Runscript,
    Documentation,
    Other,
}

impl FileRole {
    pub const ALL: [FileRole; 6] = [
        FileRole::Data,
        FileRole::Code,
        FileRole::Dockerfile,
        FileRole::Runscript,
        FileRole::Documentation,
        FileRole::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FileRole::Data => "data",
            FileRole::Code => "code",
            FileRole::Dockerfile => "dockerfile",
            FileRole::Runscript => "runscript",
            FileRole::Documentation => "documentation",
            FileRole::Other => "other",
        }
    }
}

impl fmt::Display for FileRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FileRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FileRole::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| format!("unknown file role {s:?}"))
    }
}

const CODE_EXTENSIONS: &[&str] = &["py", "r", "jl", "m", "do", "sh", "c", "cpp", "java", "ipynb"];
const DATA_EXTENSIONS: &[&str] = &["csv", "tsv", "dta", "parquet", "json", "xml", "h5", "nc"];
const DOC_EXTENSIONS: &[&str] = &["md", "txt", "pdf"];

/// Heuristic role for an uploaded file. An explicit declaration always wins.
pub fn classify_role(path: &RelativePath, declared: Option<FileRole>) -> FileRole {
    if let Some(role) = declared {
        return role;
    }
    let name = path.file_name();
    let ext = path.extension();
    if name == "Dockerfile" || ext.as_deref() == Some("dockerfile") {
        return FileRole::Dockerfile;
    }
    if name == "run" || name == "run.sh" {
        return FileRole::Runscript;
    }
    if name.to_ascii_uppercase().starts_with("README") {
        return FileRole::Documentation;
    }
    match ext.as_deref() {
        Some(e) if CODE_EXTENSIONS.contains(&e) => FileRole::Code,
        Some(e) if DATA_EXTENSIONS.contains(&e) => FileRole::Data,
        Some(e) if DOC_EXTENSIONS.contains(&e) => FileRole::Documentation,
        _ => FileRole::Other,
    }
}

/// Research-code extensions the system MIME table does not know.
const SCRIPT_MEDIA_TYPES: &[(&str, &str)] = &[
    ("ado", "text/x-stata"),
    ("do", "text/x-stata"),
    ("ipynb", "application/x-ipynb+json"),
    ("jl", "text/x-julia"),
    ("py", "text/x-python"),
    ("r", "text/x-r"),
    ("rmd", "text/x-r-markdown"),
    ("sas", "text/x-sas"),
];

/// IANA-style media type for a stored file.
pub fn media_type_for(path: &RelativePath, role: FileRole) -> String {
    match role {
        FileRole::Dockerfile if path.extension().is_none() || path.file_name() == "Dockerfile" => {
            return "text/x-dockerfile".to_string();
        }
        FileRole::Runscript if path.extension().is_none() => {
            return "text/x-shellscript".to_string();
        }
        _ => {}
    }
    if let Some(ext) = path.extension() {
        if let Some((_, mt)) = SCRIPT_MEDIA_TYPES.iter().find(|(e, _)| *e == ext) {
            return mt.to_string();
        }
    }
    mime_guess::from_path(path.as_str()).first_or_octet_stream().essence_str().to_string()
}
