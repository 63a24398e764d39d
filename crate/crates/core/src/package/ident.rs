use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SUFFIX_LEN: usize = 6;
const SUFFIX_ALPHABET: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid persistent identifier: {0:?}")]
pub struct InvalidIdentifier(pub String);

/// DOI-shaped identifier under the DataCite test prefix,
/// rendered as `doi:10.5072/RB/XXXXXX`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PersistentIdentifier {
    suffix: String,
}

impl PersistentIdentifier {
    pub const AUTHORITY: &'static str = "doi:10.5072/RB";

    pub fn from_suffix(suffix: &str) -> Result<Self, InvalidIdentifier> {
        let ok = suffix.len() == SUFFIX_LEN && suffix.bytes().all(|b| b.is_ascii_digit() || b.is_ascii_uppercase());
        if ok {
            Ok(Self { suffix: suffix.to_string() })
        } else {
            Err(InvalidIdentifier(suffix.to_string()))
        }
    }

    /// Draws a suffix uniformly from the base-36 alphabet. Uniqueness is the
    /// caller's concern.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let suffix =
            (0..SUFFIX_LEN).map(|_| SUFFIX_ALPHABET[rng.random_range(0..SUFFIX_ALPHABET.len())] as char).collect();
        Self { suffix }
    }

    /// Accepts the full rendered form or a bare suffix (either case), as
    /// used in URL paths.
    pub fn from_route(s: &str) -> Result<Self, InvalidIdentifier> {
        if s.contains('/') {
            return s.parse();
        }
        Self::from_suffix(&s.to_ascii_uppercase())
    }

    pub fn suffix(&self) -> &str {
        &self.suffix
    }
}

impl fmt::Display for PersistentIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", Self::AUTHORITY, self.suffix)
    }
}

impl FromStr for PersistentIdentifier {
    type Err = InvalidIdentifier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix(Self::AUTHORITY)
            .and_then(|rest| rest.strip_prefix('/'))
            .ok_or_else(|| InvalidIdentifier(s.to_string()))
            .and_then(Self::from_suffix)
            .map_err(|_| InvalidIdentifier(s.to_string()))
    }
}

impl TryFrom<String> for PersistentIdentifier {
    type Error = InvalidIdentifier;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<PersistentIdentifier> for String {
    fn from(id: PersistentIdentifier) -> Self {
        id.to_string()
    }
}

/// UTC instant with whole-second precision, rendered as `YYYY-MM-DDTHH:MM:SSZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn now() -> Self {
        Self::from_unix(Utc::now().timestamp())
    }

    pub fn from_unix(secs: i64) -> Self {
        Self(Utc.timestamp_opt(secs, 0).single().expect("in-range unix seconds"))
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl TryFrom<String> for Timestamp {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let parsed = DateTime::parse_from_rfc3339(&value).map_err(|e| format!("{value:?}: {e}"))?;
        let ts = Self::from_unix(parsed.timestamp());
        if ts.to_string() != value {
            return Err(format!("{value:?}: expected YYYY-MM-DDTHH:MM:SSZ"));
        }
        Ok(ts)
    }
}

impl From<Timestamp> for String {
    fn from(ts: Timestamp) -> Self {
        ts.to_string()
    }
}
