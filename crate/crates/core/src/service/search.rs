use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::fair::{index_entries, EntryKind, IndexEntry};
use crate::package::{PersistentIdentifier, ReplicationPackage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: PersistentIdentifier,
    pub version: u32,
    pub kind: EntryKind,
    pub snippet: String,
}

/// In-memory index over published package versions.
#[derive(Default)]
pub struct SearchIndex {
    entries: RwLock<BTreeMap<(PersistentIdentifier, u32), Vec<IndexEntry>>>,
}

impl SearchIndex {
    /// Adds (or replaces) the entries of a published version. Drafts are ignored.
    pub fn insert(&self, pkg: &ReplicationPackage) {
        let Ok(entries) = index_entries(pkg) else { return };
        self.entries.write().unwrap_or_else(|e| e.into_inner()).insert((pkg.id.clone(), pkg.version), entries);
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Case-insensitive substring match, one hit per `(id, version, kind)`,
    /// ordered by that triple.
    pub fn search(&self, query: &str) -> Vec<SearchHit> {
        let needle = query.to_lowercase();
        let entries = self.entries.read().unwrap_or_else(|e| e.into_inner());
        let mut hits: BTreeMap<(PersistentIdentifier, u32, EntryKind), String> = BTreeMap::new();
        for entry in entries.values().flatten() {
            let haystack = entry.text.to_lowercase();
            if !haystack.contains(&needle) {
                continue;
            }
            let snippet =
                entry.text.lines().find(|l| l.to_lowercase().contains(&needle)).unwrap_or(&entry.text).to_string();
            hits.entry((entry.identifier.clone(), entry.version, entry.kind)).or_insert(snippet);
        }
        hits.into_iter().map(|((id, version, kind), snippet)| SearchHit { id, version, kind, snippet }).collect()
    }
}
