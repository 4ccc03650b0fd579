//! Rolling private white/black lists fed by solid verdicts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{load_labels, LabelEntry, LabelPattern, LabelSource};

use super::Verdict;

pub const LOCAL_RETENTION_SECS: i64 = 7 * 24 * 3600;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalListStore {
    entries: BTreeMap<String, LabelEntry>,
    retention: i64,
}

impl Default for LocalListStore {
    fn default() -> Self {
        Self::new(LOCAL_RETENTION_SECS)
    }
}

impl LocalListStore {
    pub fn new(retention: i64) -> Self {
        Self {
            entries: BTreeMap::new(),
            retention,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, domain: &str) -> Option<&LabelEntry> {
        self.entries.get(domain)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LabelEntry> {
        self.entries.values()
    }

    /// Records every solid verdict at `window_end`, then purges stale
    /// entries. A domain keeps only its most recent verdict.
    pub fn update<'a>(
        &mut self,
        verdicts: impl IntoIterator<Item = (&'a str, &'a Verdict)>,
        window_end: i64,
    ) {
        for (domain, v) in verdicts {
            if !v.solid {
                continue;
            }
            let fresh = LabelEntry::exact(domain, v.class_id, LabelSource::Local, window_end);
            match self.entries.get(domain) {
                Some(old) if old.issued_at > window_end => {}
                _ => {
                    self.entries.insert(domain.to_string(), fresh);
                }
            }
        }
        self.purge(window_end);
    }

    /// Drops entries older than the retention period relative to `now`.
    pub fn purge(&mut self, now: i64) {
        let retention = self.retention;
        self.entries.retain(|_, e| now - e.issued_at <= retention);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# domain,class_id,source,issued_at\n");
        for e in self.entries.values() {
            out.push_str(&e.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, class_count: usize) -> Result<Self> {
        let mut store = Self::default();
        for e in load_labels(path, class_count)? {
            if let LabelPattern::Exact(name) = &e.pattern {
                store.entries.insert(name.clone(), e);
            }
        }
        Ok(store)
    }
}
