//! Replay tapes: JSON-lines files of (request hash, task, tier, reply text).
//! A tape captures every model reply of a run so the run can be repeated
//! byte-for-byte with no model in the loop.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::backend::{LlmBackend, RecordBackend, ReplayBackend};
use super::{LlmError, TaskClass, Tier};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeEntry {
    pub hash: String,
    pub task: TaskClass,
    pub tier: Tier,
    pub text: String,
}

/// In-memory tape, keyed by request hash. Insertion is last-writer-wins;
/// a hash collision with identical text is a no-op.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    entries: BTreeMap<String, TapeEntry>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|e| {
            LlmError::Backend(format!("cannot open tape {}: {e}", path.display()))
        })?;
        let reader = BufReader::new(file);
        let mut tape = Tape::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TapeEntry = serde_json::from_str(&line).map_err(|e| {
                LlmError::TapeParse { line: idx + 1, message: e.to_string() }
            })?;
            tape.entries.insert(entry.hash.clone(), entry);
        }
        Ok(tape)
    }

    /// Writes one JSON object per line, ordered by hash so the file bytes do
    /// not depend on completion order.
    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        for entry in self.entries.values() {
            serde_json::to_writer(&mut out, entry)
                .map_err(|e| LlmError::Backend(format!("tape serialize: {e}")))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn insert(&mut self, entry: TapeEntry) {
        self.entries.insert(entry.hash.clone(), entry);
    }

    pub fn get(&self, hash: &str) -> Option<&TapeEntry> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &TapeEntry> {
        self.entries.values()
    }
}

/// Opens a tape for replay. Every request must hit an entry; misses are
/// reported with the request hash.
pub fn replay_session(path: &Path) -> Result<ReplayBackend, LlmError> {
    Ok(ReplayBackend::new(Tape::load(path)?))
}

/// Wraps `inner` so every reply is also written to the tape at `path` when
/// the returned backend is finished (or dropped). An existing tape at the
/// path is extended, not clobbered.
pub fn record_session(
    path: impl Into<PathBuf>,
    inner: Box<dyn LlmBackend>,
) -> Result<RecordBackend, LlmError> {
    let path = path.into();
    let existing = if path.exists() { Tape::load(&path)? } else { Tape::new() };
    Ok(RecordBackend::new(inner, existing, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(hash: &str, text: &str) -> TapeEntry {
        TapeEntry {
            hash: hash.into(),
            task: TaskClass::SqlGeneration,
            tier: Tier::Capable,
            text: text.into(),
        }
    }

    #[test]
    fn round_trip_preserves_entries_and_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tape.jsonl");
        let mut tape = Tape::new();
        tape.insert(entry("bb", "two"));
        tape.insert(entry("aa", "one\nwith newline"));
        tape.save(&path).unwrap();
        let first = std::fs::read(&path).unwrap();

        let loaded = Tape::load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.get("aa").unwrap().text, "one\nwith newline");
        loaded.save(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn truncated_line_reports_its_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tape.jsonl");
        let good = serde_json::to_string(&entry("aa", "one")).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"hash\": \"bb\", \"ta")).unwrap();
        match Tape::load(&path) {
            Err(LlmError::TapeParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_hash_keeps_last_entry() {
        let mut tape = Tape::new();
        tape.insert(entry("aa", "first"));
        tape.insert(entry("aa", "second"));
        assert_eq!(tape.len(), 1);
        assert_eq!(tape.get("aa").unwrap().text, "second");
    }
}
