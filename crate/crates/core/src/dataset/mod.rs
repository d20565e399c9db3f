//! Corpus files and train/dev/test splits.

mod split;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use self::split::{split_dataset, DatasetSplit, SplitError, SplitManifest, SplitSpec};
use crate::dialogue::{DialogueFlow, DialogueRecord};
use crate::document::Document;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
}

/// Read a JSON Lines file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Serialize records one per line. Field order follows the struct
/// definitions, so re-serializing a read corpus is byte-identical.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(to_jsonl(records).as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    read_jsonl(path)
}

pub fn read_flows(path: &Path) -> Result<Vec<DialogueFlow>, CorpusError> {
    read_jsonl(path)
}

pub fn read_corpus(path: &Path) -> Result<Vec<DialogueRecord>, CorpusError> {
    read_jsonl(path)
}

pub fn write_corpus(path: &Path, dialogues: &[DialogueRecord]) -> Result<(), CorpusError> {
    write_jsonl(path, dialogues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{DialogueAct, Role, Turn};

    #[test]
    fn corpus_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/dials.jsonl");
        let d = DialogueRecord {
            dial_id: "x".into(),
            doc_ids: vec!["doc".into()],
            domain: "ssa".into(),
            turns: vec![Turn {
                turn_id: 1,
                role: Role::User,
                da: DialogueAct::UserRequestQuery,
                grounding_sp_ids: vec!["3".into()],
                doc_id: "doc".into(),
                irrelevant_marker: false,
                utterance: "How do I \"apply\"?".into(),
            }],
        };
        write_corpus(&path, std::slice::from_ref(&d)).unwrap();
        let bytes = std::fs::read_to_string(&path).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, [d]);
        assert_eq!(to_jsonl(&back), bytes);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "\n{not json}\n").unwrap();
        let err = read_corpus(&path).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err}");
    }
}
