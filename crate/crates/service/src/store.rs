//! One append-only JSON Lines log per session.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::session::Event;
use crate::ServiceError;

#[derive(Debug, Clone)]
pub struct EventStore {
    dir: PathBuf,
}

/// Session ids become file names; anything outside `[A-Za-z0-9._-]` is
/// written as `%XX`.
fn file_name(session_id: &str) -> String {
    let mut out = String::new();
    for b in session_id.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out.push_str(".jsonl");
    out
}

impl EventStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ServiceError::Store { path: dir.clone(), source: e })?;
        Ok(EventStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self, session_id: &str) -> PathBuf {
        self.dir.join(file_name(session_id))
    }

    /// Append one event and sync it to disk before returning.
    pub fn append(&self, session_id: &str, event: &Event) -> Result<(), ServiceError> {
        let path = self.log_path(session_id);
        let err = |source| ServiceError::Store { path: path.clone(), source };
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(err)?;
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(err)?;
        f.sync_data().map_err(err)
    }

    pub fn read_log(&self, path: &Path) -> Result<Vec<Event>, ServiceError> {
        let err = |source| ServiceError::Store { path: path.to_path_buf(), source };
        let reader = BufReader::new(File::open(path).map_err(err)?);
        let mut events = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(err)?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line) {
                Ok(e) => events.push(e),
                // a torn final write from a crash mid-append
                Err(_) if i + 1 == count_lines(path) => log::warn!("{}: dropping torn last line", path.display()),
                Err(e) => return Err(ServiceError::Corrupt(format!("{}:{}: {e}", path.display(), i + 1))),
            }
        }
        Ok(events)
    }

    /// Every session log in the store, in file-name order.
    pub fn load_all(&self) -> Result<Vec<Vec<Event>>, ServiceError> {
        let err = |source| ServiceError::Store { path: self.dir.clone(), source };
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        paths.iter().map(|p| self.read_log(p)).collect()
    }
}

fn count_lines(path: &Path) -> usize {
    fs::read_to_string(path).map(|s| s.lines().count()).unwrap_or(0)
}
