//! Line-delimited JSON files that only ever grow.
//!
//! Every line carries `schema_version`. A write that was cut short leaves a
//! final line without its newline; readers drop it and writers truncate it
//! away before appending, so an interrupted append never damages what was
//! already committed.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::StoreError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Line<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Deserialize)]
struct Version {
    schema_version: u32,
}

/// Parsed entries plus the byte length of the intact prefix.
pub(crate) struct Loaded<T> {
    pub entries: Vec<T>,
    pub valid_len: u64,
    pub torn: bool,
}

pub(crate) fn read<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let mut entries = Vec::new();
    for (n, raw) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
        if raw.is_empty() {
            continue;
        }
        let corrupt = |reason: String| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: n + 1,
            reason,
        };
        let version: Version = serde_json::from_slice(raw).map_err(|e| corrupt(e.to_string()))?;
        if version.schema_version != SCHEMA_VERSION {
            return Err(corrupt(format!(
                "unsupported schema_version {}",
                version.schema_version
            )));
        }
        let line: Line<T> = serde_json::from_slice(raw).map_err(|e| corrupt(e.to_string()))?;
        entries.push(line.body);
    }
    Ok(Loaded {
        entries,
        valid_len: complete as u64,
        torn: complete < bytes.len(),
    })
}

/// An append handle that knows how much of its file is trustworthy.
#[derive(Debug)]
pub(crate) struct Journal {
    path: PathBuf,
    /// Set when the file ends in a torn line that must go before the next append.
    truncate_to: Option<u64>,
}

impl Journal {
    pub fn new(path: PathBuf, torn_at: Option<u64>) -> Self {
        Self {
            path,
            truncate_to: torn_at,
        }
    }

    pub fn append<T: Serialize>(&mut self, body: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(&Line {
            schema_version: SCHEMA_VERSION,
            body,
        })
        .map_err(|e| StoreError::Encode(e.to_string()))?;
        line.push(b'\n');
        self.append_raw(&line)
    }

    pub(crate) fn append_raw(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        let io_err = |e| StoreError::io(&self.path, e);
        if let Some(parent) = self.path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err)?;
        if let Some(len) = self.truncate_to {
            file.set_len(len).map_err(io_err)?;
            self.truncate_to = None;
        }
        let start = file.metadata().map_err(io_err)?.len();
        let result = file.write_all(bytes).and_then(|()| file.sync_data());
        if let Err(e) = result {
            // Whatever part reached the disk is a torn line now.
            self.truncate_to = Some(start);
            return Err(io_err(e));
        }
        Ok(())
    }
}

/// Replaces `path` with `bytes` through a synced temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let io_err = |e| StoreError::io(path, e);
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    sync_dir(dir);
    Ok(())
}

#[cfg(unix)]
fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

#[cfg(not(unix))]
fn sync_dir(_dir: &Path) {}
