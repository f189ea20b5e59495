//! Append-only JSON-lines archive of optimized QAOA parameters.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Encoding;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub n: usize,
    pub encoding: Encoding,
    pub p: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Best expected energy reached, in kilometers.
    pub energy: f64,
}

/// Read every entry; a missing file is an empty archive.
pub fn load_archive(path: impl AsRef<Path>) -> Result<Vec<ArchiveEntry>> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Append entries, one line per write.
pub fn append_archive(path: impl AsRef<Path>, entries: &[ArchiveEntry]) -> Result<()> {
    if entries.is_empty() {
        return Ok(());
    }
    let path = path.as_ref();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for e in entries {
        let mut line = serde_json::to_string(e)?;
        line.push('\n');
        f.write_all(line.as_bytes())
            .map_err(|err| Error::io(path, err))?;
    }
    Ok(())
}

/// Lowest-energy entry matching `(n, encoding, p)`; later entries win ties.
pub fn best_entry(
    entries: &[ArchiveEntry],
    n: usize,
    encoding: Encoding,
    p: usize,
) -> Option<&ArchiveEntry> {
    entries
        .iter()
        .filter(|e| {
            e.n == n
                && e.encoding == encoding
                && e.p == p
                && e.gammas.len() == p
                && e.betas.len() == p
        })
        .fold(None, |best: Option<&ArchiveEntry>, e| match best {
            Some(b) if b.energy < e.energy => Some(b),
            _ => Some(e),
        })
}
