//! Output files: atomic writes and CSV tables with a metadata line.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::snapshot::ARTIFACT_VERSION;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// A CSV table whose first line is `# ` followed by a JSON object with the
/// artifact version, the seed and the resolved config of the run.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(columns: &[&str], seed: Option<u64>, params: &Map<String, Value>) -> Self {
        let meta = json!({
            "artifact_version": ARTIFACT_VERSION,
            "seed": seed,
            "params": params,
        });
        let mut text = format!("# {meta}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            text,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        atomic_write(path, self.text.as_bytes())
    }
}

/// Shortest round-tripping decimal form; empty for a missing value.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
