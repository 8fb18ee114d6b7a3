//! On-disk cache of triad tables keyed by a hash of the table configuration.

use std::fs;
use std::path::{Path, PathBuf};

use gevlab_core::coupling::TriadTable;
use gevlab_core::{spectrum, GeometryDescriptor};
use serde_json::json;

use crate::error::CliResult;
use crate::manifest::{content_hash, VERSION};

/// Which basis a table spans.
#[derive(Debug, Clone, Copy)]
pub struct TableConfig {
    pub geometry: GeometryDescriptor,
    pub cutoff: f64,
    /// Keep only the first `modes` basis functions in serialization order.
    pub modes: Option<usize>,
    pub drop_tol: f64,
}

impl TableConfig {
    pub fn key(&self) -> String {
        content_hash(&json!({
            "version": VERSION,
            "geometry": self.geometry.kind.name(),
            "a": self.geometry.a,
            "b": self.geometry.b,
            "cutoff": self.cutoff,
            "modes": self.modes,
            "drop_tol": self.drop_tol,
        }))
    }

    pub fn build(&self) -> CliResult<TriadTable> {
        let mut basis = spectrum(&self.geometry, self.cutoff)?;
        if let Some(n) = self.modes {
            basis.truncate(n);
        }
        Ok(TriadTable::from_basis(&self.geometry, basis, self.drop_tol)?)
    }
}

fn path_for(dir: &Path, tc: &TableConfig) -> PathBuf {
    dir.join(format!("triads-{}.json", tc.key()))
}

/// Loads the table from `dir` when present, otherwise builds and stores it.
/// Unreadable cache files are rebuilt rather than trusted.
pub fn load_or_build(dir: Option<&Path>, tc: &TableConfig) -> CliResult<TriadTable> {
    let Some(dir) = dir else {
        return tc.build();
    };
    let path = path_for(dir, tc);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(table) = serde_json::from_str::<TriadTable>(&text) {
            return Ok(table);
        }
    }
    let table = tc.build()?;
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string(&table)?)?;
    fs::rename(&tmp, &path)?;
    Ok(table)
}
