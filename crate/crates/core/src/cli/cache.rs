//! Content-addressed store of cell results.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{DensityConfig, GeometryConfig};
use crate::cell::CellResult;
use crate::error::{Error, Result};
use crate::solver::SolveOptions;

/// Hex SHA-256 of the canonical TOML rendering of `value`.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let text = toml::to_string(value).expect("hash key serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Everything a cell result depends on.
#[derive(Serialize)]
pub struct CellKey<'a> {
    pub version: &'a str,
    pub density: &'a DensityConfig,
    pub geometry: &'a GeometryConfig,
    pub solver: &'a SolveOptions,
    pub ell: f64,
    pub z: &'a [f64],
}

impl CellKey<'_> {
    pub fn hash(&self) -> String {
        hash_of(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookup {
    Hit,
    Miss,
    Disabled,
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// A corrupt entry is reported and treated as a miss.
    pub fn lookup(&self, key: &str) -> (Option<CellResult>, Lookup) {
        let Some(path) = self.path(key) else {
            return (None, Lookup::Disabled);
        };
        let Ok(text) = fs::read_to_string(&path) else {
            return (None, Lookup::Miss);
        };
        match serde_json::from_str(&text) {
            Ok(r) => (Some(r), Lookup::Hit),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                (None, Lookup::Miss)
            }
        }
    }

    pub fn store(&self, key: &str, result: &CellResult) -> Result<()> {
        let Some(path) = self.path(key) else {
            return Ok(());
        };
        let dir = path.parent().unwrap();
        fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
        // write then rename so readers never see half a file
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string(result)?).map_err(|source| io_err(&tmp, source))?;
        fs::rename(&tmp, &path).map_err(|source| io_err(&path, source))
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}
