use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::ForgeError;

/// Writes report files into one directory and remembers their names.
pub struct Sink {
    dir: PathBuf,
    csv: bool,
    json: bool,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, csv: bool, json: bool) -> Result<Self, ForgeError> {
        std::fs::create_dir_all(dir).map_err(|source| ForgeError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
            json,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Names written since the last call.
    pub fn take_written(&mut self) -> Vec<String> {
        std::mem::take(&mut self.written)
    }

    pub fn csv<S: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = S>) -> Result<(), ForgeError> {
        if !self.csv {
            return Ok(());
        }
        let path = self.dir.join(name);
        let err = |source| ForgeError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        for row in rows {
            w.serialize(row).map_err(err)?;
        }
        w.flush().map_err(|source| ForgeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), ForgeError> {
        if !self.json {
            return Ok(());
        }
        self.write_json(name, value)
    }

    /// Writes JSON regardless of the configured formats.
    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), ForgeError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|source| ForgeError::Json {
            path: path.display().to_string(),
            source,
        })?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| ForgeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(name.to_string());
        Ok(())
    }
}
