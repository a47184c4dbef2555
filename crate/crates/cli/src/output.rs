//! Artifact writers. All floats use Rust's shortest round-trip formatting and
//! JSON maps are key-sorted, so identical runs give identical bytes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// One CSV cell.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct Output {
    dir: PathBuf,
    csv: bool,
    json: bool,
    artifacts: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, formats: &[String]) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: formats.iter().any(|f| f == "csv"),
            json: formats.iter().any(|f| f == "json"),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    /// CSV with `# key=value` metadata lines ahead of the column header.
    pub fn csv(&mut self, name: &str, meta: &[(&str, String)], columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for (k, v) in meta {
            writeln!(out, "# {k}={v}").map_err(|e| CliError::io(&path, e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut write = || -> csv::Result<()> {
            w.write_record(columns)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON data artifact.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        self.write_json(name, value)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// JSON written regardless of the selected formats.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
