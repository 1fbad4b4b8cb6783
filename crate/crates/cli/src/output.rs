//! Output files: fixed-format CSV, JSON sidecars, plot scripts and the run
//! manifest with content hashes.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const BOWL_HEADER: [&str; 4] = ["r", "u", "v", "residual"];
pub const BRANCH_HEADER: [&str; 6] = ["s", "r", "u", "theta", "kappa", "residual"];
pub const NECK_HEADER: [&str; 5] = ["u", "r", "dr", "d2r", "residual"];
pub const BARRIER_HEADER: [&str; 3] = ["r", "w", "margin"];

/// Seventeen significant digits in scientific notation.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub wall_time_seconds: f64,
    pub checks: &'a [Check],
    pub files: &'a [FileEntry],
}

/// Writes files into one output directory and records their hashes.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(FileEntry {
            path: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn csv<const N: usize>(&mut self, name: &str, header: [&str; N], rows: &[[f64; N]]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.iter().map(|&x| number(x))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `manifest.json`, which lists every other file with its hash.
    pub fn manifest(&self, command: &str, config: &RunConfig, wall: f64, checks: &[Check]) -> Result<(), CliError> {
        let m = RunManifest {
            tool: "translab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            wall_time_seconds: wall,
            checks,
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// Gnuplot script drawing columns of CSV files.
pub fn plot_script(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, &str, &str)]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    s.push_str("set key left top\n");
    let parts: Vec<String> = series
        .iter()
        .map(|(file, using, label)| format!("'{file}' using {using} every ::1 with lines title '{label}'"))
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    s
}
