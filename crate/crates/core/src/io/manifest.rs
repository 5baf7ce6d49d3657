use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv::{render_csv, Cell};
use super::plot::{emit_plot, PlotOptions, Series};
use crate::analysis::{MonitorReport, ProfileFit};
use crate::error::{Error, Result};
use crate::profiles::Constants;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: ProfileFit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the run directory.
    pub name: String,
    pub kind: String,
    pub description: String,
}

/// Record of one experiment. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub experiment: String,
    pub name: String,
    /// UTC creation time; together with `timings` the only fields that vary
    /// between identical runs.
    pub created: String,
    pub passed: bool,
    pub config: serde_json::Value,
    pub constants: Option<Constants>,
    pub monitors: Vec<MonitorReport>,
    pub fits: Vec<NamedFit>,
    pub results: serde_json::Value,
    pub files: Vec<FileEntry>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)
    }
}

/// Creates `<out>/<name>-<experiment>-<timestamp>`, adding a numeric suffix
/// rather than reusing an existing directory.
pub fn create_run_dir(out: &Path, name: &str, experiment: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{name}-{experiment}-{stamp}");
    for n in 0.. {
        let dir = if n == 0 {
            out.join(&base)
        } else {
            out.join(format!("{base}-{n}"))
        };
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("directory suffixes exhausted")
}

/// Writes artifact files into a run directory and indexes them.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> Self {
        Artifacts { dir, files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn into_files(self) -> Vec<FileEntry> {
        self.files
    }

    fn record(&mut self, name: &str, kind: &str, description: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(FileEntry {
            name: name.into(),
            kind: kind.into(),
            description: description.into(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, description: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let text = render_csv(header, rows)?;
        self.record(name, "csv", description, &text)
    }

    pub fn svg(&mut self, name: &str, description: &str, series: &[Series], opts: &PlotOptions) -> Result<()> {
        let text = emit_plot(series, opts)?;
        self.record(name, "svg", description, &text)
    }

    /// Writes the manifest itself; every indexed file must exist.
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<PathBuf> {
        for f in &manifest.files {
            if !self.dir.join(&f.name).is_file() {
                return Err(Error::Precondition(format!("indexed file {} is missing", f.name)));
            }
        }
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, manifest.to_json()?)?;
        Ok(path)
    }
}
