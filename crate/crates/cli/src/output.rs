//! Atomic file emission and the on-disk formats.

use crate::config::{RunConfig, SeedSource};
use anyhow::{bail, Context};
use certisens::rb::ReducedModel;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const REDUCED_FORMAT: &str = "certisens-reduced-model";
pub const REDUCED_VERSION: u32 = 1;

/// Writes to a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// RFC 4180 table with a fixed header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_atomic(path, &bytes)
}

/// Shortest decimal that reads back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub source: Option<SeedSource>,
    pub snapshots: Option<u64>,
    pub design: Option<u64>,
    /// Bootstrap seed per input index, in row order.
    pub bootstrap: Vec<u64>,
}

impl Seeds {
    pub fn new(run: u64, source: SeedSource) -> Self {
        Self { run, source: Some(source), snapshots: None, design: None, bootstrap: Vec::new() }
    }
}

/// Bootstrap seed for input index i.
pub fn bootstrap_seed(run: u64, index: usize) -> u64 {
    run.wrapping_add(index as u64)
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub seeds: &'a Seeds,
    pub results: T,
}

pub fn out_path(dir: &Option<PathBuf>, name: &str) -> PathBuf {
    dir.as_deref().unwrap_or(Path::new(".")).join(name)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedModelFile {
    pub format: String,
    pub version: u32,
    pub config: serde_json::Value,
    pub seeds: Seeds,
    pub reduced_model: ReducedModel,
}

pub fn read_reduced_model(path: &Path) -> anyhow::Result<ReducedModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ReducedModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.format != REDUCED_FORMAT || file.version != REDUCED_VERSION {
        bail!(
            "{} is {} version {}, expected {REDUCED_FORMAT} version {REDUCED_VERSION}",
            path.display(),
            file.format,
            file.version
        );
    }
    Ok(file)
}
