//! Number formatting, CSV tables, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::montecarlo::GENERATOR_ID;

use super::config::RunConfig;
use super::CliError;

pub const MANIFEST_VERSION: u32 = 1;

/// Twelve significant digits, shortest form, `.` as decimal separator.
/// Switches to exponent notation outside `[1e-5, 1e12)`. Negative zero
/// prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table built in memory; cells are never quoted, so callers only
/// pass labels without commas.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match cell {
                Cell::Num(x) => self.text.push_str(&fmt_num(*x)),
                Cell::Int(n) => write!(self.text, "{n}").expect("write to string"),
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell<'a> {
    Num(f64),
    Int(u64),
    Text(&'a str),
}

/// Collects written files for the manifest.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: vec![],
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `manifest_<command>.json` listing everything written so far.
    pub fn finish(
        mut self,
        command: &str,
        config: &RunConfig,
        workers: usize,
    ) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            master_seed: config.seed,
            generator: GENERATOR_ID,
            workers,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: std::mem::take(&mut self.written),
            config: config.clone(),
        };
        let name = format!("manifest_{}.json", command.replace(' ', "_"));
        self.write_json(&name, &manifest)
    }
}

#[derive(Serialize)]
struct Manifest {
    manifest_version: u32,
    tool: &'static str,
    version: &'static str,
    command: String,
    master_seed: u64,
    generator: &'static str,
    workers: usize,
    created_unix: u64,
    outputs: Vec<String>,
    /// Re-running with this file as `--config` reproduces the outputs.
    config: RunConfig,
}
