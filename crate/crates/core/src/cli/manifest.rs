//! Run manifests and output files.
//!
//! Output files carry only what determines their content, so that a rerun
//! with the same configuration is byte-identical. Timing and the worker
//! count go to a `<out>.run.json` sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::Result;

pub const TOOL: &str = "tourney-extremes";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub schema: String,
    pub schema_version: u32,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(subcommand: &str, schema: &str, config: RunConfig) -> Self {
        RunManifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            schema: schema.to_string(),
            schema_version: SCHEMA_VERSION,
            config,
        }
    }
}

/// Timing and scheduling details that do not affect results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub output: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub wall_seconds: f64,
    pub workers: usize,
    pub argv: Vec<String>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".run.json");
    PathBuf::from(name)
}

/// Renders a versioned CSV document: a schema line, a manifest line, the
/// header row, then the records.
pub fn render_csv(manifest: &RunManifest, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# {} {} v{}", TOOL, manifest.schema, manifest.schema_version)?;
    writeln!(buf, "# manifest {}", serde_json::to_string(manifest)?)?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

/// Writes `bytes` to `out`, or to standard output when `out` is `None`.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}

pub fn write_sidecar(out: &Path, record: &RunRecord) -> Result<()> {
    std::fs::write(sidecar_path(out), serde_json::to_vec_pretty(record)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_schema_and_manifest_lines() {
        let m = RunManifest::new("exact", "exceedance", RunConfig::default());
        let bytes = render_csv(&m, &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# tourney-extremes exceedance v1");
        assert!(lines[1].starts_with("# manifest {"));
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "1,2");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.run.json"));
    }
}
