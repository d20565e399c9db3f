use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub subcommand: &'a str,
    pub config: &'a C,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub started_at_unix: u64,
    pub wall_clock_ms: u128,
}

pub struct Run {
    started: Instant,
    started_at_unix: u64,
}

impl Run {
    pub fn start() -> Self {
        let started_at_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Run { started: Instant::now(), started_at_unix }
    }

    /// Write `<out>.manifest.json`, or `manifest.json` inside an output
    /// directory.
    pub fn finish<C: Serialize>(
        &self,
        out: &Path,
        subcommand: &str,
        config: &C,
        inputs: &[&Path],
        outputs: &[&Path],
        seed: Option<u64>,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            subcommand,
            config,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            started_at_unix: self.started_at_unix,
            wall_clock_ms: self.started.elapsed().as_millis(),
        };
        let path = if out.is_dir() {
            out.join("manifest.json")
        } else {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            out.with_file_name(name)
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
