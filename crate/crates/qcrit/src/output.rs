//! Writing a finished run: data files, gnuplot companions and the manifest.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::run::{PointFlag, RunOutput};
use crate::table::gnuplot_script;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub wall_time_s: f64,
    pub threads: usize,
    pub summary: Value,
    pub points: Vec<PointFlag>,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders every file of the run. The manifest is returned separately since
/// it lists the others.
pub fn render(out: &RunOutput) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for d in &out.datasets {
        let csv = format!("{}.csv", d.stem);
        files.push((format!("{}.gp", d.stem), gnuplot_script(&d.table, &csv, &d.plot).into_bytes()));
        files.push((csv, d.table.to_csv()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

/// Writes the data files and `manifest.json` into `dir` (created if needed).
pub fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    out: &RunOutput,
    wall: Duration,
    threads: usize,
) -> std::io::Result<RunManifest> {
    let files = render(out);
    std::fs::create_dir_all(dir)?;
    let mut outputs = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
        outputs.push(OutputFile { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    let manifest = RunManifest {
        tool: "qcrit",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.name(),
        config: cfg.echo.clone(),
        wall_time_s: wall.as_secs_f64(),
        threads,
        summary: out.summary.clone(),
        points: out.points.clone(),
        outputs,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
    json.push(b'\n');
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}
