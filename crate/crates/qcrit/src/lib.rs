//! Batch front-end for `qcrit-core`: declarative JSON run configs in,
//! CSV datasets plus a digest manifest out.

// `!(x > 0.0)` is how config checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod golden;
pub mod output;
pub mod run;
pub mod table;

use std::path::Path;
use std::time::Instant;

pub use config::{Command, ConfigError, RunConfig};
pub use golden::{compare_golden, GoldenReport, Tolerances};
pub use output::RunManifest;
pub use run::{execute, RunError, RunOutput};

/// Computes the whole run, then writes it into `dir`. Nothing is written if
/// any grid point fails.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path, threads: usize) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let out = execute(&cfg.command, threads)?;
    Ok(output::write_run(dir, cfg, &out, start.elapsed(), threads)?)
}
