//! Experiment runner for the share-lending allocation rules: spec files in,
//! result tables and a pass/fail summary out.

pub mod error;
pub mod experiments;
pub mod report;
pub mod runner;
pub mod spec;
pub mod stats;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

pub use error::HarnessError;
pub use report::{Check, Report, Status};
pub use spec::{Experiment, ExperimentSpec};
pub use table::Format;

/// Runs the experiment and, when the experiment file names an output directory, writes
/// its files there.
pub fn execute(spec: &ExperimentSpec, diagnostic: bool) -> Result<Report, HarnessError> {
    let report = experiments::run(spec, diagnostic)?;
    if let Some(dir) = &spec.out {
        write_outputs(&report, dir, spec.format)?;
    }
    Ok(report)
}

/// Writes `<kind>.<ext>`, `<kind>.summary.txt` and one `<kind>.<trace>.<ext>`
/// per diagnostic table into `dir`. Returns the paths written.
pub fn write_outputs(
    report: &Report,
    dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let ext = format.extension();
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), HarnessError> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put(
        format!("{}.{ext}", report.kind),
        report.table.to_bytes(format),
    )?;
    put(
        format!("{}.summary.txt", report.kind),
        report.summary().into_bytes(),
    )?;
    for (suffix, table) in &report.traces {
        put(
            format!("{}.{suffix}.{ext}", report.kind),
            table.to_bytes(format),
        )?;
    }
    Ok(written)
}
