use std::path::Path;

use serde::Serialize;

use super::eval::EvalReport;
use super::experiments::{AblationReport, SweepResult};
use super::train::TrainOutcome;
use crate::config::{hex_digest, ExperimentConfig};
use crate::netcore::encode_checkpoint;
use crate::{Error, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_bytes(path, &bytes)
}

pub fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("metrics.json"), report)?;
    write_csv(&dir.join("metrics.csv"), &report.rows)
}

pub struct RunArtifacts<'a> {
    pub cfg: &'a ExperimentConfig,
    pub outcome: &'a TrainOutcome,
    pub report: &'a EvalReport,
}

/// `checkpoint`, `config.json`, `log.csv`, `epochs.csv`, `metrics.json`, `metrics.csv`.
pub fn write_run(dir: &Path, a: &RunArtifacts) -> Result<String> {
    ensure_dir(dir)?;
    let ckpt = encode_checkpoint(&a.outcome.model, a.cfg.seed, &a.cfg.hash());
    write_bytes(&dir.join("checkpoint"), &ckpt)?;
    write_json(&dir.join("config.json"), a.cfg)?;
    write_csv(&dir.join("log.csv"), &a.outcome.steps)?;
    write_csv(&dir.join("epochs.csv"), &a.outcome.epochs)?;
    write_report(dir, a.report)?;
    Ok(hex_digest(&ckpt))
}

pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join("sweep.csv"), &result.rows)?;
    write_csv(&dir.join("sweep_points.csv"), &result.points)?;
    write_json(&dir.join("sweep.json"), result)
}

pub fn write_ablation(dir: &Path, report: &AblationReport) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join("ablation.csv"), &report.rows)?;
    write_json(&dir.join("ablation.json"), report)
}
