//! Result assembly and persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiments::{run_experiment, LedgerEntry, Table};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExperimentResult {
    pub artifact_version: String,
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    /// Indices, eta values and counts, keyed by name.
    pub integers: BTreeMap<String, i64>,
    /// Kind-specific report with every computed constant.
    pub report: Value,
    pub ledger: Vec<LedgerEntry>,
    pub passed: bool,
    /// Files written next to `result.json`.
    pub tables: Vec<String>,
    pub timings: Timings,
}

/// Runs the experiment. A library error becomes a failed ledger entry, so a
/// result exists for every valid config.
pub fn execute(cfg: &ExperimentConfig) -> (ExperimentResult, Vec<Table>) {
    let start = Instant::now();
    let (integers, report, ledger, tables) = match run_experiment(cfg) {
        Ok(o) => (o.integers, o.report, o.ledger, o.tables),
        Err(e) => (BTreeMap::new(), Value::Null, vec![LedgerEntry::new("module_error", false, None, e.to_string())], Vec::new()),
    };
    let passed = !ledger.is_empty() && ledger.iter().all(|e| e.passed);
    let result = ExperimentResult {
        artifact_version: ARTIFACT_VERSION.to_string(),
        config_hash: cfg.hash(),
        kind: cfg.kind,
        config: cfg.clone(),
        integers,
        report,
        ledger,
        passed,
        tables: tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        timings: Timings { total_seconds: start.elapsed().as_secs_f64() },
    };
    (result, tables)
}

/// First unused directory among `<hash>`, `<hash>.1`, `<hash>.2`, …
pub fn fresh_run_dir(root: &Path, hash: &str) -> PathBuf {
    let stem = &hash[..16];
    let mut dir = root.join(stem);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{stem}.{k}"));
        k += 1;
    }
    dir
}

pub fn persist(result: &ExperimentResult, tables: &[Table]) -> io::Result<PathBuf> {
    let dir = fresh_run_dir(&result.config.output_dir, &result.config_hash);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), result.config.to_toml_string())?;
    let json = serde_json::to_string_pretty(result).map_err(io::Error::other)?;
    fs::write(dir.join("result.json"), json + "\n")?;
    for t in tables {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name)))?;
        w.write_record(&t.headers)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        w.flush()?;
    }
    Ok(dir)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: ExperimentKind,
    pub summary: &'static str,
    pub anchor: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    use ExperimentKind::*;
    let entry = |kind, summary, anchor| CatalogEntry { kind, summary, anchor };
    vec![
        entry(Jr, "Zero mode of a mass domain wall on a line: count, chirality, decay rate and localization bounds.", "Jackiw-Rebbi zero mode on a line"),
        entry(GapScan, "Mass scan of a domain-wall torus for the threshold beyond which a spectral gap persists.", "spectral gap of the domain-wall operator for large mass"),
        entry(AsEta, "Chirality index of a chiral operator against half the eta difference of its two mass shifts.", "finite-dimensional index equals half the eta difference"),
        entry(Product, "Index of the cylinder extension of a chiral operator by a domain wall along an extra line.", "product formula for the cylinder extension"),
        entry(ApsIndex, "Index of the half-torus operator under spectral boundary conditions.", "APS index of the half torus"),
        entry(MainTheorem, "Plateau of the domain-wall eta difference over mass and smoothing width against the APS index.", "APS index equals the domain-wall eta difference"),
        entry(Excision, "Eigenvalue counts of two operators that agree on a shared region, under a heavy-mass bound.", "excision of eigenvalue counts"),
        entry(Smoothing, "Domain-wall eta at two smoothing widths for masses on the plateau.", "invariance of eta under smoothing of the wall"),
    ]
}

pub fn schemas() -> Value {
    serde_json::json!({
        "config": schemars::schema_for!(ExperimentConfig),
        "result": schemars::schema_for!(ExperimentResult),
    })
}
