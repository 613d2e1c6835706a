//! Result records, CSV tables and the JSON metadata sidecar.
//!
//! State tables (every scenario except the report) have the columns
//!
//! ```text
//! config_hash,series,t,negativity,trace,min_eigenvalue,observable,observable_sem,state_sem,trace_distance
//! ```
//!
//! where `observable` is the scenario's designated observable, the two SEM
//! columns and `trace_distance` are filled for ensemble rows only, and
//! `state_sem` is the Frobenius-norm standard error of the mean state.
//!
//! The least-decoherence report uses `config_hash,series,x,value`.
//!
//! Empty cells mean "not applicable".

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::scenarios::Scenario;

pub const STATE_HEADER: &str =
    "config_hash,series,t,negativity,trace,min_eigenvalue,observable,observable_sem,state_sem,trace_distance";
pub const REPORT_HEADER: &str = "config_hash,series,x,value";

/// Row-level invariants enforced before anything is written.
pub const TRACE_TOL: f64 = 1e-8;
pub const MIN_EIGENVALUE_FLOOR: f64 = -1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct StateRow {
    pub series: String,
    pub t: f64,
    pub negativity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub observable: Option<f64>,
    pub observable_sem: Option<f64>,
    pub state_sem: Option<f64>,
    pub trace_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub series: String,
    pub x: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    States(Vec<StateRow>),
    Report(Vec<ReportRow>),
}

#[derive(Clone, Debug)]
pub struct ResultRecord {
    pub scenario: Scenario,
    pub config: Config,
    pub config_hash: String,
    pub table: Table,
    /// Scalar results keyed by name, e.g. `max_negativity[lambda=0.5]`.
    pub summary: BTreeMap<String, f64>,
}

/// First 16 hex digits of the SHA-256 of the resolved config's TOML form.
/// The output path is left out so that writing elsewhere does not change the
/// table.
pub fn config_hash(config: &Config) -> String {
    let mut config = config.clone();
    config.output.path.clear();
    let digest = Sha256::digest(config.to_toml().as_bytes());
    hex::encode(&digest[..8])
}

fn num(out: &mut String, x: f64) {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        write!(out, "{x}").unwrap();
    } else {
        write!(out, "{x:e}").unwrap();
    }
}

fn opt(out: &mut String, x: Option<f64>) {
    if let Some(x) = x {
        num(out, x);
    }
}

impl ResultRecord {
    pub fn new(scenario: Scenario, config: Config, table: Table, summary: BTreeMap<String, f64>) -> Self {
        let config_hash = config_hash(&config);
        Self { scenario, config, config_hash, table, summary }
    }

    pub fn state_rows(&self) -> &[StateRow] {
        match &self.table {
            Table::States(rows) => rows,
            Table::Report(_) => &[],
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        for r in self.state_rows() {
            let fail = |what: String| Err(HarnessError::Invariant(format!("series {} at t = {}: {what}", r.series, r.t)));
            if !((r.trace - 1.0).abs() <= TRACE_TOL) {
                return fail(format!("trace {} differs from 1 by more than {TRACE_TOL:e}", r.trace));
            }
            if !(r.min_eigenvalue >= MIN_EIGENVALUE_FLOOR) {
                return fail(format!("minimum eigenvalue {:e} below {MIN_EIGENVALUE_FLOOR:e}", r.min_eigenvalue));
            }
            if !(r.negativity >= 0.0) {
                return fail(format!("negativity {} is negative", r.negativity));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Table::States(rows) => {
                out.push_str(STATE_HEADER);
                out.push('\n');
                for r in rows {
                    write!(out, "{},{},", self.config_hash, r.series).unwrap();
                    num(&mut out, r.t);
                    for x in [r.negativity, r.trace, r.min_eigenvalue] {
                        out.push(',');
                        num(&mut out, x);
                    }
                    for x in [r.observable, r.observable_sem, r.state_sem, r.trace_distance] {
                        out.push(',');
                        opt(&mut out, x);
                    }
                    out.push('\n');
                }
            }
            Table::Report(rows) => {
                out.push_str(REPORT_HEADER);
                out.push('\n');
                for r in rows {
                    write!(out, "{},{},", self.config_hash, r.series).unwrap();
                    num(&mut out, r.x);
                    out.push(',');
                    num(&mut out, r.value);
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a str,
    code_version: &'a str,
    config_hash: &'a str,
    config: &'a Config,
    /// The same config as TOML; feed it back with `--config` to reproduce.
    config_toml: String,
    csv_path: String,
    csv_sha256: String,
    rows: usize,
    summary: &'a BTreeMap<String, f64>,
    threads: Option<usize>,
    wall_time_seconds: f64,
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV and its metadata sidecar; returns the sidecar path.
pub fn write_outputs(record: &ResultRecord, csv_path: &Path, threads: Option<usize>, wall_time: f64) -> Result<PathBuf> {
    let csv = record.to_csv();
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("cannot create {}", dir.display()), e))?;
    }
    std::fs::write(csv_path, &csv).map_err(|e| HarnessError::io(format!("cannot write {}", csv_path.display()), e))?;
    let rows = csv.lines().count() - 1;
    let sidecar = Sidecar {
        scenario: record.scenario.name(),
        code_version: env!("CARGO_PKG_VERSION"),
        config_hash: &record.config_hash,
        config: &record.config,
        config_toml: record.config.to_toml(),
        csv_path: csv_path.display().to_string(),
        csv_sha256: hex::encode(Sha256::digest(csv.as_bytes())),
        rows,
        summary: &record.summary,
        threads,
        wall_time_seconds: wall_time,
    };
    let path = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar is serializable");
    std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn record(table: Table) -> ResultRecord {
        let config = Config::resolve(&RawConfig::default(), Scenario::NonEntangling).unwrap();
        ResultRecord::new(Scenario::NonEntangling, config, table, BTreeMap::new())
    }

    fn row(trace: f64, min_eigenvalue: f64, negativity: f64) -> StateRow {
        StateRow {
            series: "s".into(),
            t: 0.5,
            negativity,
            trace,
            min_eigenvalue,
            observable: Some(0.25),
            observable_sem: None,
            state_sem: Some(1e-7),
            trace_distance: None,
        }
    }

    #[test]
    fn csv_layout() {
        let rec = record(Table::States(vec![row(1.0, 0.1, 0.0)]));
        let csv = rec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(STATE_HEADER));
        assert_eq!(lines.next().unwrap(), format!("{},s,0.5,0,1,0.1,0.25,,1e-7,", rec.config_hash));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(record(Table::States(vec![row(1.0 + 1e-9, -1e-7, 0.0)])).check_invariants().is_ok());
        for bad in [row(1.0 + 1e-7, 0.0, 0.0), row(1.0, -1e-5, 0.0), row(1.0, 0.0, -1e-3), row(f64::NAN, 0.0, 0.0)] {
            let err = record(Table::States(vec![bad])).check_invariants().unwrap_err();
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn hash_tracks_config_changes() {
        let a = Config::resolve(&RawConfig::default(), Scenario::NonEntangling).unwrap();
        let mut b = a.clone();
        b.ensemble.seed += 1;
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
        let mut c = a.clone();
        c.output.path = "elsewhere.csv".into();
        assert_eq!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn sidecar_sits_next_to_csv() {
        assert_eq!(sidecar_path(Path::new("runs/a.csv")), PathBuf::from("runs/a.json"));
    }
}
