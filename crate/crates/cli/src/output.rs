//! Report, trace, manifest and comparison files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use rotgrad_harness::MetricsReport;

use crate::manifest::{config_hash, Outputs, RunManifest};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_CSV: &str = "comparison.csv";

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    body.push('\n');
    fs::write(path, body)
}

/// Writes `<root>/<name>/{report.json,trace.csv,manifest.json}` and returns
/// the run directory.
pub fn write_run(
    root: &Path,
    name: &str,
    command: &str,
    config: &Value,
    started_at: &str,
    report: &MetricsReport,
) -> io::Result<PathBuf> {
    let dir = root.join(name);
    fs::create_dir_all(&dir)?;
    let report_path = dir.join(REPORT_FILE);
    let trace_path = dir.join(TRACE_FILE);
    write_json(&report_path, report)?;
    fs::write(&trace_path, report.to_csv())?;
    let manifest = RunManifest {
        tool: env!("CARGO_BIN_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: config.clone(),
        config_hash: config_hash(config),
        started_at: started_at.into(),
        finished_at: crate::now(),
        outputs: Outputs {
            report: report_path.display().to_string(),
            trace: trace_path.display().to_string(),
        },
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(dir)
}

/// Final metrics of one sweep cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub method: String,
    pub seed: u64,
    pub mean_deg: f64,
    pub median_deg: f64,
    pub acc5: f64,
    pub acc3: f64,
    pub norm_ratio: f64,
}

impl CellSummary {
    pub fn new(method: String, seed: u64, r: &MetricsReport) -> Self {
        Self {
            method,
            seed,
            mean_deg: r.final_row.mean_deg,
            median_deg: r.final_row.median_deg,
            acc5: r.final_row.acc5,
            acc3: r.final_row.acc3,
            norm_ratio: r.norm_ratio(),
        }
    }
}

#[derive(Serialize)]
struct MethodSummary {
    method: String,
    seeds: Vec<u64>,
    median_deg_per_seed: Vec<f64>,
    /// Median over seeds of the per-seed median errors.
    median_deg: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Writes per-seed medians by method as JSON and every cell as CSV.
pub fn write_comparison(root: &Path, cells: &[CellSummary]) -> io::Result<PathBuf> {
    fs::create_dir_all(root)?;
    let mut by_method: BTreeMap<&str, Vec<&CellSummary>> = BTreeMap::new();
    for c in cells {
        by_method.entry(&c.method).or_default().push(c);
    }
    let methods: Vec<MethodSummary> = by_method
        .into_iter()
        .map(|(m, mut cs)| {
            cs.sort_by_key(|c| c.seed);
            let per_seed: Vec<f64> = cs.iter().map(|c| c.median_deg).collect();
            MethodSummary {
                method: m.into(),
                seeds: cs.iter().map(|c| c.seed).collect(),
                median_deg: median(&mut per_seed.clone()),
                median_deg_per_seed: per_seed,
            }
        })
        .collect();
    let path = root.join(COMPARISON_JSON);
    write_json(&path, &serde_json::json!({ "methods": methods, "cells": cells }))?;
    let mut csv = String::from("method,seed,mean_deg,median_deg,acc5,acc3,norm_ratio\n");
    for c in cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.method, c.seed, c.mean_deg, c.median_deg, c.acc5, c.acc3, c.norm_ratio
        ));
    }
    fs::write(root.join(COMPARISON_CSV), csv)?;
    Ok(path)
}
