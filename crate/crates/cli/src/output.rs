//! Table and summary writers shared by the sweep commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fvem::analysis::{ConvergenceRow, ConvergenceTable, FittedRates, RateAxis};
use serde::Serialize;

use crate::config::RunConfig;

/// One CSV/JSON record; the column set is fixed.
#[derive(Serialize)]
struct Record<'a> {
    family: &'a str,
    scheme: &'a str,
    #[serde(rename = "N")]
    n: usize,
    h: f64,
    k: Option<f64>,
    t: f64,
    err_l2: Option<f64>,
    err_h1: Option<f64>,
    probe: Option<f64>,
    rate_l2: Option<f64>,
    rate_h1: Option<f64>,
    rate_probe: Option<f64>,
    seconds: f64,
}

impl<'a> From<&'a ConvergenceRow> for Record<'a> {
    fn from(r: &'a ConvergenceRow) -> Self {
        Record {
            family: &r.family,
            scheme: &r.scheme,
            n: r.n,
            h: r.h,
            k: r.k,
            t: r.t,
            err_l2: r.err_l2,
            err_h1: r.err_h1,
            probe: r.probe,
            rate_l2: r.rate_l2,
            rate_h1: r.rate_h1,
            rate_probe: r.rate_probe,
            seconds: r.seconds,
        }
    }
}

/// Per-level details that have no CSV column.
#[derive(Serialize)]
struct LevelNote<'a> {
    #[serde(rename = "N")]
    n: usize,
    k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    extra: &'a BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct Assertion {
    pub column: &'static str,
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub passed: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    family: &'a str,
    axis: RateAxis,
    fitted: &'a FittedRates,
    failed_levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    assertion: Option<&'a Assertion>,
    levels: Vec<LevelNote<'a>>,
}

pub fn write_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    Ok(())
}

pub fn table_csv(table: &ConvergenceTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &table.rows {
        w.serialize(Record::from(row))?;
    }
    if table.rows.is_empty() {
        w.write_record([
            "family", "scheme", "N", "h", "k", "t", "err_l2", "err_h1", "probe", "rate_l2", "rate_h1", "rate_probe",
            "seconds",
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn write_table(
    out: &Path,
    command: &str,
    table: &ConvergenceTable,
    assertion: Option<&Assertion>,
) -> Result<()> {
    fs::write(out.join("table.csv"), table_csv(table)?)?;
    let records: Vec<Record> = table.rows.iter().map(Record::from).collect();
    fs::write(out.join("table.json"), serde_json::to_string_pretty(&records)? + "\n")?;
    let summary = Summary {
        command,
        family: table.rows.first().map(|r| r.family.as_str()).unwrap_or(""),
        axis: table.axis,
        fitted: &table.fitted,
        failed_levels: table.rows.iter().filter(|r| r.error.is_some()).count(),
        assertion,
        levels: table
            .rows
            .iter()
            .map(|r| LevelNote {
                n: r.n,
                k: r.k,
                error: r.error.as_deref(),
                extra: &r.extra,
            })
            .collect(),
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into())
}

fn rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Human-readable table for stdout.
pub fn print_table(table: &ConvergenceTable) {
    println!(
        "{:>6} {:>11} {:>11} {:>11} {:>11} {:>11} {:>7} {:>7} {:>7}",
        "N", "h", "k", "err_l2", "err_h1", "probe", "r_l2", "r_h1", "r_probe"
    );
    for r in &table.rows {
        if let Some(e) = &r.error {
            println!("{:>6} {:>11.4e} failed: {e}", r.n, r.h);
            continue;
        }
        println!(
            "{:>6} {:>11.4e} {:>11} {:>11} {:>11} {:>11} {:>7} {:>7} {:>7}",
            r.n,
            r.h,
            cell(r.k),
            cell(r.err_l2),
            cell(r.err_h1),
            cell(r.probe),
            rate(r.rate_l2),
            rate(r.rate_h1),
            rate(r.rate_probe)
        );
    }
    let f = &table.fitted;
    println!("fitted rates: l2 {}, h1 {}, probe {}", rate(f.l2), rate(f.h1), rate(f.probe));
}
