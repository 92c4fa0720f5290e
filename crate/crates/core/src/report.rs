//! Writes a [`RepetitionReport`] to disk.
//!
//! Summary tables share the columns
//! `method,algorithm,class,statistic,estimate,lo,hi,defined_count,interval`.
//! `class` is 1-based or `all`; undefined values are written as `NA`.
//! Bootstrap methods report the mean bootstrap percentile bounds
//! (`interval = bootstrap_percentile`) and the total count of resamples where the
//! statistic was defined. The single-iteration method reports each statistic twice,
//! with `mean -/+ 0.95 sd` (`sd095`) and `mean -/+ 1.96 sd` (`sd196`) across
//! repetitions, and the number of repetitions where it was defined.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{Aggregate, Method, Record, RepetitionReport, Table};

pub const SUMMARY_HEADER: [&str; 9] = [
    "method",
    "algorithm",
    "class",
    "statistic",
    "estimate",
    "lo",
    "hi",
    "defined_count",
    "interval",
];

pub const REPETITION_HEADER: [&str; 9] = [
    "rep",
    "table",
    "method",
    "class",
    "statistic",
    "estimate",
    "lo",
    "hi",
    "defined_count",
];

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn fmt_class(c: Option<usize>) -> String {
    c.map_or_else(|| "all".to_string(), |c| c.to_string())
}

/// Summary rows for one aggregate.
pub fn summary_rows(a: &Aggregate, algorithm: &str) -> Vec<[String; 9]> {
    let head = |lo: Option<f64>, hi: Option<f64>, defined: usize, interval: &str| {
        [
            a.key.method.name().to_string(),
            algorithm.to_string(),
            fmt_class(a.key.class),
            a.key.statistic.clone(),
            fmt_opt(a.mean),
            fmt_opt(lo),
            fmt_opt(hi),
            defined.to_string(),
            interval.to_string(),
        ]
    };
    match (a.key.method, a.boot_defined) {
        (Method::NaiveBoot | Method::WeightedBoot, Some(d)) => {
            vec![head(a.mean_boot_lo, a.mean_boot_hi, d, "bootstrap_percentile")]
        }
        _ => vec![
            head(
                a.sd095_interval.map(|i| i.0),
                a.sd095_interval.map(|i| i.1),
                a.defined_reps,
                "sd095",
            ),
            head(
                a.sd196_interval.map(|i| i.0),
                a.sd196_interval.map(|i| i.1),
                a.defined_reps,
                "sd196",
            ),
        ],
    }
}

fn write_summary(path: &Path, report: &RepetitionReport, table: Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for a in report.aggregates.iter().filter(|a| a.key.table == table) {
        for row in summary_rows(a, &report.algorithm) {
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Long-format per-repetition rows with [`REPETITION_HEADER`].
pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPETITION_HEADER)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            r.table.name().to_string(),
            r.method.name().to_string(),
            fmt_class(r.class),
            r.statistic.clone(),
            fmt_opt(r.estimate),
            fmt_opt(r.lo),
            fmt_opt(r.hi),
            r.defined_count.map_or_else(|| "NA".to_string(), |d| d.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the five summary tables, `repetitions.csv`, `report.json` and `config.json` into `dir`.
/// With no methods selected only `config.json` is written.
pub fn emit_report(dir: &Path, report: &RepetitionReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = dir.join("config.json");
    fs::write(&cfg, serde_json::to_string_pretty(&report.config)?).map_err(|e| Error::io(&cfg, e))?;
    if report.config.methods.is_empty() {
        return Ok(());
    }
    for table in Table::ALL {
        write_summary(&dir.join(format!("{}.csv", table.name())), report, table)?;
    }
    write_records(&dir.join("repetitions.csv"), &report.records)?;
    let json = dir.join("report.json");
    fs::write(&json, serde_json::to_string(report)?).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RepetitionReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: RepetitionReport = serde_json::from_str(&text)?;
    if report.schema_version != crate::pipeline::SCHEMA_VERSION {
        return Err(Error::Invalid(format!(
            "unsupported report schema version {} (expected {})",
            report.schema_version,
            crate::pipeline::SCHEMA_VERSION
        )));
    }
    Ok(report)
}
