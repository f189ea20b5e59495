//! Evaluation formulas, multi-run statistics and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{Method, RunRecord};
use crate::scalar::Scalar;

pub const CSV_HEADER: [&str; 12] = [
    "method",
    "n",
    "seed",
    "best_cost_km",
    "classical_cost_km",
    "approximation_ratio",
    "relative_excess_pct",
    "circuit_depth",
    "total_gates",
    "valid_sample_fraction",
    "fallback_used",
    "wall_time_s",
];

pub const RECORDS_JSONL: &str = "records.jsonl";
pub const RECORDS_CSV: &str = "records.csv";
pub const STATS_JSON: &str = "stats.json";
pub const APPENDIX_TXT: &str = "appendix.txt";

/// Normal-approximation 95% quantile.
const Z95: f64 = 1.96;

fn positive_baseline<F: Scalar>(baseline: F) -> Result<()> {
    if baseline > F::zero() && baseline.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "baseline cost {} must be positive",
            baseline.to_f64_lossy()
        )))
    }
}

/// `c_quantum / c_classical`.
pub fn approximation_ratio<F: Scalar>(c_quantum: F, c_classical: F) -> Result<F> {
    positive_baseline(c_classical)?;
    Ok(c_quantum / c_classical)
}

/// Percent by which `c_method` exceeds the classical cost; positive is worse.
pub fn relative_excess_pct<F: Scalar>(c_method: F, c_classical: F) -> Result<F> {
    positive_baseline(c_classical)?;
    Ok((c_method - c_classical) / c_classical * F::lit(100.0))
}

/// Percent reduction of `mean_quantum` relative to `mean_classical`.
pub fn improvement_pct<F: Scalar>(mean_classical: F, mean_quantum: F) -> Result<F> {
    positive_baseline(mean_classical)?;
    Ok((mean_classical - mean_quantum) / mean_classical * F::lit(100.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub n: usize,
    pub runs: usize,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub min_cost: f64,
    pub max_cost: f64,
    pub mean_ratio: f64,
    pub ci95_halfwidth: f64,
    pub mean_classical_cost: f64,
    pub mean_circuit_depth: f64,
    pub mean_total_gates: f64,
    pub fallback_runs: usize,
}

/// Mean and sample standard deviation of values sorted first, so the result
/// does not depend on input order.
fn sorted_moments(mut xs: Vec<f64>) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    crate::stats::mean_std(&xs)
}

/// Statistics per `(method, n)`, ordered by method then `n`.
pub fn aggregate(records: &[RunRecord]) -> Vec<MethodStats> {
    let mut groups: BTreeMap<(Method, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.n)).or_default().push(r);
    }
    groups
        .into_iter()
        .filter_map(|((method, n), rs)| {
            if rs.is_empty() {
                log::warn!("no records for {method} at n = {n}");
                return None;
            }
            let col = |f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let costs = col(|r| r.best_cost);
            let (mean_cost, std_cost) = sorted_moments(costs.clone());
            let runs = rs.len();
            Some(MethodStats {
                method,
                n,
                runs,
                mean_cost,
                std_cost,
                min_cost: costs.iter().copied().fold(f64::INFINITY, f64::min),
                max_cost: costs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_ratio: sorted_moments(col(|r| r.approximation_ratio)).0,
                ci95_halfwidth: Z95 * std_cost / (runs as f64).sqrt(),
                mean_classical_cost: sorted_moments(col(|r| r.classical_cost)).0,
                mean_circuit_depth: sorted_moments(col(|r| r.circuit_depth as f64)).0,
                mean_total_gates: sorted_moments(col(|r| r.total_gates as f64)).0,
                fallback_runs: rs.iter().filter(|r| r.fallback_used).count(),
            })
        })
        .collect()
}

/// One CSV line of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    pub best_cost_km: f64,
    pub classical_cost_km: f64,
    pub approximation_ratio: f64,
    pub relative_excess_pct: f64,
    pub circuit_depth: usize,
    pub total_gates: usize,
    pub valid_sample_fraction: f64,
    pub fallback_used: bool,
    pub wall_time_s: f64,
}

impl CsvRow {
    pub fn from_record(r: &RunRecord) -> Result<Self> {
        Ok(CsvRow {
            method: r.method,
            n: r.n,
            seed: r.seed,
            best_cost_km: r.best_cost,
            classical_cost_km: r.classical_cost,
            approximation_ratio: r.approximation_ratio,
            relative_excess_pct: relative_excess_pct(r.best_cost, r.classical_cost)?,
            circuit_depth: r.circuit_depth,
            total_gates: r.total_gates,
            valid_sample_fraction: r.valid_sample_fraction,
            fallback_used: r.fallback_used,
            wall_time_s: r.wall_time,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow::from_record(r)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {header:?}"),
        });
    }
    rdr.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_jsonl(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

pub fn write_stats(stats: &[MethodStats], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, stats)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// `x` with at least six significant digits; integral values print exactly.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() || x.fract() == 0.0 {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    format!("{:.*}", (5 - mag).max(0) as usize, x)
}

pub const APPENDIX_ROWS: [&str; 5] = [
    "Quantum Solution (Cost in km)",
    "Classical Solution (Cost in km)",
    "Approximation Ratio",
    "Circuit Depth",
    "Total Gates",
];

/// Plain-text tables, one per method, with a column per city count.
pub fn appendix_table(stats: &[MethodStats]) -> String {
    let mut by_method: BTreeMap<Method, Vec<&MethodStats>> = BTreeMap::new();
    for s in stats {
        by_method.entry(s.method).or_default().push(s);
    }
    let label_w = APPENDIX_ROWS.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (method, mut cols) in by_method {
        cols.sort_by_key(|s| s.n);
        let cells: Vec<[String; 5]> = cols
            .iter()
            .map(|s| {
                [
                    sig6(s.mean_cost),
                    sig6(s.mean_classical_cost),
                    sig6(s.mean_ratio),
                    sig6(s.mean_circuit_depth),
                    sig6(s.mean_total_gates),
                ]
            })
            .collect();
        let widths: Vec<usize> = cols
            .iter()
            .zip(&cells)
            .map(|(s, c)| {
                c.iter()
                    .map(String::len)
                    .chain([format!("n = {}", s.n).len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let _ = writeln!(out, "Method: {method}");
        let _ = write!(out, "{:label_w$}", "Number of Cities");
        for (s, w) in cols.iter().zip(&widths) {
            let _ = write!(out, " | {:>w$}", format!("n = {}", s.n));
        }
        out.push('\n');
        for (row, label) in APPENDIX_ROWS.iter().enumerate() {
            let _ = write!(out, "{label:label_w$}");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " | {:>w$}", c[row]);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            _ => Err(Error::invalid(format!("unknown report format `{s}`"))),
        }
    }
}

/// Write the files of `format` into `dir`; returns their paths.
pub fn emit_report(
    records: &[RunRecord],
    format: ReportFormat,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stats = aggregate(records);
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let p = dir.join(RECORDS_CSV);
            write_csv(records, &p)?;
            written.push(p);
        }
        ReportFormat::Json => {
            let p = dir.join(RECORDS_JSONL);
            write_jsonl(records, &p)?;
            written.push(p);
            let p = dir.join(STATS_JSON);
            write_stats(&stats, &p)?;
            written.push(p);
        }
        ReportFormat::Table => {
            let p = dir.join(APPENDIX_TXT);
            std::fs::write(&p, appendix_table(&stats)).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
    }
    Ok(written)
}
