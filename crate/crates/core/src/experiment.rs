//! Seeded sweeps over (method, city count) cells.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{
    append_archive, load_archive, solve, ArchiveEntry, Method, RunRecord, SolveConfig,
};
use crate::instance::{select_subinstance, City, MIN_CITIES};
use crate::metrics::{self, ReportFormat};

pub const ARCHIVE_FILE: &str = "params.jsonl";
pub const FAILURES_FILE: &str = "failures.json";
pub const CELLS_DIR: &str = "cells";

#[derive(Debug, Clone)]
pub struct Experiment {
    pub min_n: usize,
    pub max_n: usize,
    pub runs: usize,
    pub methods: Vec<Method>,
    pub seed_base: u64,
    /// Template for every run; `method` and `seed` are overwritten per run.
    pub config: SolveConfig,
    pub pool: Vec<City>,
    pub max_cities: usize,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Parameter archive; defaults to `params.jsonl` inside `out`.
    pub archive: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub files: Vec<PathBuf>,
}

struct Cell {
    records: Vec<RunRecord>,
    failures: Vec<RunFailure>,
    archive: Vec<ArchiveEntry>,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.min_n < MIN_CITIES || self.max_n > self.max_cities || self.min_n > self.max_n {
            return Err(Error::invalid(format!(
                "city range [{}, {}] must lie within [{MIN_CITIES}, {}]",
                self.min_n, self.max_n, self.max_cities
            )));
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        self.config.validate()
    }

    fn archive_path(&self) -> PathBuf {
        self.archive
            .clone()
            .unwrap_or_else(|| self.out.join(ARCHIVE_FILE))
    }

    /// Cells in report order: methods as given, then ascending `n`.
    pub fn cells(&self) -> Vec<(Method, usize)> {
        self.methods
            .iter()
            .flat_map(|&m| (self.min_n..=self.max_n).map(move |n| (m, n)))
            .collect()
    }
}

pub fn cell_file(out: &Path, method: Method, n: usize) -> PathBuf {
    out.join(CELLS_DIR).join(format!("{method}_n{n}.jsonl"))
}

fn run_cell(exp: &Experiment, method: Method, n: usize, archive: &[ArchiveEntry]) -> Cell {
    let mut cell = Cell {
        records: Vec::new(),
        failures: Vec::new(),
        archive: Vec::new(),
    };
    for r in 0..exp.runs as u64 {
        let seed = exp.seed_base + r;
        let config = SolveConfig {
            method,
            seed,
            ..exp.config.clone()
        };
        let outcome = select_subinstance::<f64>(&exp.pool, n, seed, exp.max_cities)
            .and_then(|inst| solve(&inst, &config, archive));
        match outcome {
            Ok(o) => {
                cell.records.push(o.record);
                cell.archive.extend(o.archive);
            }
            Err(e) => {
                log::warn!("{method} n = {n} seed = {seed} failed: {e}");
                cell.failures.push(RunFailure {
                    method,
                    n,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    cell
}

/// Run every cell, write per-cell record files, the merged records, stats
/// and appendix tables, and append new parameters to the archive. The
/// archive is read once before any cell starts, so results do not depend on
/// scheduling. Failed runs are collected, not fatal.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentSummary> {
    exp.validate()?;
    let cells_dir = exp.out.join(CELLS_DIR);
    std::fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;
    let archive_path = exp.archive_path();
    let snapshot = load_archive(&archive_path)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let cells = exp.cells();
    let results: Vec<Result<Cell>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(method, n)| {
                let cell = run_cell(exp, method, n, &snapshot);
                metrics::write_jsonl(&cell.records, cell_file(&exp.out, method, n))?;
                Ok(cell)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut new_entries = Vec::new();
    for cell in results {
        let cell = cell?;
        records.extend(cell.records);
        failures.extend(cell.failures);
        new_entries.extend(cell.archive);
    }
    append_archive(&archive_path, &new_entries)?;

    let mut files = Vec::new();
    for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table] {
        files.extend(metrics::emit_report(&records, format, &exp.out)?);
    }
    let fail_path = exp.out.join(FAILURES_FILE);
    std::fs::write(&fail_path, serde_json::to_string_pretty(&failures)? + "\n")
        .map_err(|e| Error::io(&fail_path, e))?;
    files.push(fail_path);
    Ok(ExperimentSummary {
        records,
        failures,
        files,
    })
}

/// Read the merged records of a results directory, or the per-cell files
/// when the merged file is missing.
pub fn load_results(dir: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let dir = dir.as_ref();
    let merged = dir.join(metrics::RECORDS_JSONL);
    if merged.exists() {
        return metrics::read_jsonl(merged);
    }
    let cells = dir.join(CELLS_DIR);
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&cells) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(&cells, e)),
    };
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        out.extend(metrics::read_jsonl(p)?);
    }
    out.sort_by_key(|a| (a.method, a.n, a.seed));
    Ok(out)
}
