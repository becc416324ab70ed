//! Benchmark runner over corpus and SCCA instances.
//!
//! Cells (entry × config × seed) run in parallel on a dedicated rayon pool
//! whose size is capped by the `PGCON_THREADS` environment variable. Rows are
//! returned in cell order, so output files do not depend on scheduling.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{check_oracle, corpus, CorpusInstance, OracleCheck};
use crate::driver::{solve, SolveReport, SolveStatus, SolverConfig};
use crate::scca::{scca_generate, solve_scca, SccaRun};

/// Seed used when a suite lists none.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Debug, PartialEq)]
pub enum SuiteEntry {
    Corpus(String),
    Scca {
        nx: usize,
        ny: usize,
        samples: usize,
        lambda: f64,
    },
}

impl SuiteEntry {
    /// Square SCCA entry with `N = n`.
    pub fn scca(n: usize, lambda: f64) -> Self {
        Self::Scca {
            nx: n,
            ny: n,
            samples: n,
            lambda,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Corpus(name) => name.clone(),
            Self::Scca {
                nx,
                ny,
                samples,
                lambda,
            } => {
                if nx == ny && ny == samples {
                    format!("scca-n{nx}-lambda{lambda:e}")
                } else {
                    format!("scca-{nx}x{ny}x{samples}-lambda{lambda:e}")
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct LabeledConfig {
    pub label: String,
    pub config: SolverConfig,
}

#[derive(Clone, Debug)]
pub struct Suite {
    pub entries: Vec<SuiteEntry>,
    pub configs: Vec<LabeledConfig>,
    pub seeds: Vec<u64>,
}

impl Suite {
    /// Every corpus instance under one config.
    pub fn corpus(config: LabeledConfig) -> Self {
        Self {
            entries: corpus()
                .iter()
                .map(|c| SuiteEntry::Corpus(c.name.to_string()))
                .collect(),
            configs: vec![config],
            seeds: Vec::new(),
        }
    }

    /// SCCA grid over sizes and regularization weights.
    pub fn scca_grid(
        sizes: &[usize],
        lambdas: &[f64],
        config: LabeledConfig,
        seeds: Vec<u64>,
    ) -> Self {
        let entries = sizes
            .iter()
            .flat_map(|&n| lambdas.iter().map(move |&l| SuiteEntry::scca(n, l)))
            .collect();
        Self {
            entries,
            configs: vec![config],
            seeds,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("suite has no entries or no configs")]
    EmptySuite,
    #[error("unknown corpus instance `{0}`")]
    UnknownInstance(String),
    #[error("oracle validation failed for {}", .0.iter().map(|c| c.name).collect::<Vec<_>>().join(", "))]
    Oracle(Vec<OracleCheck>),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One results row. Column order is the stable results schema.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub status: String,
    pub iters: usize,
    pub time_s: f64,
    pub chi: f64,
    pub c_norm: f64,
    pub rho_xy: Option<f64>,
    pub sr_x: Option<f64>,
    pub sr_y: Option<f64>,
    pub sr: Option<f64>,
    pub sl: Option<usize>,
    pub voc_x: Option<f64>,
    pub voc_y: Option<f64>,
    #[serde(skip)]
    pub config: String,
    #[serde(skip)]
    pub solved: bool,
    #[serde(skip)]
    pub message: Option<String>,
}

pub const RESULT_COLUMNS: [&str; 17] = [
    "instance", "n", "m", "lambda", "seed", "status", "iters", "time_s", "chi", "c_norm", "rho_xy",
    "sr_x", "sr_y", "sr", "sl", "voc_x", "voc_y",
];

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub instance: String,
    pub config: String,
    pub time: f64,
    pub solved: bool,
}

/// Worker count: `PGCON_THREADS` when set to a positive integer, otherwise
/// the available parallelism.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("PGCON_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(avail)
}

struct Cell<'a> {
    entry: &'a SuiteEntry,
    config: &'a LabeledConfig,
    seed: u64,
}

/// Runs every cell of `suite`. Corpus oracles are validated first and any
/// failure aborts the suite; individual solve failures are recorded as rows.
pub fn run_benchmark(suite: &Suite) -> Result<Vec<BenchRow>, BenchError> {
    if suite.entries.is_empty() || suite.configs.is_empty() {
        return Err(BenchError::EmptySuite);
    }
    let library = corpus();
    let mut needed: Vec<&CorpusInstance> = Vec::new();
    for e in &suite.entries {
        if let SuiteEntry::Corpus(name) = e {
            let inst = library
                .iter()
                .find(|c| c.name == name)
                .ok_or_else(|| BenchError::UnknownInstance(name.clone()))?;
            if !needed.iter().any(|c| c.name == inst.name) {
                needed.push(inst);
            }
        }
    }
    let failed: Vec<OracleCheck> = needed
        .iter()
        .map(|c| check_oracle(c))
        .filter(|c| !c.passed)
        .collect();
    if !failed.is_empty() {
        return Err(BenchError::Oracle(failed));
    }

    let seeds = if suite.seeds.is_empty() {
        vec![DEFAULT_SEED]
    } else {
        suite.seeds.clone()
    };
    let mut cells: Vec<Cell> = Vec::new();
    for entry in &suite.entries {
        for config in &suite.configs {
            for &seed in &seeds {
                cells.push(Cell {
                    entry,
                    config,
                    seed,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let rows = pool.install(|| {
        use rayon::prelude::*;
        cells.par_iter().map(|c| run_cell(c, &library)).collect()
    });
    Ok(rows)
}

impl BenchRow {
    fn blank(instance: String, n: usize, m: usize, seed: u64, config: &str) -> Self {
        Self {
            instance,
            n,
            m,
            lambda: None,
            seed,
            status: "error".into(),
            iters: 0,
            time_s: 0.0,
            chi: f64::NAN,
            c_norm: f64::NAN,
            rho_xy: None,
            sr_x: None,
            sr_y: None,
            sr: None,
            sl: None,
            voc_x: None,
            voc_y: None,
            config: config.to_string(),
            solved: false,
            message: None,
        }
    }

    /// Row for a plain solve; `time_s` is the report's wall time.
    pub fn from_report(
        instance: &str,
        config: &str,
        n: usize,
        m: usize,
        rep: &SolveReport<f64>,
    ) -> Self {
        let mut row = Self::blank(instance.to_string(), n, m, rep.seed, config);
        row.status = rep.status.to_string();
        row.iters = rep.iterations;
        row.time_s = rep.wall_time_secs;
        row.chi = rep.kkt.chi;
        row.c_norm = rep.c_norm;
        row.solved = rep.status == SolveStatus::KktPoint;
        row.message = rep.message.clone();
        row
    }

    /// Row for an SCCA run, including its metrics.
    pub fn from_scca(instance: &str, config: &str, lambda: f64, run: &SccaRun) -> Self {
        let rep = &run.report;
        let n = rep.x.len();
        let mut row = Self::from_report(instance, config, n, 2, rep);
        let m = &run.metrics;
        row.lambda = Some(lambda);
        row.time_s = m.wall_time;
        row.rho_xy = Some(m.rho_xy);
        row.sr_x = Some(m.sr_x);
        row.sr_y = Some(m.sr_y);
        row.sr = Some(m.sr);
        row.sl = Some(m.sl);
        row.voc_x = Some(m.voc_x);
        row.voc_y = Some(m.voc_y);
        row
    }
}

fn run_cell(cell: &Cell, library: &[CorpusInstance]) -> BenchRow {
    let mut cfg = cell.config.config.clone();
    cfg.seed = cell.seed;
    let label = cell.entry.label();
    let config = cell.config.label.as_str();
    match cell.entry {
        SuiteEntry::Corpus(name) => {
            let inst = library
                .iter()
                .find(|c| c.name == name)
                .expect("validated name");
            let (n, m) = (inst.problem.n(), inst.problem.m());
            match solve(&inst.problem, &inst.x0, &cfg) {
                Ok(rep) => BenchRow::from_report(&label, config, n, m, &rep),
                Err(e) => {
                    let mut row = BenchRow::blank(label, n, m, cell.seed, config);
                    row.message = Some(e.to_string());
                    row
                }
            }
        }
        SuiteEntry::Scca {
            nx,
            ny,
            samples,
            lambda,
        } => {
            let run = scca_generate(*nx, *ny, *samples, cell.seed)
                .map_err(|e| e.to_string())
                .and_then(|d| solve_scca(&d, *lambda, &cfg).map_err(|e| e.to_string()));
            match run {
                Ok(run) => BenchRow::from_scca(&label, config, *lambda, &run),
                Err(e) => {
                    let mut row = BenchRow::blank(label, nx + ny + 2, 2, cell.seed, config);
                    row.lambda = Some(*lambda);
                    row.message = Some(e);
                    row
                }
            }
        }
    }
}

pub fn write_results_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RESULT_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Profile rows sorted by config label, then time, then instance.
/// Instances are keyed `label#seed`.
pub fn profile_rows(rows: &[BenchRow]) -> Vec<ProfileRow> {
    let mut out: Vec<ProfileRow> = rows
        .iter()
        .map(|r| ProfileRow {
            instance: format!("{}#{}", r.instance, r.seed),
            config: r.config.clone(),
            time: r.time_s,
            solved: r.solved,
        })
        .collect();
    out.sort_by(|a, b| {
        a.config
            .cmp(&b.config)
            .then(a.time.total_cmp(&b.time))
            .then(a.instance.cmp(&b.instance))
    });
    out
}

pub fn write_profile_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let prof = profile_rows(rows);
    if prof.is_empty() {
        w.write_record(["instance", "config", "time", "solved"])?;
    }
    for p in prof {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
