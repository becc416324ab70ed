//! `pgcon`: run single solves, benchmark suites, corpus validation and SCCA
//! experiments.
//!
//! Exit codes: 0 for a KKT point or a successful suite, 2 for a certified
//! infeasible stationary point, 1 for limits and failures, 64 for malformed
//! input or configuration. A `report.json` is written to the output
//! directory in every case where one could be created.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pgcon_core::bench::{
    run_benchmark, write_profile_csv, write_results_csv, BenchRow, LabeledConfig, Suite, SuiteEntry,
};
use pgcon_core::corpus::{check_oracle, corpus, Expectation};
use pgcon_core::scca::{scca_generate, solve_scca};
use pgcon_core::{load_config, solve, AlphaRule, ProblemFile, SolveStatus, SolverConfig};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "pgcon",
    version,
    about = "Proximal-gradient solver for constrained l1-regularized problems"
)]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// JSON config file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set tol_c=1e-8` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_name = "RULE", value_parser = parse_alpha_rule)]
    alpha_rule: Option<AlphaRule>,
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "pgcon-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem file.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run a benchmark suite.
    Bench {
        /// `corpus`, `scca` or `all`.
        #[arg(long, default_value = "corpus")]
        suite: String,
        /// SCCA sizes (n_x = n_y = N).
        #[arg(long, value_delimiter = ',', default_values_t = [200usize])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
        lambdas: Vec<f64>,
        /// Seeds (repeatable); none means the default seed.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Validate every corpus oracle.
    CorpusCheck {
        #[arg(long, default_value = "pgcon-out")]
        out: PathBuf,
    },
    /// Generate and solve an SCCA instance.
    Scca {
        #[arg(long)]
        n: usize,
        /// Sample count; defaults to n.
        #[arg(long = "N")]
        samples: Option<usize>,
        #[arg(long)]
        lambda: f64,
        /// Seeds (repeatable); none means seed 0.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_alpha_rule(s: &str) -> Result<AlphaRule, String> {
    s.parse()
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn fail(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_FAIL,
            error: error.into(),
        }
    }
}

fn build_config(
    args: &ConfigArgs,
    base: SolverConfig,
    seed: Option<u64>,
) -> Result<SolverConfig, Failure> {
    let mut cfg =
        load_config(args.config.as_deref(), base, &args.overrides).map_err(Failure::usage)?;
    if let Some(rule) = args.alpha_rule {
        cfg.alpha_rule = rule;
    }
    if let Some(t) = args.time_limit {
        cfg.time_limit_secs = t;
    }
    if let Some(k) = args.max_iter {
        cfg.max_iter = k;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn status_code(status: SolveStatus) -> u8 {
    match status.exit_code() {
        0 => EXIT_OK,
        2 => EXIT_INFEASIBLE,
        _ => EXIT_FAIL,
    }
}

fn cmd_solve(problem: &Path, seed: Option<u64>, args: &ConfigArgs) -> Result<(u8, Value), Failure> {
    let cfg = build_config(args, SolverConfig::default(), seed)?;
    let file = ProblemFile::load(problem).map_err(Failure::usage)?;
    let loaded = file.build().map_err(Failure::usage)?;
    let x0 = cfg.x0.clone().unwrap_or(loaded.x0);
    let report = solve(&loaded.problem, &x0, &cfg).map_err(Failure::usage)?;
    fs::create_dir_all(&args.out).map_err(Failure::fail)?;
    fs::write(args.out.join("ledger.csv"), report.ledger_csv()).map_err(Failure::fail)?;
    println!(
        "{}: {} after {} iterations, chi = {:.3e}, objective = {:.10e}",
        report.problem, report.status, report.iterations, report.kkt.chi, report.objective
    );
    let code = status_code(report.status);
    Ok((
        code,
        json!({
            "command": "solve",
            "problem_file": problem.display().to_string(),
            "config": cfg,
            "report": report,
        }),
    ))
}

fn expectation_met(row: &BenchRow) -> bool {
    let expected = corpus()
        .into_iter()
        .find(|c| c.name == row.instance)
        .map(|c| c.expectation);
    match expected {
        Some(Expectation::NoGuarantee) => row.status != "error",
        Some(Expectation::InfeasibleStationary) => {
            row.status == SolveStatus::InfeasibleStationary.to_string()
        }
        _ => row.solved,
    }
}

fn cmd_bench(
    suite_name: &str,
    sizes: &[usize],
    lambdas: &[f64],
    seeds: &[u64],
    args: &ConfigArgs,
) -> Result<(u8, Value), Failure> {
    let generic = build_config(args, SolverConfig::default(), None)?;
    let scca_cfg = build_config(args, SolverConfig::scca_default(), None)?;
    let label = match args.alpha_rule {
        Some(rule) => serde_json::to_value(rule)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        None => "default".to_string(),
    };
    let mut entries = Vec::new();
    let want_corpus = matches!(suite_name, "corpus" | "all");
    let want_scca = matches!(suite_name, "scca" | "all");
    if !want_corpus && !want_scca {
        return Err(Failure::usage(anyhow::anyhow!(
            "unknown suite `{suite_name}` (expected corpus, scca or all)"
        )));
    }
    let mut rows = Vec::new();
    if want_corpus {
        let suite = Suite {
            seeds: seeds.to_vec(),
            ..Suite::corpus(LabeledConfig {
                label: label.clone(),
                config: generic,
            })
        };
        entries.extend(suite.entries.iter().map(SuiteEntry::label));
        rows.extend(run_benchmark(&suite).map_err(Failure::fail)?);
    }
    if want_scca {
        let suite = Suite::scca_grid(
            sizes,
            lambdas,
            LabeledConfig {
                label: label.clone(),
                config: scca_cfg,
            },
            seeds.to_vec(),
        );
        entries.extend(suite.entries.iter().map(SuiteEntry::label));
        rows.extend(run_benchmark(&suite).map_err(Failure::fail)?);
    }
    fs::create_dir_all(&args.out).map_err(Failure::fail)?;
    let results = fs::File::create(args.out.join("results.csv")).map_err(Failure::fail)?;
    write_results_csv(&rows, results).map_err(Failure::fail)?;
    let profile = fs::File::create(args.out.join("profile.csv")).map_err(Failure::fail)?;
    write_profile_csv(&rows, profile).map_err(Failure::fail)?;
    let failures: Vec<&BenchRow> = rows.iter().filter(|r| !expectation_met(r)).collect();
    println!(
        "{} runs, {} unexpected outcomes",
        rows.len(),
        failures.len()
    );
    for f in &failures {
        println!(
            "  {} seed {}: {} {}",
            f.instance,
            f.seed,
            f.status,
            f.message.as_deref().unwrap_or("")
        );
    }
    let code = if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAIL
    };
    Ok((
        code,
        json!({
            "command": "bench",
            "suite": suite_name,
            "entries": entries,
            "runs": rows.len(),
            "unexpected": failures.iter().map(|r| json!({
                "instance": r.instance, "seed": r.seed, "status": r.status, "message": r.message,
            })).collect::<Vec<_>>(),
            "rows": rows,
        }),
    ))
}

fn cmd_corpus_check() -> (u8, Value) {
    let checks: Vec<_> = corpus().iter().map(check_oracle).collect();
    for c in &checks {
        println!(
            "{:<14} {} oracle_kkt={} brute_force_gap={}",
            c.name,
            if c.passed { "ok  " } else { "FAIL" },
            c.oracle_kkt.map_or("-".into(), |v| format!("{v:.2e}")),
            c.brute_force_gap.map_or("-".into(), |v| format!("{v:.2e}")),
        );
    }
    let all = checks.iter().all(|c| c.passed);
    let list: Vec<Value> = checks
        .iter()
        .map(|c| json!({"name": c.name, "passed": c.passed, "oracle_kkt": c.oracle_kkt, "brute_force_gap": c.brute_force_gap}))
        .collect();
    (
        if all { EXIT_OK } else { EXIT_FAIL },
        json!({"command": "corpus-check", "passed": all, "instances": list}),
    )
}

fn cmd_scca(
    n: usize,
    samples: Option<usize>,
    lambda: f64,
    seeds: &[u64],
    args: &ConfigArgs,
) -> Result<(u8, Value), Failure> {
    let seeds = if seeds.is_empty() {
        vec![0]
    } else {
        seeds.to_vec()
    };
    let samples = samples.unwrap_or(n);
    let label = SuiteEntry::Scca {
        nx: n,
        ny: n,
        samples,
        lambda,
    }
    .label();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut code = EXIT_OK;
    fs::create_dir_all(&args.out).map_err(Failure::fail)?;
    for &seed in &seeds {
        let cfg = build_config(args, SolverConfig::scca_default(), Some(seed))?;
        let data = scca_generate(n, n, samples, seed).map_err(Failure::usage)?;
        let run = solve_scca(&data, lambda, &cfg).map_err(Failure::usage)?;
        let ledger = if seeds.len() == 1 {
            "ledger.csv".to_string()
        } else {
            format!("ledger-seed{seed}.csv")
        };
        fs::write(args.out.join(&ledger), run.report.ledger_csv()).map_err(Failure::fail)?;
        let row = BenchRow::from_scca(&label, "scca", lambda, &run);
        println!(
            "seed {seed}: {} in {} iterations, rho = {:.6}, sr = {:.4}, sl = {}, voc = ({:.2e}, {:.2e})",
            run.report.status, run.report.iterations, run.metrics.rho_xy, run.metrics.sr, run.metrics.sl,
            run.metrics.voc_x, run.metrics.voc_y
        );
        code = code.max(status_code(run.report.status));
        reports.push(
            json!({"seed": seed, "config": cfg, "metrics": run.metrics, "report": run.report}),
        );
        rows.push(row);
    }
    let results = fs::File::create(args.out.join("results.csv")).map_err(Failure::fail)?;
    write_results_csv(&rows, results).map_err(Failure::fail)?;
    Ok((
        code,
        json!({"command": "scca", "instance": label, "rows": rows, "runs": reports}),
    ))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let out = match &cli.command {
        Command::Solve { cfg, .. } | Command::Bench { cfg, .. } | Command::Scca { cfg, .. } => {
            cfg.out.clone()
        }
        Command::CorpusCheck { out } => out.clone(),
    };
    let result = match &cli.command {
        Command::Solve { problem, seed, cfg } => cmd_solve(problem, *seed, cfg),
        Command::Bench {
            suite,
            sizes,
            lambdas,
            seeds,
            cfg,
        } => cmd_bench(suite, sizes, lambdas, seeds, cfg),
        Command::CorpusCheck { .. } => Ok(cmd_corpus_check()),
        Command::Scca {
            n,
            samples,
            lambda,
            seeds,
            cfg,
        } => cmd_scca(*n, *samples, *lambda, seeds, cfg),
    };
    let (code, report) = match result {
        Ok(v) => v,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            (
                f.code,
                json!({"error": format!("{:#}", f.error), "exit_code": f.code}),
            )
        }
    };
    if let Err(e) = write_json(&out, "report.json", &report) {
        eprintln!("error: {e:#}");
        return ExitCode::from(code.max(EXIT_FAIL));
    }
    ExitCode::from(code)
}
