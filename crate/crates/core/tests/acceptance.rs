//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use pgcon_core::corpus::{corpus, CorpusInstance, Expectation};
use pgcon_core::linalg::{norm_inf, sub};
use pgcon_core::problem::{check_derivatives, default_fd_step};
use pgcon_core::qp::{solve_qp, verify_kkt, QpObjective, QpStatus};
use pgcon_core::scca::{
    noise_variance, scca_generate, scca_init, scca_problem, solve_scca, SccaRun,
};
use pgcon_core::{solve, AlphaRule, InvariantViolation, SolveReport, SolveStatus, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCCA_N: usize = 200;
const SCCA_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scca_run(n: usize, lambda: f64, seed: u64, cfg: &SolverConfig) -> SccaRun {
    let data = scca_generate(n, n, n, seed).expect("generator");
    solve_scca(&data, lambda, cfg).expect("scca solve")
}

fn solve_instance(inst: &CorpusInstance, cfg: &SolverConfig) -> SolveReport<f64> {
    solve(&inst.problem, &inst.x0, cfg).expect("solve")
}

fn scca_reproduction() -> Outcome {
    let cfg = SolverConfig {
        time_limit_secs: 600.0,
        ..SolverConfig::scca_default()
    };
    let mut failures = Vec::new();
    let mut worst = (f64::INFINITY, 0usize, f64::INFINITY, 0.0f64, 0.0f64);
    for seed in SCCA_SEEDS {
        let run = scca_run(SCCA_N, 1e-2, seed, &cfg);
        let m = &run.metrics;
        worst = (
            worst.0.min(m.rho_xy),
            worst.1.max(m.sl),
            worst.2.min(m.sr),
            worst.3.max(m.voc_x.max(m.voc_y)),
            worst.4.max(m.wall_time),
        );
        let ok = run.report.status == SolveStatus::KktPoint
            && m.wall_time <= 600.0
            && m.rho_xy >= 0.999
            && m.sl == 0
            && m.sr >= 0.98
            && m.voc_x <= 1e-6
            && m.voc_y <= 1e-6;
        if !ok {
            failures.push(format!(
                "seed {seed}: {} rho={} sl={} sr={}",
                run.report.status, m.rho_xy, m.sl, m.sr
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "min rho={:.6} max sl={} min sr={:.4} max voc={:.2e} max time={:.2}s {}",
            worst.0,
            worst.1,
            worst.2,
            worst.3,
            worst.4,
            failures.join("; ")
        ),
    )
}

fn lambda_monotone_sparsity() -> Outcome {
    let cfg = SolverConfig::scca_default();
    let sr: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&l| scca_run(SCCA_N, l, 0, &cfg).metrics.sr)
        .collect();
    outcome(
        sr[0] >= sr[1] && sr[1] >= sr[2],
        format!("sr at lambda 1e-2, 1e-3, 1e-4 = {sr:?}"),
    )
}

fn corpus_optimality() -> Outcome {
    let cfg = SolverConfig::default();
    let mut total = 0;
    let mut good = 0;
    let mut misses = Vec::new();
    let mut infeas_ok = false;
    for inst in corpus() {
        let rep = solve_instance(&inst, &cfg);
        if inst.expectation == Expectation::InfeasibleStationary {
            infeas_ok = inst.name == "INFEAS-1" && rep.status == SolveStatus::InfeasibleStationary;
            continue;
        }
        let Some(oracle) = &inst.oracle else { continue };
        total += 1;
        let err = norm_inf(&sub(&rep.x, &oracle.x));
        if rep.status == SolveStatus::KktPoint && err <= 1e-4 && rep.kkt.chi <= 1e-4 {
            good += 1;
        } else {
            misses.push(format!(
                "{} ({}, err {err:.2e}, chi {:.2e})",
                inst.name, rep.status, rep.kkt.chi
            ));
        }
    }
    let frac = good as f64 / total as f64;
    outcome(
        frac >= 0.95 && infeas_ok,
        format!(
            "{good}/{total} oracle instances solved, INFEAS-1 infeasible-stationary: {infeas_ok} {}",
            misses.join("; ")
        ),
    )
}

fn invariant_suite() -> Outcome {
    let mut count = 0;
    let mut violations: Vec<(String, InvariantViolation)> = Vec::new();
    for rule in [AlphaRule::MinCap, AlphaRule::Hold] {
        let cfg = SolverConfig {
            alpha_rule: rule,
            check_invariants: true,
            ..SolverConfig::default()
        };
        for inst in corpus() {
            let rep = solve_instance(&inst, &cfg);
            count += 1;
            violations.extend(
                rep.invariant_violations
                    .into_iter()
                    .map(|v| (format!("{} {rule:?}", inst.name), v)),
            );
        }
        let cfg = SolverConfig {
            alpha_rule: rule,
            check_invariants: true,
            ..SolverConfig::scca_default()
        };
        let run = scca_run(SCCA_N, 1e-2, 0, &cfg);
        count += 1;
        violations.extend(
            run.report
                .invariant_violations
                .into_iter()
                .map(|v| (format!("SCCA-200 {rule:?}"), v)),
        );
    }
    let shown: Vec<String> = violations
        .iter()
        .take(5)
        .map(|(n, v)| format!("{n} k={} {:?} +{:.2e}", v.k, v.kind, v.excess))
        .collect();
    outcome(
        violations.is_empty(),
        format!(
            "{count} solves under min_cap and hold, {} violations {}",
            violations.len(),
            shown.join("; ")
        ),
    )
}

fn qp_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_err = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut bad = 0;
    for _ in 0..200 {
        let qp = common::random_qp(&mut rng);
        let QpObjective::Dense { hessian, linear } = &qp.objective else {
            unreachable!()
        };
        let Some(oracle) =
            common::enumerate_qp(hessian, linear, &qp.eq_matrix, &qp.eq_rhs, &qp.bounds)
        else {
            bad += 1;
            continue;
        };
        let sol = solve_qp(&qp, 1e-10, None, None);
        if sol.status != QpStatus::Solved {
            bad += 1;
            continue;
        }
        worst_err = worst_err.max(norm_inf(&sub(&sol.primal, &oracle)));
        worst_kkt = worst_kkt.max(verify_kkt(&qp, &sol).overall);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && worst_err <= 1e-8 && worst_kkt <= 1e-8 && secs <= 60.0,
        format!("200 QPs, {bad} unsolved, max primal error {worst_err:.2e}, max kkt {worst_kkt:.2e}, {secs:.2}s"),
    )
}

fn active_set_identification() -> Outcome {
    let inst = corpus()
        .into_iter()
        .find(|c| c.name == "SC-ORTH-1")
        .expect("instance");
    let oracle = inst.oracle.as_ref().expect("oracle");
    let rep = solve_instance(&inst, &SolverConfig::default());
    let ok = rep.status == SolveStatus::KktPoint
        && rep.active_set_stabilization.is_some()
        && rep.final_active_set == oracle.active_set
        && rep.sign_stabilization.is_some()
        && rep.final_sign_pattern == oracle.sign_pattern;
    outcome(
        ok,
        format!(
            "active set {:?} stabilized at {:?} (oracle {:?}), sign pattern {} stabilized at {:?} (oracle {})",
            rep.final_active_set,
            rep.active_set_stabilization,
            oracle.active_set,
            rep.final_sign_pattern,
            rep.sign_stabilization,
            oracle.sign_pattern
        ),
    )
}

fn random_point(lo: &[f64], up: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    lo.iter()
        .zip(up)
        .map(|(&l, &u)| {
            let a = if l.is_finite() { l } else { -2.0 };
            let b = if u.is_finite() { u } else { a.max(-2.0) + 4.0 };
            rng.random_range(a..=b.max(a))
        })
        .collect()
}

fn derivative_and_generator_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut points = 0;
    for inst in corpus() {
        let p = &inst.problem;
        let mut xs = vec![inst.x0.clone()];
        if let Some(o) = &inst.oracle {
            xs.push(o.x.clone());
        }
        for _ in 0..3 {
            xs.push(random_point(
                p.bounds().lower(),
                p.bounds().upper(),
                &mut rng,
            ));
        }
        for x in &xs {
            worst = worst.max(
                check_derivatives(p, x, default_fd_step(x))
                    .expect("finite")
                    .max_error(),
            );
            points += 1;
        }
    }
    for seed in [0, 1] {
        let data = scca_generate(SCCA_N, SCCA_N, SCCA_N, seed).expect("generator");
        let p = scca_problem(&data, 1e-2).expect("problem");
        let init = scca_init(&data, None).x0;
        let rand_pt: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-0.5..0.5)).collect();
        for x in [init, rand_pt] {
            worst = worst.max(
                check_derivatives(&p, &x, default_fd_step(&x))
                    .expect("finite")
                    .max_error(),
            );
            points += 1;
        }
    }
    let variances: Vec<f64> = SCCA_SEEDS
        .iter()
        .map(|&s| noise_variance(&scca_generate(SCCA_N, SCCA_N, SCCA_N, s).expect("generator")))
        .collect();
    let moments_ok = variances.iter().all(|v| (v - 0.01).abs() <= 0.2 * 0.01);
    outcome(
        worst <= 1e-6 && moments_ok,
        format!("max relative derivative error {worst:.2e} over {points} points, noise variances {variances:.5?}"),
    )
}

fn determinism() -> Outcome {
    let cfg = SolverConfig::default();
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for inst in corpus() {
        let a = solve_instance(&inst, &cfg).ledger_csv();
        let b = solve_instance(&inst, &cfg).ledger_csv();
        compared += 1;
        if a != b {
            mismatched.push(inst.name.to_string());
        }
    }
    let cfg = SolverConfig::scca_default();
    let a = scca_run(SCCA_N, 1e-2, 3, &cfg).report.ledger_csv();
    let b = scca_run(SCCA_N, 1e-2, 3, &cfg).report.ledger_csv();
    compared += 1;
    if a != b {
        mismatched.push("SCCA-200".to_string());
    }
    outcome(
        mismatched.is_empty(),
        format!("{compared} ledger pairs compared, mismatched: {mismatched:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scca reproduction", scca_reproduction),
        ("lambda-monotone sparsity", lambda_monotone_sparsity),
        ("corpus optimality", corpus_optimality),
        ("per-iteration invariants", invariant_suite),
        ("qp kernel oracle equivalence", qp_oracle_equivalence),
        ("active-set identification", active_set_identification),
        (
            "derivative and generator checks",
            derivative_and_generator_checks,
        ),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "criterion {}: {} {name} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail.trim_end()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
