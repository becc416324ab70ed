//! Outer iteration: normal step, tangential step, merit update, acceptance.
//!
//! Each iteration `k` evaluates the model at `x_k`, builds `s_k = v_k + u_k`,
//! tests the KKT residual `χ_k`, updates `τ`, and accepts or rejects the
//! trial point `x_k + s_k` by the sufficient-decrease test on `Φ_τ`. One
//! [`IterationRecord`] is emitted per iteration.

mod config;
mod identification;
mod kkt;
mod record;

use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{load_config, parse_config, write_config, ConfigError, SolverConfig};
pub use identification::{identification_trackers, stabilization_index};
pub use kkt::{kkt_parts_at, kkt_residual, KktParts};
pub use record::{write_ledger_csv, IterationRecord, LEDGER_COLUMNS};

use crate::geometry::{active_set, project_box, sign_pattern, ActiveSet};
use crate::linalg::{gram_spectral_norm, norm2, Mat};
use crate::merit::{
    compute_ak, sufficient_decrease, tau_trial, update_alpha, update_tau, MeritParts, ALPHA_FLOOR,
    TAU_FLOOR,
};
use crate::normal_step::{cauchy_decrease_bound, compute_normal_step, gain_bound, projected_path};
use crate::problem::{apply_scaling, ProblemInstance, ScaleInfo};
use crate::tangential::{
    solve_tangential, verify_tangential_kkt, TangentialInput, TangentialMethod,
};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SolveStatus {
    KktPoint,
    InfeasibleStationary,
    MaxIter,
    TimeLimit,
    Stalled,
    MeritCollapse,
}

impl SolveStatus {
    /// Process exit code: 0 for a KKT point, 2 for a certified infeasible
    /// stationary point, 1 otherwise.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::KktPoint => 0,
            Self::InfeasibleStationary => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("starting point has {got} entries, problem has {expected} variables")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// `m(0) − m(v_c)` against the Cauchy decrease bound.
    CauchyDecrease,
    /// `‖c‖ − ‖c + Jv_c‖` against the linearized gain bound.
    GainBound,
    /// `‖s‖ ≥ ‖min{x, −z}‖` on orthant instances.
    OrthantStep,
    TauMonotone,
    /// `τ_k A_k − (1 − σ_c)·gain ≤ 0` after a decrease of `τ`.
    TauTrial,
    /// `τ(f + r − f_lb) + ‖c‖` nonincreasing.
    ShiftedMerit,
    TangentialKkt,
    SubgradientMembership,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantViolation {
    pub k: usize,
    pub kind: InvariantKind,
    /// Amount by which the inequality fails, beyond its slack.
    pub excess: f64,
}

/// Slack for the Cauchy decrease and gain bounds.
pub const BOUND_SLACK: f64 = 1e-10;
/// Limit for tangential KKT residuals and subgradient membership.
pub const SUBPROBLEM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct SolveReport<T: Scalar> {
    pub problem: String,
    pub status: SolveStatus,
    pub message: Option<String>,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub g_r: Vec<T>,
    pub kkt: KktParts<T>,
    pub chi_bar: T,
    /// `f + r` and `‖c‖` in the units of the original problem.
    pub objective: T,
    pub c_norm: T,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub final_alpha: T,
    pub final_tau: T,
    pub final_active_set: ActiveSet,
    pub final_sign_pattern: String,
    pub active_set_stabilization: Option<usize>,
    pub sign_stabilization: Option<usize>,
    pub invariant_violations: Vec<InvariantViolation>,
    pub scale: Option<ScaleInfo<T>>,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_secs: f64,
    #[serde(skip)]
    pub records: Vec<IterationRecord>,
}

impl<T: Scalar> SolveReport<T> {
    pub fn ledger_csv(&self) -> String {
        let mut buf = Vec::new();
        write_ledger_csv(&self.records, &mut buf).expect("in-memory CSV");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Cached evaluations at one point.
struct Eval<T: Scalar> {
    f: T,
    r: T,
    g: Vec<T>,
    c: Vec<T>,
    c_norm: T,
    jac: Mat<T>,
}

impl<T: Scalar> Eval<T> {
    fn full(p: &ProblemInstance<T>, x: &[T]) -> Result<Self, String> {
        let f = p.objective(x);
        let c = p.constraints(x);
        Self::complete(p, x, f, c)
    }

    fn complete(p: &ProblemInstance<T>, x: &[T], f: T, c: Vec<T>) -> Result<Self, String> {
        let g = p.gradient(x);
        let jac = p.jacobian(x);
        let r = p.reg_value(x);
        let c_norm = norm2(&c);
        if !f.is_finite()
            || !c_norm.is_finite()
            || g.iter().any(|v| !v.is_finite())
            || !jac.is_finite()
        {
            return Err("non-finite function or derivative value".into());
        }
        Ok(Self {
            f,
            r,
            g,
            c,
            c_norm,
            jac,
        })
    }

    fn parts(&self) -> MeritParts<T> {
        MeritParts {
            f: self.f,
            r: self.r,
            c_norm: self.c_norm,
        }
    }
}

pub fn point_hash<T: Scalar>(x: &[T]) -> String {
    let mut h = Sha256::new();
    for v in x {
        h.update(v.as_f64().to_bits().to_le_bytes());
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Multipliers<T> {
    y: Vec<T>,
    z: Vec<T>,
    g_r: Vec<T>,
}

/// Runs the method from `x0` (replaced by `cfg.x0` when set).
pub fn solve<T: Scalar>(
    problem: &ProblemInstance<T>,
    x0: &[T],
    cfg: &SolverConfig,
) -> Result<SolveReport<T>, SolveError> {
    cfg.validate()?;
    let n = problem.n();
    let m = problem.m();
    let x0: Vec<T> = match &cfg.x0 {
        Some(v) => v.iter().map(|&a| T::lit(a)).collect(),
        None => x0.to_vec(),
    };
    if x0.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    let start = Instant::now();
    let mut x = project_box(&x0, problem.bounds());
    if x != x0 {
        log::warn!("{}: starting point projected onto the box", problem.name);
    }
    let (scaled, scale) = if cfg.scaling {
        let (p, s) = apply_scaling(problem, &x);
        (p, Some(s))
    } else {
        (problem.clone(), None)
    };
    let p = &scaled;
    let bounds = p.bounds();
    let reg = p.regularizer();
    let regularized = reg.regularized_indices();
    let orthant = bounds.is_orthant();
    let params = cfg.normal_params();
    let lit = T::lit;

    let mut alpha = lit(cfg.alpha0);
    let mut tau = lit(cfg.tau_init);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut violations: Vec<InvariantViolation> = Vec::new();
    let mut mult = Multipliers {
        y: vec![T::zero(); m],
        z: vec![T::zero(); n],
        g_r: vec![T::zero(); n],
    };
    let mut last_kkt = KktParts {
        stationarity: T::infinity(),
        feasibility: T::infinity(),
        complementarity: T::infinity(),
        chi: T::infinity(),
    };
    let mut last_chi_bar = T::infinity();
    let mut status = None;
    let mut message = None;
    let mut isp_count = 0usize;
    let mut isp_alpha = T::infinity();
    let mut warm_split: Option<(ActiveSet, Vec<T>)> = None;
    let mut warm_y: Option<Vec<T>> = None;

    let mut eval = match Eval::full(p, &x) {
        Ok(e) => e,
        Err(msg) => {
            status = Some(SolveStatus::Stalled);
            message = Some(msg);
            Eval {
                f: T::nan(),
                r: T::nan(),
                g: vec![T::nan(); n],
                c: vec![T::nan(); m],
                c_norm: T::nan(),
                jac: Mat::zeros(m, n),
            }
        }
    };

    let mut k = 0usize;
    while status.is_none() {
        if k >= cfg.max_iter {
            status = Some(SolveStatus::MaxIter);
            break;
        }
        if start.elapsed().as_secs_f64() > cfg.time_limit_secs {
            status = Some(SolveStatus::TimeLimit);
            break;
        }
        let active = active_set(&x, bounds, None);
        let signs = sign_pattern(&x, &regularized);

        let normal = match compute_normal_step(&x, &eval.c, &eval.jac, alpha, bounds, &params, None)
        {
            Ok(v) => v,
            Err(e) => {
                status = Some(SolveStatus::Stalled);
                message = Some(format!("normal step: {e}"));
                break;
            }
        };
        if normal.stationary_infeasible {
            isp_count = if isp_count == 0 || alpha <= isp_alpha {
                isp_count + 1
            } else {
                1
            };
            isp_alpha = alpha;
        } else {
            isp_count = 0;
        }

        let inp = TangentialInput {
            x: &x,
            v: &normal.v,
            g: &eval.g,
            jac: &eval.jac,
            alpha,
            reg,
            bounds,
        };
        let split_seed = warm_split
            .as_ref()
            .filter(|(a, _)| *a == active)
            .map(|(_, w)| w.as_slice());
        let tang = match solve_tangential(
            &inp,
            cfg.tangential_solver,
            cfg.split_max_dim,
            lit(cfg.tangential_qp_tol),
            warm_y.as_deref(),
            split_seed,
        ) {
            Ok(t) => t,
            Err(e) => {
                status = Some(SolveStatus::Stalled);
                message = Some(format!("tangential step: {e}"));
                break;
            }
        };
        warm_y = Some(tang.y.clone());
        if let Some(sp) = &tang.split_primal {
            warm_split = Some((active.clone(), sp.clone()));
        }
        let s: Vec<T> = tang.point.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let s_norm = norm2(&s);

        let kkt = kkt_parts_at(
            &eval.g, &eval.c, &eval.jac, bounds, &x, &tang.y, &tang.z, &tang.g_r,
        );
        let jtc = eval.jac.tr_mul_vec(&eval.c);
        let v1 = projected_path(&x, &jtc, T::one(), bounds);
        let chi_bar = kkt.stationarity.max(norm2(&v1)).max(kkt.complementarity);
        mult = Multipliers {
            y: tang.y.clone(),
            z: tang.z.clone(),
            g_r: tang.g_r.clone(),
        };
        last_kkt = kkt;
        last_chi_bar = chi_bar;

        if cfg.check_invariants {
            let tk = verify_tangential_kkt(&inp, &tang);
            if tk.overall > lit(SUBPROBLEM_TOL) {
                violations.push(InvariantViolation {
                    k,
                    kind: InvariantKind::TangentialKkt,
                    excess: (tk.overall - lit(SUBPROBLEM_TOL)).as_f64(),
                });
            }
            let margin = reg.subgradient_margin(&tang.point, &tang.g_r, T::zero());
            if margin > lit(SUBPROBLEM_TOL) {
                violations.push(InvariantViolation {
                    k,
                    kind: InvariantKind::SubgradientMembership,
                    excess: (margin - lit(SUBPROBLEM_TOL)).as_f64(),
                });
            }
            if normal.delta > T::zero() && !normal.stationary_infeasible && normal.m0 > T::zero() {
                let jtj = gram_spectral_norm(&eval.jac);
                let need = cauchy_decrease_bound(&normal, alpha, jtj, &params) - lit(BOUND_SLACK);
                let have = normal.m0 - normal.m_cauchy;
                if have < need {
                    violations.push(InvariantViolation {
                        k,
                        kind: InvariantKind::CauchyDecrease,
                        excess: (need - have).as_f64(),
                    });
                }
                let need = gain_bound(&v1, eval.c_norm, alpha, jtj, &params) - lit(BOUND_SLACK);
                if normal.cauchy_gain < need {
                    violations.push(InvariantViolation {
                        k,
                        kind: InvariantKind::GainBound,
                        excess: (need - normal.cauchy_gain).as_f64(),
                    });
                }
            }
            if orthant {
                let comp: Vec<T> = x.iter().zip(&tang.z).map(|(&a, &b)| a.min(-b)).collect();
                let need = norm2(&comp);
                if s_norm < need - lit(1e-12) {
                    violations.push(InvariantViolation {
                        k,
                        kind: InvariantKind::OrthantStep,
                        excess: (need - s_norm).as_f64(),
                    });
                }
            }
        }

        let phi_before = eval.parts().value(tau);
        let mut rec = IterationRecord {
            k,
            accepted: false,
            x_hash: point_hash(&x),
            f: eval.f.as_f64(),
            r: eval.r.as_f64(),
            c_norm: eval.c_norm.as_f64(),
            delta: normal.delta.as_f64(),
            beta: normal.beta.as_f64(),
            backtracks: normal.backtracks,
            v_norm: norm2(&normal.v).as_f64(),
            u_norm: norm2(&tang.u).as_f64(),
            s_norm: s_norm.as_f64(),
            alpha: alpha.as_f64(),
            tau: tau.as_f64(),
            tau_trial: f64::NAN,
            a_k: f64::NAN,
            lin_gain: f64::NAN,
            phi_before: phi_before.as_f64(),
            phi_after: phi_before.as_f64(),
            chi: kkt.chi.as_f64(),
            chi_bar: chi_bar.as_f64(),
            stationarity: kkt.stationarity.as_f64(),
            complementarity: kkt.complementarity.as_f64(),
            normal_qp_iters: normal.qp_iterations,
            tangential_iters: tang.qp_iterations,
            tangential_kkt: tang.kkt_residual.as_f64(),
            tangential_method: match tang.method {
                TangentialMethod::SplitQp => "split_qp".into(),
                TangentialMethod::DualNewton => "dual_newton".into(),
            },
            active_set: active.encode(),
            sign_pattern: signs,
            wall_time: start.elapsed().as_secs_f64(),
        };

        if kkt.feasibility <= lit(cfg.tol_c)
            && kkt.stationarity <= lit(cfg.tol_stat)
            && kkt.complementarity <= lit(cfg.tol_comp)
        {
            records.push(rec);
            status = Some(SolveStatus::KktPoint);
            break;
        }
        if isp_count >= cfg.isp_patience {
            records.push(rec);
            status = Some(SolveStatus::InfeasibleStationary);
            break;
        }

        let r_trial = reg.value(&tang.point);
        let a_k = compute_ak(&eval.g, &s, alpha, r_trial, eval.r);
        let lin = eval
            .c
            .iter()
            .zip(eval.jac.mul_vec(&s))
            .map(|(&a, b)| a + b)
            .collect::<Vec<_>>();
        let lin_norm = norm2(&lin);
        let gain = eval.c_norm - lin_norm;
        let trial = tau_trial(a_k, eval.c_norm, lin_norm, lit(cfg.sigma_c));
        let tau_prev = tau;
        tau = update_tau(tau, trial, lit(cfg.eps_tau));
        rec.tau = tau.as_f64();
        rec.tau_trial = trial.as_f64();
        rec.a_k = a_k.as_f64();
        rec.lin_gain = gain.as_f64();
        if cfg.check_invariants {
            if tau > tau_prev {
                violations.push(InvariantViolation {
                    k,
                    kind: InvariantKind::TauMonotone,
                    excess: (tau - tau_prev).as_f64(),
                });
            }
            if tau < tau_prev {
                let excess = tau * a_k - (T::one() - lit(cfg.sigma_c)) * gain;
                if excess > lit(BOUND_SLACK) {
                    violations.push(InvariantViolation {
                        k,
                        kind: InvariantKind::TauTrial,
                        excess: excess.as_f64(),
                    });
                }
            }
        }
        if tau < lit(TAU_FLOOR) {
            records.push(rec);
            status = Some(SolveStatus::MeritCollapse);
            break;
        }

        let f_trial = p.objective(&tang.point);
        let c_trial = p.constraints(&tang.point);
        let trial_parts = MeritParts {
            f: f_trial,
            r: r_trial,
            c_norm: norm2(&c_trial),
        };
        let phi_old = eval.parts().value(tau);
        let phi_new = trial_parts.value(tau);
        let accepted = trial_parts.is_finite()
            && sufficient_decrease(
                phi_new,
                phi_old,
                tau,
                alpha,
                &s,
                eval.c_norm,
                lin_norm,
                lit(cfg.eta_phi),
                lit(cfg.sigma_c),
            );
        rec.phi_before = phi_old.as_f64();
        rec.phi_after = phi_new.as_f64();
        rec.accepted = accepted;
        records.push(rec);
        alpha = update_alpha(
            alpha,
            accepted,
            cfg.alpha_rule,
            lit(cfg.xi),
            lit(cfg.alpha_cap),
        );
        if accepted {
            x = tang.point;
            match Eval::complete(p, &x, f_trial, c_trial) {
                Ok(e) => eval = e,
                Err(msg) => {
                    status = Some(SolveStatus::Stalled);
                    message = Some(msg);
                }
            }
        }
        if status.is_none() && alpha < lit(ALPHA_FLOOR) {
            status = Some(SolveStatus::Stalled);
            message = Some("proximal parameter fell below its floor".into());
        }
        k += 1;
    }

    if cfg.check_invariants {
        violations.extend(check_shifted_merit(&records));
    }
    let status = status.unwrap_or(SolveStatus::MaxIter);
    let (active_stab, sign_stab) =
        identification_trackers(&records, status == SolveStatus::KktPoint);
    let objective = problem.objective(&x) + problem.reg_value(&x);
    let c_norm = norm2(&problem.constraints(&x));
    let accepted_steps = records.iter().filter(|r| r.accepted).count();
    Ok(SolveReport {
        problem: problem.name.clone(),
        status,
        message,
        final_active_set: active_set(&x, bounds, None),
        final_sign_pattern: sign_pattern(&x, &regularized),
        x,
        y: mult.y,
        z: mult.z,
        g_r: mult.g_r,
        kkt: last_kkt,
        chi_bar: last_chi_bar,
        objective,
        c_norm,
        iterations: records.len(),
        accepted_steps,
        final_alpha: alpha,
        final_tau: tau,
        active_set_stabilization: active_stab,
        sign_stabilization: sign_stab,
        invariant_violations: violations,
        scale,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        records,
    })
}

/// `τ_k(f_k + r_k − f_lb) + ‖c_k‖` must not increase, with `f_lb` one below
/// the smallest `f + r` seen in the run.
pub fn check_shifted_merit(records: &[IterationRecord]) -> Vec<InvariantViolation> {
    let f_lb = records
        .iter()
        .map(|r| r.f + r.r)
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let val = |r: &IterationRecord| r.tau * (r.f + r.r - f_lb) + r.c_norm;
    let mut out = Vec::new();
    for w in records.windows(2) {
        let (a, b) = (val(&w[0]), val(&w[1]));
        let slack = 1e-12 * (1.0 + a.abs());
        if b > a + slack {
            out.push(InvariantViolation {
                k: w[1].k,
                kind: InvariantKind::ShiftedMerit,
                excess: b - a,
            });
        }
        if w[1].tau > w[0].tau {
            out.push(InvariantViolation {
                k: w[1].k,
                kind: InvariantKind::TauMonotone,
                excess: w[1].tau - w[0].tau,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BoxSet, FnFunctions, L1Regularizer, QuadraticFunctions};
    use std::sync::Arc;

    fn orthant_lp_l1() -> ProblemInstance<f64> {
        // min x1 + 2x2 + 0.1‖x‖₁ s.t. x1 + x2 = 1, x ≥ 0; KKT at (1, 0)
        let q = QuadraticFunctions::new(
            Mat::zeros(2, 2),
            vec![1.0, 2.0],
            0.0,
            Mat::from_rows(&[vec![1.0, 1.0]]),
            vec![1.0],
            vec![],
        )
        .unwrap();
        ProblemInstance::new(
            "lp",
            Arc::new(q),
            L1Regularizer::uniform(2, 0.1).unwrap(),
            BoxSet::orthant(2),
        )
        .unwrap()
    }

    #[test]
    fn exact_kkt_start_terminates_immediately() {
        let p = orthant_lp_l1();
        let r = solve(&p, &[1.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::KktPoint);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.records[0].s_norm, 0.0);
        assert_eq!(r.x, vec![1.0, 0.0]);
        assert!((r.y[0] + 1.1).abs() < 1e-10);
        assert_eq!(r.active_set_stabilization, Some(0));
        assert_eq!(r.sign_stabilization, Some(0));
        assert!(r.invariant_violations.is_empty());
    }

    #[test]
    fn infeasible_constraint_gives_isp() {
        let f = FnFunctions::new(
            2,
            1,
            |x: &[f64]| 0.5 * (x[1] - 1.0).powi(2),
            |x: &[f64]| vec![0.0, x[1] - 1.0],
            |x: &[f64]| vec![x[0] * x[0] + 1.0],
            |x: &[f64]| Mat::from_rows(&[vec![2.0 * x[0], 0.0]]),
        );
        let p = ProblemInstance::new(
            "infeas",
            Arc::new(f),
            L1Regularizer::zero(2),
            BoxSet::free(2),
        )
        .unwrap();
        let r = solve(&p, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::InfeasibleStationary);
        assert_eq!(r.status.exit_code(), 2);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn rejected_steps_halve_alpha() {
        let p = orthant_lp_l1();
        let r = solve(&p, &[0.2, 0.8], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::KktPoint);
        for w in r.records.windows(2) {
            if !w[0].accepted {
                assert_eq!(w[1].alpha, 0.5 * w[0].alpha);
            }
        }
        assert!(
            r.invariant_violations.is_empty(),
            "{:?}",
            r.invariant_violations
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6 && r.x[1].abs() < 1e-6);
    }

    #[test]
    fn wrong_length_start_rejected() {
        let p = orthant_lp_l1();
        assert!(matches!(
            solve(&p, &[1.0], &SolverConfig::default()),
            Err(SolveError::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn iteration_limit_reported() {
        let p = orthant_lp_l1();
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        let r = solve(&p, &[0.5, 0.5], &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIter);
        assert_eq!(r.status.exit_code(), 1);
    }

    #[test]
    fn shifted_merit_check_flags_increase() {
        let base = IterationRecord {
            k: 0,
            accepted: true,
            x_hash: String::new(),
            f: 1.0,
            r: 0.0,
            c_norm: 0.0,
            delta: 0.0,
            beta: 1.0,
            backtracks: 0,
            v_norm: 0.0,
            u_norm: 0.0,
            s_norm: 0.0,
            alpha: 1.0,
            tau: 1.0,
            tau_trial: f64::INFINITY,
            a_k: 0.0,
            lin_gain: 0.0,
            phi_before: 0.0,
            phi_after: 0.0,
            chi: 0.0,
            chi_bar: 0.0,
            stationarity: 0.0,
            complementarity: 0.0,
            normal_qp_iters: 0,
            tangential_iters: 0,
            tangential_kkt: 0.0,
            tangential_method: String::new(),
            active_set: String::new(),
            sign_pattern: String::new(),
            wall_time: 0.0,
        };
        let up = IterationRecord {
            k: 1,
            f: 2.0,
            ..base.clone()
        };
        let v = check_shifted_merit(&[base.clone(), up]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, InvariantKind::ShiftedMerit);
        let down = IterationRecord {
            k: 1,
            f: 0.5,
            tau: 0.5,
            ..base.clone()
        };
        assert!(check_shifted_merit(&[base, down]).is_empty());
    }
}
