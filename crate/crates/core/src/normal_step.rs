//! Normal (feasibility) step.
//!
//! Works on the linearized feasibility model `m(v) = ½‖c + Jv‖²`. The Cauchy
//! point comes from a projected backtracking search along `−Jᵀc`. A sharper
//! candidate solves `m` over an ∞-norm trust region inside the shifted box,
//! and the better of the two is kept.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{compute_delta, project_box};
use crate::linalg::{dot, norm2, Mat};
use crate::problem::BoxSet;
use crate::qp::{solve_qp, QpObjective, QpProblem, QpStatus};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum NormalStepError {
    #[error("cauchy search exceeded {backtracks} backtracks (last beta {beta:e})")]
    BacktrackCap { backtracks: usize, beta: f64 },
    #[error("trust-region subproblem failed with status {0:?}")]
    Qp(QpStatus),
}

/// Parameters of the normal step, in `f64`.
#[derive(Clone, Debug)]
pub struct NormalParams {
    pub gamma: f64,
    pub eta_m: f64,
    pub kappa_v: f64,
    pub kappa_v_inf: f64,
    pub max_backtracks: usize,
    pub tol_infeas_c: f64,
    /// Solve the ∞-norm trust-region model in addition to the Cauchy search.
    pub use_tr_inf: bool,
    pub qp_tol: f64,
}

impl Default for NormalParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            eta_m: 1e-4,
            kappa_v: 1e3,
            kappa_v_inf: 1e-2,
            max_backtracks: 60,
            tol_infeas_c: 1e-6,
            use_tr_inf: true,
            qp_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct NormalStepResult<T: Scalar> {
    pub v: Vec<T>,
    pub v_cauchy: Vec<T>,
    pub v_inf: Option<Vec<T>>,
    pub beta: T,
    pub backtracks: usize,
    pub delta: T,
    pub m0: T,
    pub m_v: T,
    pub m_cauchy: T,
    /// `‖c‖ − ‖c + Jv‖` for the chosen step.
    pub lin_feas_gain: T,
    /// `‖c‖ − ‖c + Jv_c‖` for the Cauchy point.
    pub cauchy_gain: T,
    /// `δ ≈ 0` while `‖c‖` is above the feasibility tolerance.
    pub stationary_infeasible: bool,
    pub qp_iterations: usize,
}

/// `m(v) = ½‖c + Jv‖²`.
pub fn model_value<T: Scalar>(c: &[T], jac: &Mat<T>, v: &[T]) -> T {
    let r = lin_residual(c, jac, v);
    T::lit(0.5) * dot(&r, &r)
}

fn lin_residual<T: Scalar>(c: &[T], jac: &Mat<T>, v: &[T]) -> Vec<T> {
    let mut r = jac.mul_vec(v);
    r.iter_mut().zip(c).for_each(|(a, &b)| *a += b);
    r
}

/// `v(β) = Proj_Ω(x − βJᵀc) − x`.
pub fn projected_path<T: Scalar>(x: &[T], jtc: &[T], beta: T, bounds: &BoxSet<T>) -> Vec<T> {
    let trial: Vec<T> = x.iter().zip(jtc).map(|(&xi, &gi)| xi - beta * gi).collect();
    let p = project_box(&trial, bounds);
    p.iter().zip(x).map(|(&a, &b)| a - b).collect()
}

/// Backtracking search `β = γ^i`. Returns `(β, v_c, i)` for the first `i`
/// with `‖v(β)‖ ≤ κ_v α δ` and `m(v(β)) ≤ m(0) + η_m (Jᵀc)ᵀv(β)`.
#[allow(clippy::too_many_arguments)]
pub fn cauchy_search<T: Scalar>(
    x: &[T],
    c: &[T],
    jac: &Mat<T>,
    alpha: T,
    delta: T,
    bounds: &BoxSet<T>,
    params: &NormalParams,
) -> Result<(T, Vec<T>, usize), NormalStepError> {
    let jtc = jac.tr_mul_vec(c);
    let m0 = T::lit(0.5) * dot(c, c);
    let radius = T::lit(params.kappa_v) * alpha * delta;
    let gamma = T::lit(params.gamma);
    let eta = T::lit(params.eta_m);
    let mut beta = T::one();
    for i in 0..=params.max_backtracks {
        let v = projected_path(x, &jtc, beta, bounds);
        if norm2(&v) <= radius && model_value(c, jac, &v) <= m0 + eta * dot(&jtc, &v) {
            return Ok((beta, v, i));
        }
        beta *= gamma;
    }
    Err(NormalStepError::BacktrackCap {
        backtracks: params.max_backtracks,
        beta: (beta / gamma).as_f64(),
    })
}

/// Minimizes `m(v)` over `‖v‖∞ ≤ κ_v^∞ α δ` and `x + v ∈ Ω`.
#[allow(clippy::too_many_arguments)]
pub fn solve_tr_inf<T: Scalar>(
    x: &[T],
    c: &[T],
    jac: &Mat<T>,
    alpha: T,
    delta: T,
    bounds: &BoxSet<T>,
    kappa_v_inf: f64,
    qp_tol: f64,
) -> Result<(Vec<T>, usize), NormalStepError> {
    let n = x.len();
    let radius = T::lit(kappa_v_inf) * alpha * delta;
    let lower: Vec<T> = (0..n)
        .map(|i| (bounds.lower()[i] - x[i]).max(-radius).min(T::zero()))
        .collect();
    let upper: Vec<T> = (0..n)
        .map(|i| (bounds.upper()[i] - x[i]).min(radius).max(T::zero()))
        .collect();
    let qp = QpProblem::new(
        QpObjective::LeastSquares {
            matrix: jac.clone(),
            target: c.iter().map(|&v| -v).collect(),
        },
        Mat::zeros(0, n),
        Vec::new(),
        BoxSet::new(lower, upper).expect("shifted box contains the origin"),
    )
    .expect("normal-step QP dimensions");
    let sol = solve_qp(&qp, T::lit(qp_tol), None, None);
    match sol.status {
        QpStatus::Solved => Ok((sol.primal, sol.iterations)),
        s => Err(NormalStepError::Qp(s)),
    }
}

/// Normal step with the selection rule: keep `v_c` when `m(v_c) < m(v_∞)`,
/// otherwise `v_∞`. When `δ ≤ 1e-12·(1 + ‖Jᵀc‖)` the step is zero.
#[allow(clippy::too_many_arguments)]
pub fn compute_normal_step<T: Scalar>(
    x: &[T],
    c: &[T],
    jac: &Mat<T>,
    alpha: T,
    bounds: &BoxSet<T>,
    params: &NormalParams,
    tol_active: Option<T>,
) -> Result<NormalStepResult<T>, NormalStepError> {
    let n = x.len();
    let (delta, _) = compute_delta(x, c, jac, bounds, tol_active);
    let c_norm = norm2(c);
    let m0 = T::lit(0.5) * dot(c, c);
    let jtc_norm = norm2(&jac.tr_mul_vec(c));
    let tol_delta = T::lit(1e-12) * (T::one() + jtc_norm);
    if delta <= tol_delta {
        return Ok(NormalStepResult {
            v: vec![T::zero(); n],
            v_cauchy: vec![T::zero(); n],
            v_inf: None,
            beta: T::one(),
            backtracks: 0,
            delta,
            m0,
            m_v: m0,
            m_cauchy: m0,
            lin_feas_gain: T::zero(),
            cauchy_gain: T::zero(),
            stationary_infeasible: c_norm > T::lit(params.tol_infeas_c),
            qp_iterations: 0,
        });
    }
    let (beta, v_c, backtracks) = cauchy_search(x, c, jac, alpha, delta, bounds, params)?;
    let m_c = model_value(c, jac, &v_c);
    let cauchy_gain = c_norm - norm2(&lin_residual(c, jac, &v_c));
    let (v_inf, qp_iterations) = if params.use_tr_inf {
        let (v, it) = solve_tr_inf(
            x,
            c,
            jac,
            alpha,
            delta,
            bounds,
            params.kappa_v_inf,
            params.qp_tol,
        )?;
        (Some(v), it)
    } else {
        (None, 0)
    };
    let (v, m_v) = match &v_inf {
        Some(vi) => {
            let mi = model_value(c, jac, vi);
            if m_c < mi {
                (v_c.clone(), m_c)
            } else {
                (vi.clone(), mi)
            }
        }
        None => (v_c.clone(), m_c),
    };
    let lin_feas_gain = c_norm - norm2(&lin_residual(c, jac, &v));
    Ok(NormalStepResult {
        v,
        v_cauchy: v_c,
        v_inf,
        beta,
        backtracks,
        delta,
        m0,
        m_v,
        m_cauchy: m_c,
        lin_feas_gain,
        cauchy_gain,
        stationary_infeasible: false,
        qp_iterations,
    })
}

/// `κ₁ = γη_m(1 − η_m)`.
pub fn kappa_1(params: &NormalParams) -> f64 {
    params.gamma * params.eta_m * (1.0 - params.eta_m)
}

/// Right-hand side of the Cauchy decrease inequality
/// `m(0) − m(v_c) ≥ κ₁ (‖v_c‖/β) min{(‖v_c‖/β)/(1 + ‖JᵀJ‖), κ_v α δ}`.
pub fn cauchy_decrease_bound<T: Scalar>(
    step: &NormalStepResult<T>,
    alpha: T,
    jtj_norm: T,
    params: &NormalParams,
) -> T {
    let ratio = norm2(&step.v_cauchy) / step.beta;
    let k1 = T::lit(kappa_1(params));
    k1 * ratio * (ratio / (T::one() + jtj_norm)).min(T::lit(params.kappa_v) * alpha * step.delta)
}

/// Right-hand side of the linearized gain bound
/// `‖c‖ − ‖c + Jv_c‖ ≥ (κ₁/‖c‖)‖v(1)‖² min{1/(1 + ‖JᵀJ‖), κ_v α}`.
pub fn gain_bound<T: Scalar>(
    v_unit: &[T],
    c_norm: T,
    alpha: T,
    jtj_norm: T,
    params: &NormalParams,
) -> T {
    if c_norm == T::zero() {
        return T::zero();
    }
    let k1 = T::lit(kappa_1(params));
    let nv = norm2(v_unit);
    k1 / c_norm * nv * nv * (T::one() / (T::one() + jtj_norm)).min(T::lit(params.kappa_v) * alpha)
}
