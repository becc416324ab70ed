//! Tangential step.
//!
//! Solves
//!
//! ```text
//!     min  gᵀu + ‖u‖²/(2α) + vᵀu/α + r(x + v + u)   s.t.  Ju = 0,  x + v + u ∈ Ω
//! ```
//!
//! and recovers `y`, the bound multiplier `z` and `g_r ∈ ∂r(x + v + u)` with
//! `g + (u + v)/α + g_r + Jᵀy + z = 0`.
//!
//! Two solvers are provided. The split form writes each regularized
//! component as `p − q` with `p, q ≥ 0` and hands the resulting QP to
//! [`crate::qp`]. The dual form maximizes the concave dual in `y` by a
//! regularized semismooth Newton iteration with exact line search; each primal component
//! is then a clamped soft-threshold, so the dual needs only `m × m` solves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{box_complementarity, project_box};
use crate::linalg::{dot, norm2, norm_inf, Cholesky, Mat};
use crate::problem::{BoxSet, L1Regularizer};
use crate::qp::{solve_qp, QpObjective, QpProblem, QpStatus};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum TangentialError {
    #[error("split QP failed with status {0:?}")]
    Qp(QpStatus),
    #[error("dual Newton iteration did not converge (residual {0:e})")]
    DualNewton(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentialSolver {
    /// Split QP up to `split_max_dim` QP variables, dual Newton above.
    #[default]
    Auto,
    SplitQp,
    DualNewton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentialMethod {
    SplitQp,
    DualNewton,
}

/// Data of one tangential subproblem.
#[derive(Clone, Copy, Debug)]
pub struct TangentialInput<'a, T: Scalar> {
    pub x: &'a [T],
    pub v: &'a [T],
    pub g: &'a [T],
    pub jac: &'a Mat<T>,
    pub alpha: T,
    pub reg: &'a L1Regularizer<T>,
    pub bounds: &'a BoxSet<T>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct TangentialResult<T: Scalar> {
    pub u: Vec<T>,
    /// `x + v + u`, with exact zeros and exact bound values where active.
    pub point: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub g_r: Vec<T>,
    pub qp_iterations: usize,
    pub kkt_residual: T,
    pub method: TangentialMethod,
    /// Split QP primal `(u, p, q)`, reusable as a warm start.
    #[serde(skip)]
    pub split_primal: Option<Vec<T>>,
    /// Number of regularized components where `p·q > 0` had to be removed.
    pub split_adjustments: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct TangentialKkt<T: Scalar> {
    /// Distance of `−(g + (u+v)/α + Jᵀy + z)` to `∂r(x + v + u)`.
    pub stationarity: T,
    pub eq_residual: T,
    pub box_residual: T,
    pub complementarity: T,
    pub dual_sign: T,
    pub subgradient_margin: T,
    pub overall: T,
}

/// Column layout of the split QP.
#[derive(Clone, Debug)]
pub struct SplitLayout {
    pub n: usize,
    /// Regularized components, in order; split pair `k` sits at columns
    /// `n + k` (p) and `n + nreg + k` (q).
    pub regularized: Vec<usize>,
}

impl SplitLayout {
    pub fn dim(&self) -> usize {
        self.n + 2 * self.regularized.len()
    }
}

fn base_point<T: Scalar>(inp: &TangentialInput<'_, T>) -> Vec<T> {
    let b: Vec<T> = inp.x.iter().zip(inp.v).map(|(&a, &c)| a + c).collect();
    project_box(&b, inp.bounds)
}

/// QP over `(u, p, q)` with `J u = 0`, `u_i − p_k + q_k = −(x + v)_i` for each
/// regularized `i`, `x + v + u ∈ Ω` and `p, q ≥ 0`.
pub fn build_tangential_qp<T: Scalar>(inp: &TangentialInput<'_, T>) -> (QpProblem<T>, SplitLayout) {
    let n = inp.x.len();
    let m = inp.jac.rows();
    let b = base_point(inp);
    let regularized = inp.reg.regularized_indices();
    let nreg = regularized.len();
    let d = n + 2 * nreg;
    let inv_a = T::one() / inp.alpha;
    let mut h = Mat::zeros(d, d);
    let mut lin = vec![T::zero(); d];
    for i in 0..n {
        h[(i, i)] = inv_a;
        lin[i] = inp.g[i] + inp.v[i] * inv_a;
    }
    let w = inp.reg.weights();
    for (k, &i) in regularized.iter().enumerate() {
        lin[n + k] = w[i];
        lin[n + nreg + k] = w[i];
    }
    let mut a = Mat::zeros(m + nreg, d);
    let mut rhs = vec![T::zero(); m + nreg];
    for r in 0..m {
        a.row_mut(r)[..n].copy_from_slice(inp.jac.row(r));
    }
    for (k, &i) in regularized.iter().enumerate() {
        a[(m + k, i)] = T::one();
        a[(m + k, n + k)] = -T::one();
        a[(m + k, n + nreg + k)] = T::one();
        rhs[m + k] = -b[i];
    }
    let mut lo = vec![T::zero(); d];
    let mut up = vec![T::infinity(); d];
    for i in 0..n {
        lo[i] = (inp.bounds.lower()[i] - b[i]).min(T::zero());
        up[i] = (inp.bounds.upper()[i] - b[i]).max(T::zero());
    }
    let qp = QpProblem::new(
        QpObjective::Dense {
            hessian: h,
            linear: lin,
        },
        a,
        rhs,
        BoxSet::new(lo, up).expect("shifted box contains the origin"),
    )
    .expect("tangential QP dimensions");
    (qp, SplitLayout { n, regularized })
}

/// Solves the tangential subproblem.
///
/// `warm_y` seeds the dual Newton iteration; `warm_split` seeds the split QP.
/// Under [`TangentialSolver::Auto`] a failure of one solver is retried with
/// the other when the split QP is of moderate size.
pub fn solve_tangential<T: Scalar>(
    inp: &TangentialInput<'_, T>,
    solver: TangentialSolver,
    split_max_dim: usize,
    qp_tol: T,
    warm_y: Option<&[T]>,
    warm_split: Option<&[T]>,
) -> Result<TangentialResult<T>, TangentialError> {
    let nreg = inp.reg.regularized_indices().len();
    let d = inp.x.len() + 2 * nreg;
    let use_split = match solver {
        TangentialSolver::SplitQp => true,
        TangentialSolver::DualNewton => false,
        TangentialSolver::Auto => d <= split_max_dim,
    };
    let mut res = match (use_split, solver) {
        (true, TangentialSolver::Auto) => {
            solve_split(inp, qp_tol, warm_split).or_else(|_| solve_dual(inp, warm_y))?
        }
        (true, _) => solve_split(inp, qp_tol, warm_split)?,
        (false, TangentialSolver::Auto) => match solve_dual(inp, warm_y) {
            Ok(r) => r,
            Err(e) if d <= 4 * split_max_dim => {
                log::debug!("dual Newton failed ({e}); retrying with the split QP");
                solve_split(inp, qp_tol, warm_split)?
            }
            Err(e) => return Err(e),
        },
        (false, _) => solve_dual(inp, warm_y)?,
    };
    res.kkt_residual = verify_tangential_kkt(inp, &res).overall;
    Ok(res)
}

fn solve_split<T: Scalar>(
    inp: &TangentialInput<'_, T>,
    qp_tol: T,
    warm: Option<&[T]>,
) -> Result<TangentialResult<T>, TangentialError> {
    let (qp, layout) = build_tangential_qp(inp);
    let warm = warm.filter(|w| w.len() == layout.dim());
    let sol = solve_qp(&qp, qp_tol, None, warm);
    if sol.status != QpStatus::Solved {
        return Err(TangentialError::Qp(sol.status));
    }
    let n = layout.n;
    let nreg = layout.regularized.len();
    let b = base_point(inp);
    let mut primal = sol.primal;
    let mut adjustments = 0;
    for k in 0..nreg {
        let (p, q) = (primal[n + k], primal[n + nreg + k]);
        if p > T::zero() && q > T::zero() {
            let s = p.min(q);
            primal[n + k] = p - s;
            primal[n + nreg + k] = q - s;
            adjustments += 1;
        }
    }
    let mut point: Vec<T> = (0..n).map(|i| b[i] + primal[i]).collect();
    for (k, &i) in layout.regularized.iter().enumerate() {
        point[i] = primal[n + k] - primal[n + nreg + k];
    }
    // variables the QP holds at a shifted bound land exactly on the bound
    for i in 0..n {
        if primal[i] == qp.bounds.lower()[i] && sol.bound_duals[i] != T::zero() {
            point[i] = inp.bounds.lower()[i];
        }
        if primal[i] == qp.bounds.upper()[i] && sol.bound_duals[i] != T::zero() {
            point[i] = inp.bounds.upper()[i];
        }
    }
    let point = snap_to_bounds(project_box(&point, inp.bounds), inp.bounds);
    let y = sol.eq_duals[..inp.jac.rows()].to_vec();
    Ok(finish(
        inp,
        &b,
        point,
        y,
        sol.iterations,
        TangentialMethod::SplitQp,
        Some(primal),
        adjustments,
    ))
}

fn snap_to_bounds<T: Scalar>(mut t: Vec<T>, bounds: &BoxSet<T>) -> Vec<T> {
    let four_eps = T::lit(4.0) * T::epsilon();
    for (i, ti) in t.iter_mut().enumerate() {
        let (l, u) = (bounds.lower()[i], bounds.upper()[i]);
        if l.is_finite() && (*ti - l).abs() <= four_eps * (T::one() + l.abs()) {
            *ti = l;
        } else if u.is_finite() && (u - *ti).abs() <= four_eps * (T::one() + u.abs()) {
            *ti = u;
        }
    }
    t
}

/// Soft-threshold then clamp: the proximal map of `κ|·| + ι_[l,u]`.
#[inline]
fn prox_component<T: Scalar>(a: T, kappa: T, l: T, u: T) -> T {
    let s = if a > kappa {
        a - kappa
    } else if a < -kappa {
        a + kappa
    } else {
        T::zero()
    };
    s.max(l).min(u)
}

struct DualModel<'a, T: Scalar> {
    /// `x − αg` shifted consistently with the projected base point.
    anchor: Vec<T>,
    kappa: Vec<T>,
    b: Vec<T>,
    jac: &'a Mat<T>,
    alpha: T,
    bounds: &'a BoxSet<T>,
}

impl<T: Scalar> DualModel<'_, T> {
    fn args(&self, y: &[T]) -> Vec<T> {
        let jty = self.jac.tr_mul_vec(y);
        self.anchor
            .iter()
            .zip(&jty)
            .map(|(&a, &v)| a - self.alpha * v)
            .collect()
    }

    fn primal_from_args(&self, args: &[T]) -> Vec<T> {
        args.iter()
            .enumerate()
            .map(|(i, &a)| {
                prox_component(
                    a,
                    self.kappa[i],
                    self.bounds.lower()[i],
                    self.bounds.upper()[i],
                )
            })
            .collect()
    }

    fn primal(&self, y: &[T]) -> Vec<T> {
        self.primal_from_args(&self.args(y))
    }

    /// `∇θ(y) = J(t(y) − b)`.
    fn dual_gradient(&self, t: &[T]) -> Vec<T> {
        let u: Vec<T> = t.iter().zip(&self.b).map(|(&a, &c)| a - c).collect();
        self.jac.mul_vec(&u)
    }

    /// Components where `t` moves with `y`.
    fn smooth_set(&self, args: &[T], t: &[T]) -> Vec<usize> {
        (0..t.len())
            .filter(|&i| {
                args[i].abs() > self.kappa[i]
                    && t[i] > self.bounds.lower()[i]
                    && t[i] < self.bounds.upper()[i]
            })
            .collect()
    }
}

fn solve_dual<T: Scalar>(
    inp: &TangentialInput<'_, T>,
    warm_y: Option<&[T]>,
) -> Result<TangentialResult<T>, TangentialError> {
    let n = inp.x.len();
    let m = inp.jac.rows();
    let b = base_point(inp);
    let anchor: Vec<T> = (0..n)
        .map(|i| b[i] - inp.v[i] - inp.alpha * inp.g[i])
        .collect();
    let kappa: Vec<T> = inp.reg.weights().iter().map(|&w| inp.alpha * w).collect();
    let model = DualModel {
        anchor,
        kappa,
        b: b.clone(),
        jac: inp.jac,
        alpha: inp.alpha,
        bounds: inp.bounds,
    };
    let mut y = match warm_y {
        Some(w) if w.len() == m => w.to_vec(),
        _ => vec![T::zero(); m],
    };
    let jmax = inp.jac.max_abs();
    let mut iterations = 0;
    let mut t = model.primal(&y);
    if m > 0 {
        let mut grad = model.dual_gradient(&t);
        // absolute floor plus the rounding error of forming J(t − b)
        let tol = |y: &[T], t: &[T]| {
            let floor =
                T::lit(1e-14) * (T::one() + jmax * (T::one() + norm_inf(&b).max(norm_inf(t))));
            let args = model.args(y);
            let y_ulp = norm_inf(y);
            let rounding = (0..m)
                .map(|r| {
                    let row = inp.jac.row(r);
                    (0..n).fold(T::zero(), |acc, i| {
                        let a = row[i].abs();
                        acc + a * (t[i].abs() + b[i].abs() + args[i].abs() + inp.alpha * a * y_ulp)
                    })
                })
                .fold(T::zero(), T::max);
            floor.max(T::lit(64.0) * T::epsilon() * rounding)
        };
        let mut y_older: Option<Vec<T>> = None;
        while norm_inf(&grad) > tol(&y, &t) {
            iterations += 1;
            if iterations > 500 {
                return Err(TangentialError::DualNewton(norm_inf(&grad).as_f64()));
            }
            let args = model.args(&y);
            let smooth = model.smooth_set(&args, &t);
            // (αJ_D J_Dᵀ + μI) d = G with μ proportional to ‖G‖
            let mut hess = inp.jac.outer_gram_cols(&smooth);
            let mu = inp.alpha * jmax * norm_inf(&grad);
            for r in 0..m {
                for c in 0..m {
                    hess[(r, c)] *= inp.alpha;
                }
                hess[(r, r)] += mu;
            }
            let dir = match Cholesky::factor(&hess) {
                Some(ch) => ch.solve(&grad),
                None => grad.clone(),
            };
            let step = exact_line_search(&model, &args, &dir);
            let prev = norm_inf(&grad);
            let y_prev = y.clone();
            for (yi, di) in y.iter_mut().zip(&dir) {
                *yi += step * *di;
            }
            if y == y_prev || y_older.as_ref() == Some(&y) {
                // no representable progress: accept only a near-roundoff residual
                if prev <= T::lit(1e4) * tol(&y, &t) {
                    break;
                }
                return Err(TangentialError::DualNewton(prev.as_f64()));
            }
            y_older = Some(y_prev);
            t = model.primal(&y);
            grad = model.dual_gradient(&t);
        }
    }
    let t = snap_to_bounds(t, inp.bounds);
    Ok(finish(
        inp,
        &b,
        t,
        y,
        iterations,
        TangentialMethod::DualNewton,
        None,
        0,
    ))
}

/// Maximizes `θ(y + sΔ)` over `s ≥ 0`. The derivative is piecewise linear and
/// nonincreasing in `s`, so the root is found by bisection over its kinks
/// followed by linear interpolation.
fn exact_line_search<T: Scalar>(model: &DualModel<'_, T>, args: &[T], dir: &[T]) -> T {
    let w = model.jac.tr_mul_vec(dir);
    let slope_rate: Vec<T> = w.iter().map(|&wi| model.alpha * wi).collect();
    let n = args.len();
    // φ'(s) = Σ w_i (t_i(s) − b_i), with t_i(s) = prox(args_i − s·rate_i)
    let dphi = |s: T| -> T {
        let mut acc = T::zero();
        for i in 0..n {
            if w[i] == T::zero() {
                continue;
            }
            let a = args[i] - s * slope_rate[i];
            let ti = prox_component(
                a,
                model.kappa[i],
                model.bounds.lower()[i],
                model.bounds.upper()[i],
            );
            acc += w[i] * (ti - model.b[i]);
        }
        acc
    };
    let d0 = dphi(T::zero());
    if !(d0 > T::zero()) {
        return T::zero();
    }
    let mut kinks: Vec<T> = Vec::new();
    for i in 0..n {
        let r = slope_rate[i];
        if r == T::zero() {
            continue;
        }
        let (l, u, k) = (
            model.bounds.lower()[i],
            model.bounds.upper()[i],
            model.kappa[i],
        );
        for target in [k, -k, l + k, l - k, u + k, u - k] {
            if target.is_finite() {
                let s = (args[i] - target) / r;
                if s > T::zero() && s.is_finite() {
                    kinks.push(s);
                }
            }
        }
    }
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kinks.dedup();
    // first kink where φ' ≤ 0
    let (mut lo, mut hi) = (0usize, kinks.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if dphi(kinks[mid]) > T::zero() {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let s_left = if lo == 0 { T::zero() } else { kinks[lo - 1] };
    let d_left = if lo == 0 { d0 } else { dphi(s_left) };
    let s_right = if lo < kinks.len() {
        kinks[lo]
    } else {
        // linear beyond the last kink
        s_left + T::one()
    };
    let d_right = dphi(s_right);
    if d_right >= d_left {
        // flat derivative: the dual is unbounded along dir or already optimal
        return if d_right > T::zero() { s_right } else { s_left };
    }
    let s = s_left + d_left * (s_right - s_left) / (d_left - d_right);
    if lo < kinks.len() {
        s.min(s_right)
    } else {
        s
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    inp: &TangentialInput<'_, T>,
    b: &[T],
    point: Vec<T>,
    y: Vec<T>,
    iterations: usize,
    method: TangentialMethod,
    split_primal: Option<Vec<T>>,
    split_adjustments: usize,
) -> TangentialResult<T> {
    let u: Vec<T> = point.iter().zip(b).map(|(&a, &c)| a - c).collect();
    let (z, g_r) = split_residual(inp, &point, &y);
    TangentialResult {
        u,
        point,
        y,
        z,
        g_r,
        qp_iterations: iterations,
        kkt_residual: T::zero(),
        method,
        split_primal,
        split_adjustments,
    }
}

/// `ρ = −(g + (t − x)/α + Jᵀy)`, split into `g_r ∈ ∂r(t)` and the bound
/// multiplier `z`. Off the bounds `z = 0`; on a bound the subgradient takes
/// as much of `ρ` as `∂r(t)` allows.
fn split_residual<T: Scalar>(inp: &TangentialInput<'_, T>, t: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let rho = stationarity_residual(inp, t, y);
    let n = t.len();
    let w = inp.reg.weights();
    let mut z = vec![T::zero(); n];
    let mut g_r = vec![T::zero(); n];
    for i in 0..n {
        let at_bound = t[i] == inp.bounds.lower()[i] || t[i] == inp.bounds.upper()[i];
        if !at_bound {
            g_r[i] = rho[i];
            continue;
        }
        g_r[i] = if t[i] == T::zero() {
            rho[i].max(-w[i]).min(w[i])
        } else {
            w[i] * t[i].signum()
        };
        z[i] = rho[i] - g_r[i];
    }
    (z, g_r)
}

fn stationarity_residual<T: Scalar>(inp: &TangentialInput<'_, T>, t: &[T], y: &[T]) -> Vec<T> {
    let jty = inp.jac.tr_mul_vec(y);
    (0..t.len())
        .map(|i| -(inp.g[i] + (t[i] - inp.x[i]) / inp.alpha + jty[i]))
        .collect()
}

/// Optimality residuals of a tangential solution.
pub fn verify_tangential_kkt<T: Scalar>(
    inp: &TangentialInput<'_, T>,
    res: &TangentialResult<T>,
) -> TangentialKkt<T> {
    let t = &res.point;
    let mut rho = stationarity_residual(inp, t, &res.y);
    rho.iter_mut().zip(&res.z).for_each(|(a, &b)| *a -= b);
    let stationarity = inp.reg.subdifferential_distance(t, &rho);
    let eq_residual = norm2(&inp.jac.mul_vec(&res.u));
    let box_residual = inp.bounds.violation(t);
    let (comp, sign) = box_complementarity(t, &res.z, inp.bounds);
    let subgradient_margin = inp.reg.subgradient_margin(t, &res.g_r, T::zero());
    let consistency = norm2(
        &rho.iter()
            .zip(&res.g_r)
            .map(|(&a, &b)| a - b)
            .collect::<Vec<_>>(),
    );
    let parts = TangentialKkt {
        stationarity: stationarity.max(consistency),
        eq_residual,
        box_residual,
        complementarity: norm2(&comp),
        dual_sign: norm_inf(&sign),
        subgradient_margin,
        overall: T::zero(),
    };
    let overall = parts
        .stationarity
        .max(parts.eq_residual)
        .max(parts.box_residual)
        .max(parts.complementarity)
        .max(parts.dual_sign)
        .max(parts.subgradient_margin);
    TangentialKkt { overall, ..parts }
}

/// Value of the tangential objective at `u`.
pub fn tangential_objective<T: Scalar>(inp: &TangentialInput<'_, T>, u: &[T]) -> T {
    let b = base_point(inp);
    let t: Vec<T> = b.iter().zip(u).map(|(&a, &c)| a + c).collect();
    dot(inp.g, u)
        + dot(u, u) / (T::lit(2.0) * inp.alpha)
        + dot(inp.v, u) / inp.alpha
        + inp.reg.value(&t)
}
