//! Convex QP over equality and box constraints.
//!
//! ```text
//!     min  ½xᵀHx + qᵀx   s.t.  A x = b,  l ≤ x ≤ u
//! ```
//!
//! Solved by a primal active-set method on the bounds. Each working set leads
//! to an equality-constrained subproblem over the free variables, solved
//! through a symmetric eigendecomposition of its KKT matrix so that singular
//! and rank-deficient systems are handled by the pseudo-inverse. A
//! least-squares objective `½‖Ax − b‖²` is kept in factored form and only
//! ever touches `A_F A_Fᵀ`, which keeps large low-rank problems cheap.
//!
//! Multipliers follow `Hx + q + Aᵀy + z = 0` with `z_i ≤ 0` at a lower bound
//! and `z_i ≥ 0` at an upper bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{box_complementarity, project_box};
use crate::linalg::{dot, norm2, norm_inf, Mat, SymEigen};
use crate::problem::BoxSet;
use crate::Scalar;

const PINV_TOL: f64 = 1e-11;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("hessian is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error("strong convexity {claimed:e} violated: observed curvature {observed:e}")]
    NotStronglyConvex { claimed: f64, observed: f64 },
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
}

#[derive(Clone, Debug)]
pub enum QpObjective<T: Scalar> {
    /// `½xᵀHx + qᵀx`
    Dense { hessian: Mat<T>, linear: Vec<T> },
    /// `½‖Mx − t‖²`
    LeastSquares { matrix: Mat<T>, target: Vec<T> },
}

impl<T: Scalar> QpObjective<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense { linear, .. } => linear.len(),
            Self::LeastSquares { matrix, .. } => matrix.cols(),
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            Self::Dense { hessian, linear } => {
                T::lit(0.5) * dot(x, &hessian.mul_vec(x)) + dot(linear, x)
            }
            Self::LeastSquares { matrix, target } => {
                let r = residual(matrix, target, x);
                T::lit(0.5) * dot(&r, &r)
            }
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Dense { hessian, linear } => {
                let mut g = hessian.mul_vec(x);
                g.iter_mut().zip(linear).for_each(|(a, &b)| *a += b);
                g
            }
            Self::LeastSquares { matrix, target } => {
                matrix.tr_mul_vec(&residual(matrix, target, x))
            }
        }
    }

    pub fn hess_mul(&self, p: &[T]) -> Vec<T> {
        match self {
            Self::Dense { hessian, .. } => hessian.mul_vec(p),
            Self::LeastSquares { matrix, .. } => matrix.tr_mul_vec(&matrix.mul_vec(p)),
        }
    }

    /// `(H, q)` with the constant term dropped.
    pub fn to_dense(&self) -> (Mat<T>, Vec<T>) {
        match self {
            Self::Dense { hessian, linear } => (hessian.clone(), linear.clone()),
            Self::LeastSquares { matrix, target } => {
                let mut q = matrix.tr_mul_vec(target);
                q.iter_mut().for_each(|v| *v = -*v);
                (matrix.gram(), q)
            }
        }
    }
}

fn residual<T: Scalar>(m: &Mat<T>, t: &[T], x: &[T]) -> Vec<T> {
    let mut r = m.mul_vec(x);
    r.iter_mut().zip(t).for_each(|(a, &b)| *a -= b);
    r
}

#[derive(Clone, Debug)]
pub struct QpProblem<T: Scalar> {
    pub objective: QpObjective<T>,
    pub eq_matrix: Mat<T>,
    pub eq_rhs: Vec<T>,
    pub bounds: BoxSet<T>,
    /// Claimed lower bound on the curvature, when known.
    pub strong_convexity: Option<T>,
}

impl<T: Scalar> QpProblem<T> {
    pub fn new(
        objective: QpObjective<T>,
        eq_matrix: Mat<T>,
        eq_rhs: Vec<T>,
        bounds: BoxSet<T>,
    ) -> Result<Self, QpError> {
        let d = objective.dim();
        let dim = |what, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(QpError::Dimension {
                    what,
                    expected,
                    got,
                })
            }
        };
        match &objective {
            QpObjective::Dense { hessian, linear } => {
                dim("hessian rows", d, hessian.rows())?;
                dim("hessian cols", d, hessian.cols())?;
                if !hessian.is_finite() || linear.iter().any(|v| !v.is_finite()) {
                    return Err(QpError::NonFinite("objective"));
                }
                let defect = hessian.symmetry_defect();
                if defect > T::lit(1e-12) * (T::one() + hessian.max_abs()) {
                    return Err(QpError::NotSymmetric(defect.as_f64()));
                }
            }
            QpObjective::LeastSquares { matrix, target } => {
                dim("least-squares target", matrix.rows(), target.len())?;
                if !matrix.is_finite() || target.iter().any(|v| !v.is_finite()) {
                    return Err(QpError::NonFinite("objective"));
                }
            }
        }
        let eq_matrix = if eq_rhs.is_empty() && eq_matrix.rows() == 0 {
            Mat::zeros(0, d)
        } else {
            eq_matrix
        };
        dim("equality rows", eq_rhs.len(), eq_matrix.rows())?;
        dim("equality cols", d, eq_matrix.cols())?;
        dim("box", d, bounds.dim())?;
        if !eq_matrix.is_finite() || eq_rhs.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("equality constraints"));
        }
        Ok(Self {
            objective,
            eq_matrix,
            eq_rhs,
            bounds,
            strong_convexity: None,
        })
    }

    /// Records a curvature claim after probing it on random directions.
    pub fn with_strong_convexity(mut self, mu: T) -> Result<Self, QpError> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..16.min(4 * d.max(1)) {
            let x: Vec<T> = (0..d)
                .map(|_| T::lit(rng.random_range(-1.0..1.0)))
                .collect();
            let nx = dot(&x, &x);
            if nx == T::zero() {
                continue;
            }
            let curv = dot(&x, &self.objective.hess_mul(&x)) / nx;
            if curv < mu * (T::one() - T::lit(1e-10)) {
                return Err(QpError::NotStronglyConvex {
                    claimed: mu.as_f64(),
                    observed: curv.as_f64(),
                });
            }
        }
        self.strong_convexity = Some(mu);
        Ok(self)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    #[inline]
    pub fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Solved,
    MaxIter,
    InfeasibleEq,
    Unbounded,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct QpSolution<T: Scalar> {
    pub primal: Vec<T>,
    pub eq_duals: Vec<T>,
    pub bound_duals: Vec<T>,
    pub kkt_residual: T,
    pub iterations: usize,
    pub status: QpStatus,
    /// Objective after the starting point and after every primal move.
    pub objective_trace: Vec<T>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct KktBreakdown<T: Scalar> {
    pub stationarity: T,
    pub eq_feasibility: T,
    pub box_feasibility: T,
    pub complementarity: T,
    pub dual_sign: T,
    pub overall: T,
}

/// Residuals of the KKT system at `(primal, eq_duals, bound_duals)`.
pub fn verify_kkt<T: Scalar>(qp: &QpProblem<T>, sol: &QpSolution<T>) -> KktBreakdown<T> {
    kkt_parts(qp, &sol.primal, &sol.eq_duals, &sol.bound_duals)
}

pub fn kkt_parts<T: Scalar>(qp: &QpProblem<T>, x: &[T], y: &[T], z: &[T]) -> KktBreakdown<T> {
    let mut st = qp.objective.gradient(x);
    let aty = qp.eq_matrix.tr_mul_vec(y);
    for i in 0..st.len() {
        st[i] += aty[i] + z[i];
    }
    let eq = residual(&qp.eq_matrix, &qp.eq_rhs, x);
    let (comp, sign) = box_complementarity(x, z, &qp.bounds);
    let parts = KktBreakdown {
        stationarity: norm2(&st),
        eq_feasibility: norm2(&eq),
        box_feasibility: qp.bounds.violation(x),
        complementarity: norm2(&comp),
        dual_sign: norm_inf(&sign),
        overall: T::zero(),
    };
    let overall = parts
        .stationarity
        .max(parts.eq_feasibility)
        .max(parts.box_feasibility)
        .max(parts.complementarity)
        .max(parts.dual_sign);
    KktBreakdown { overall, ..parts }
}

/// Default iteration cap `50·d`.
pub fn default_max_iter(d: usize) -> usize {
    50 * d.max(1)
}

/// Solves `qp`. `tol` is the absolute tolerance on multiplier signs and the
/// feasibility test; `max_iter = None` selects `50·d`.
pub fn solve_qp<T: Scalar>(
    qp: &QpProblem<T>,
    tol: T,
    max_iter: Option<usize>,
    warm_start: Option<&[T]>,
) -> QpSolution<T> {
    let d = qp.dim();
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(d));
    let dense;
    let qp_eff = if matches!(qp.objective, QpObjective::LeastSquares { .. }) && qp.num_eq() > 0 {
        let (h, q) = qp.objective.to_dense();
        dense = QpProblem {
            objective: QpObjective::Dense {
                hessian: h,
                linear: q,
            },
            ..qp.clone()
        };
        &dense
    } else {
        qp
    };

    let start = match warm_start {
        Some(w) if w.len() == d => project_box(w, &qp.bounds),
        _ => project_box(&vec![T::zero(); d], &qp.bounds),
    };
    let (x0, phase1_iters) = match feasible_start(qp_eff, start, tol, max_iter) {
        Ok(v) => v,
        Err((x, iters)) => {
            let mut sol = finish(qp, x, &vec![Slot::Free; d], QpStatus::InfeasibleEq);
            sol.iterations = iters;
            return sol;
        }
    };
    let mut engine = Engine::new(qp_eff, x0, tol);
    let status = engine.run(max_iter.saturating_sub(phase1_iters));
    let mut sol = finish(qp, engine.x, &engine.slots, status);
    sol.iterations = engine.iterations + phase1_iters;
    sol.objective_trace = engine.trace;
    sol
}

fn finish<T: Scalar>(
    qp: &QpProblem<T>,
    x: Vec<T>,
    slots: &[Slot],
    status: QpStatus,
) -> QpSolution<T> {
    let g = qp.objective.gradient(&x);
    let (y, z) = multipliers(qp, &g, slots);
    let kkt = kkt_parts(qp, &x, &y, &z).overall;
    QpSolution {
        primal: x,
        eq_duals: y,
        bound_duals: z,
        kkt_residual: kkt,
        iterations: 0,
        status,
        objective_trace: Vec::new(),
    }
}

/// Phase 1: minimize `½‖Ax − b‖²` over the box from the projected start.
fn feasible_start<T: Scalar>(
    qp: &QpProblem<T>,
    start: Vec<T>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, usize), (Vec<T>, usize)> {
    if qp.num_eq() == 0 {
        return Ok((start, 0));
    }
    let feas_tol = T::lit(1e3) * tol * (T::one() + norm_inf(&qp.eq_rhs));
    if norm_inf(&residual(&qp.eq_matrix, &qp.eq_rhs, &start)) <= feas_tol {
        return Ok((start, 0));
    }
    let phase1 = QpProblem {
        objective: QpObjective::LeastSquares {
            matrix: qp.eq_matrix.clone(),
            target: qp.eq_rhs.clone(),
        },
        eq_matrix: Mat::zeros(0, qp.dim()),
        eq_rhs: Vec::new(),
        bounds: qp.bounds.clone(),
        strong_convexity: None,
    };
    let mut engine = Engine::new(&phase1, start, tol);
    engine.run(max_iter);
    let iters = engine.iterations;
    let x = engine.x;
    if norm_inf(&residual(&qp.eq_matrix, &qp.eq_rhs, &x)) <= feas_tol {
        Ok((x, iters))
    } else {
        Err((x, iters))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Free,
    Lower,
    Upper,
}

enum EqpStep<T> {
    Newton(Vec<T>),
    Ray(Vec<T>),
}

struct Engine<'a, T: Scalar> {
    qp: &'a QpProblem<T>,
    x: Vec<T>,
    slots: Vec<Slot>,
    tol: T,
    iterations: usize,
    trace: Vec<T>,
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(qp: &'a QpProblem<T>, x: Vec<T>, tol: T) -> Self {
        let (l, u) = (qp.bounds.lower(), qp.bounds.upper());
        let mut x = x;
        let slots = (0..x.len())
            .map(|i| {
                if l[i] == u[i] {
                    x[i] = l[i];
                    Slot::Lower
                } else if x[i] == l[i] {
                    Slot::Lower
                } else if x[i] == u[i] {
                    Slot::Upper
                } else {
                    Slot::Free
                }
            })
            .collect();
        let trace = vec![qp.objective.value(&x)];
        let mut engine = Self {
            qp,
            x,
            slots,
            tol,
            iterations: 0,
            trace,
        };
        engine.restore_independence(&[]);
        engine
    }

    fn eq_rank(&self, cols: &[usize], cutoff: T) -> usize {
        if cols.is_empty() {
            return 0;
        }
        let gram = self.qp.eq_matrix.outer_gram_cols(cols);
        SymEigen::new(&gram)
            .values
            .iter()
            .filter(|v| v.abs() > cutoff)
            .count()
    }

    /// Frees variables sitting at a bound until the equality rows restricted
    /// to the free variables regain the rank they have over all movable
    /// variables, so the working set stays linearly independent and the
    /// multipliers are unique. Candidates in `prefer` are tried first.
    fn restore_independence(&mut self, prefer: &[usize]) {
        let a = &self.qp.eq_matrix;
        if a.rows() == 0 {
            return;
        }
        let (l, u) = (self.qp.bounds.lower(), self.qp.bounds.upper());
        let movable: Vec<usize> = (0..self.x.len()).filter(|&i| l[i] != u[i]).collect();
        let full = a.outer_gram_cols(&movable);
        let cutoff = T::lit(PINV_TOL)
            * SymEigen::new(&full)
                .max_abs_value()
                .max(T::min_positive_value());
        let target = self.eq_rank(&movable, cutoff);
        let mut free = self.free();
        let mut rank = self.eq_rank(&free, cutoff);
        if rank >= target {
            return;
        }
        let order = prefer.iter().copied().chain(movable.iter().copied());
        for i in order {
            if rank >= target {
                break;
            }
            if self.slots[i] == Slot::Free || l[i] == u[i] {
                continue;
            }
            free.push(i);
            let r = self.eq_rank(&free, cutoff);
            if r > rank {
                rank = r;
                self.slots[i] = Slot::Free;
            } else {
                free.pop();
            }
        }
    }

    fn free(&self) -> Vec<usize> {
        (0..self.x.len())
            .filter(|&i| self.slots[i] == Slot::Free)
            .collect()
    }

    fn run(&mut self, max_iter: usize) -> QpStatus {
        let (l, u) = (self.qp.bounds.lower(), self.qp.bounds.upper());
        let mut degenerate_run = 0usize;
        while self.iterations < max_iter {
            self.iterations += 1;
            let g = self.qp.objective.gradient(&self.x);
            let free = self.free();
            let step = eqp_step(self.qp, &self.x, &g, &free);
            let (p, is_ray) = match step {
                EqpStep::Newton(p) => (p, false),
                EqpStep::Ray(p) => (p, true),
            };
            let small = T::lit(1e2) * T::epsilon() * (T::one() + norm_inf(&self.x));
            if is_ray || norm_inf(&p) > small {
                let t_cap = if is_ray { T::infinity() } else { T::one() };
                let (t, blocking) = ratio_test(&self.x, &p, &free, l, u, t_cap);
                if blocking.is_empty() && is_ray {
                    return QpStatus::Unbounded;
                }
                for &i in &free {
                    self.x[i] += t * p[i];
                }
                for &(i, slot) in &blocking {
                    self.slots[i] = slot;
                    self.x[i] = if slot == Slot::Lower { l[i] } else { u[i] };
                }
                self.x = project_box(&self.x, &self.qp.bounds);
                self.trace.push(self.qp.objective.value(&self.x));
                if blocking.len() > 1 {
                    let idx: Vec<usize> = blocking.iter().map(|b| b.0).collect();
                    self.restore_independence(&idx);
                }
                if !blocking.is_empty() {
                    degenerate_run = if t == T::zero() {
                        degenerate_run + 1
                    } else {
                        0
                    };
                    continue;
                }
            }
            let g = self.qp.objective.gradient(&self.x);
            let (_, z) = multipliers(self.qp, &g, &self.slots);
            let dual_tol = self.tol * (T::one() + norm_inf(&g));
            let wrong = |i: usize| match self.slots[i] {
                Slot::Lower if l[i] != u[i] => z[i] > dual_tol,
                Slot::Upper => z[i] < -dual_tol,
                _ => false,
            };
            let candidates: Vec<usize> = (0..self.x.len()).filter(|&i| wrong(i)).collect();
            if candidates.is_empty() {
                return QpStatus::Solved;
            }
            let release = if degenerate_run >= 3 {
                candidates[0]
            } else {
                *candidates
                    .iter()
                    .max_by(|&&a, &&b| z[a].abs().partial_cmp(&z[b].abs()).unwrap())
                    .unwrap()
            };
            self.slots[release] = Slot::Free;
        }
        QpStatus::MaxIter
    }
}

/// Largest `t ≤ t_cap` keeping the free variables inside the box, and the
/// bounds that become active there. Near-ties are blocked together.
fn ratio_test<T: Scalar>(
    x: &[T],
    p: &[T],
    free: &[usize],
    l: &[T],
    u: &[T],
    t_cap: T,
) -> (T, Vec<(usize, Slot)>) {
    let noise = T::lit(1e3) * T::epsilon() * norm_inf(p);
    let mut hits: Vec<(T, usize, Slot)> = Vec::new();
    for &i in free {
        if p[i].abs() <= noise {
            continue;
        }
        if p[i] < T::zero() && l[i].is_finite() {
            hits.push((((l[i] - x[i]) / p[i]).max(T::zero()), i, Slot::Lower));
        } else if p[i] > T::zero() && u[i].is_finite() {
            hits.push((((u[i] - x[i]) / p[i]).max(T::zero()), i, Slot::Upper));
        }
    }
    let t_min = hits.iter().fold(T::infinity(), |a, h| a.min(h.0));
    if t_min >= t_cap {
        return (t_cap, Vec::new());
    }
    let tie = t_min + T::lit(1e-14) * T::one().max(t_min);
    let blocking = hits
        .into_iter()
        .filter(|h| h.0 <= tie)
        .map(|h| (h.1, h.2))
        .collect();
    (t_min, blocking)
}

/// Step to the minimizer of the objective over the free variables subject to
/// `A_F p = b − Ax`, or a zero-curvature descent ray when none exists.
fn eqp_step<T: Scalar>(qp: &QpProblem<T>, x: &[T], g: &[T], free: &[usize]) -> EqpStep<T> {
    let d = x.len();
    let nf = free.len();
    let mut step = vec![T::zero(); d];
    if nf == 0 {
        return EqpStep::Newton(step);
    }
    match &qp.objective {
        QpObjective::LeastSquares { matrix, target } => {
            let r = residual(matrix, target, x);
            let gram = matrix.outer_gram_cols(free);
            let mu = SymEigen::new(&gram).pseudo_solve(&r, T::lit(PINV_TOL)).x;
            for &j in free {
                let mut s = T::zero();
                for (k, &mk) in mu.iter().enumerate() {
                    s += matrix[(k, j)] * mk;
                }
                step[j] = -s;
            }
            EqpStep::Newton(step)
        }
        QpObjective::Dense { hessian, .. } => {
            let a = &qp.eq_matrix;
            let p = a.rows();
            let eq_res = residual(a, &qp.eq_rhs, x);
            if nf <= p
                && norm_inf(&eq_res)
                    <= T::lit(1e2) * T::epsilon() * (T::one() + norm_inf(&qp.eq_rhs))
            {
                // A vertex of the working set admits no feasible direction.
                let cols: Vec<Vec<T>> = free.iter().map(|&j| a.column(j)).collect();
                let gram = Mat::from_rows(
                    &cols
                        .iter()
                        .map(|ci| cols.iter().map(|cj| dot(ci, cj)).collect())
                        .collect::<Vec<_>>(),
                );
                let eig = SymEigen::new(&gram);
                let cutoff = T::lit(PINV_TOL) * eig.max_abs_value();
                if eig.values.iter().all(|v| v.abs() > cutoff) {
                    return EqpStep::Newton(step);
                }
            }
            let size = nf + p;
            let mut k = Mat::zeros(size, size);
            for (ia, &i) in free.iter().enumerate() {
                for (ja, &j) in free.iter().enumerate() {
                    k[(ia, ja)] = hessian[(i, j)];
                }
                for r in 0..p {
                    k[(nf + r, ia)] = a[(r, i)];
                    k[(ia, nf + r)] = a[(r, i)];
                }
            }
            let mut rhs = vec![T::zero(); size];
            for (ia, &i) in free.iter().enumerate() {
                rhs[ia] = -g[i];
            }
            for r in 0..p {
                rhs[nf + r] = -eq_res[r];
            }
            let eig = SymEigen::new(&k);
            let ps = eig.pseudo_solve(&rhs, T::lit(PINV_TOL));
            let mut ray = vec![T::zero(); nf];
            for &(col, beta) in &ps.null_coeffs {
                for (ia, rv) in ray.iter_mut().enumerate() {
                    *rv += beta * eig.vectors[(ia, col)];
                }
            }
            let ray_norm = norm2(&ray);
            let g_free: Vec<T> = free.iter().map(|&i| g[i]).collect();
            let slope = dot(&g_free, &ray);
            let ray_tol = T::lit(1e-9) * (T::one() + norm2(&g_free));
            if ray_norm > T::lit(1e-8) && slope < -ray_tol * ray_norm {
                for (ia, &i) in free.iter().enumerate() {
                    step[i] = ray[ia] / ray_norm;
                }
                return EqpStep::Ray(step);
            }
            for (ia, &i) in free.iter().enumerate() {
                step[i] = ps.x[ia];
            }
            EqpStep::Newton(step)
        }
    }
}

/// Equality multipliers by least squares on the free rows, bound multipliers
/// from stationarity on the working set.
fn multipliers<T: Scalar>(qp: &QpProblem<T>, g: &[T], slots: &[Slot]) -> (Vec<T>, Vec<T>) {
    let d = g.len();
    let a = &qp.eq_matrix;
    let p = a.rows();
    let free: Vec<usize> = (0..d).filter(|&i| slots[i] == Slot::Free).collect();
    let mut y = vec![T::zero(); p];
    if p > 0 && !free.is_empty() {
        let gram = a.outer_gram_cols(&free);
        let mut rhs = vec![T::zero(); p];
        for (r, rv) in rhs.iter_mut().enumerate() {
            for &i in &free {
                *rv -= a[(r, i)] * g[i];
            }
        }
        y = SymEigen::new(&gram).pseudo_solve(&rhs, T::lit(PINV_TOL)).x;
    }
    let aty = a.tr_mul_vec(&y);
    let z = (0..d)
        .map(|i| {
            if slots[i] == Slot::Free {
                T::zero()
            } else {
                -(g[i] + aty[i])
            }
        })
        .collect();
    (y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(h: Mat<f64>, q: Vec<f64>) -> QpObjective<f64> {
        QpObjective::Dense {
            hessian: h,
            linear: q,
        }
    }

    #[test]
    fn interior_minimum_has_zero_duals() {
        let n = 3;
        let qp = QpProblem::new(
            dense(Mat::identity(n), vec![0.0; n]),
            Mat::zeros(0, n),
            vec![],
            BoxSet::new(vec![-1.0; n], vec![1.0; n]).unwrap(),
        )
        .unwrap();
        let sol = solve_qp(&qp, 1e-10, None, None);
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(sol.primal.iter().all(|&v| v == 0.0));
        assert!(sol.bound_duals.iter().all(|&v| v == 0.0));
        assert!(sol.kkt_residual <= 1e-12);
    }

    #[test]
    fn projection_onto_simplex_face() {
        // min ½‖u − a‖², 1ᵀu = 0, u ≥ 0, a = (2, −1)
        let qp = QpProblem::new(
            dense(Mat::identity(2), vec![-2.0, 1.0]),
            Mat::from_rows(&[vec![1.0, 1.0]]),
            vec![0.0],
            BoxSet::orthant(2),
        )
        .unwrap();
        let sol = solve_qp(&qp, 1e-10, None, None);
        assert_eq!(sol.status, QpStatus::Solved);
        // only feasible point is the origin
        assert!(sol.primal.iter().all(|v| v.abs() < 1e-14));
        assert!(verify_kkt(&qp, &sol).overall <= 1e-10);
    }

    #[test]
    fn kkt_breakdown_examples() {
        // min ½(x − 2)², 0 ≤ x ≤ 1: x = 1, z = 1
        let qp = QpProblem::new(
            dense(Mat::identity(1), vec![-2.0]),
            Mat::zeros(0, 1),
            vec![],
            BoxSet::new(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        let mut sol = solve_qp(&qp, 1e-10, None, None);
        assert_eq!(sol.primal, vec![1.0]);
        assert_eq!(sol.bound_duals, vec![1.0]);
        assert_eq!(verify_kkt(&qp, &sol).overall, 0.0);
        // perturbation of the primal shows up in stationarity scaled by ‖H‖ = 1
        sol.primal[0] -= 1e-3;
        let k = verify_kkt(&qp, &sol);
        assert_relative_eq!(k.stationarity, 1e-3, max_relative = 1e-9);
    }

    #[test]
    fn flipped_dual_sign_is_reported() {
        // min x on x ≥ 0: x = 0, z = −1
        let qp = QpProblem::new(
            dense(Mat::zeros(1, 1), vec![1.0]),
            Mat::zeros(0, 1),
            vec![],
            BoxSet::orthant(1),
        )
        .unwrap();
        let mut sol = solve_qp(&qp, 1e-10, None, None);
        assert_eq!(sol.status, QpStatus::Solved);
        assert_eq!(sol.bound_duals, vec![-1.0]);
        sol.bound_duals[0] = 1.0;
        let k = verify_kkt(&qp, &sol);
        assert_eq!(k.dual_sign, 1.0);
    }

    #[test]
    fn linear_objective_follows_ray_to_bound() {
        // min −x1 + x2 on [0,3]×[−1,∞) with x1 − x2 = 1
        let qp = QpProblem::new(
            dense(Mat::zeros(2, 2), vec![-1.0, 1.0]),
            Mat::from_rows(&[vec![1.0, -1.0]]),
            vec![1.0],
            BoxSet::new(vec![0.0, -1.0], vec![3.0, f64::INFINITY]).unwrap(),
        )
        .unwrap();
        let sol = solve_qp(&qp, 1e-10, None, None);
        assert_eq!(sol.status, QpStatus::Solved);
        // objective −x1 + x2 = −1 on the whole feasible segment; any point is optimal
        assert_relative_eq!(qp.objective.value(&sol.primal), -1.0, epsilon = 1e-12);
        assert!(verify_kkt(&qp, &sol).overall <= 1e-10);
    }

    #[test]
    fn unbounded_ray_detected() {
        let qp = QpProblem::new(
            dense(Mat::zeros(1, 1), vec![-1.0]),
            Mat::zeros(0, 1),
            vec![],
            BoxSet::orthant(1),
        )
        .unwrap();
        assert_eq!(solve_qp(&qp, 1e-10, None, None).status, QpStatus::Unbounded);
    }

    #[test]
    fn inconsistent_equalities_flagged() {
        // x1 + x2 = 3 with x ∈ [0,1]²
        let qp = QpProblem::new(
            dense(Mat::identity(2), vec![0.0, 0.0]),
            Mat::from_rows(&[vec![1.0, 1.0]]),
            vec![3.0],
            BoxSet::new(vec![0.0; 2], vec![1.0; 2]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            solve_qp(&qp, 1e-10, None, None).status,
            QpStatus::InfeasibleEq
        );
    }

    #[test]
    fn least_squares_form_matches_dense_form() {
        let m = Mat::from_rows(&[vec![1.0, 2.0, 0.0, -1.0], vec![0.0, 1.0, 1.0, 3.0]]);
        let t = vec![5.0, -2.0];
        let b = BoxSet::new(vec![-0.5; 4], vec![0.5; 4]).unwrap();
        let ls = QpObjective::LeastSquares {
            matrix: m.clone(),
            target: t.clone(),
        };
        let (h, q) = ls.to_dense();
        let q1 = QpProblem::new(ls, Mat::zeros(0, 4), vec![], b.clone()).unwrap();
        let q2 = QpProblem::new(dense(h, q), Mat::zeros(0, 4), vec![], b).unwrap();
        let s1 = solve_qp(&q1, 1e-10, None, None);
        let s2 = solve_qp(&q2, 1e-10, None, None);
        assert_eq!(s1.status, QpStatus::Solved);
        assert_eq!(s2.status, QpStatus::Solved);
        let f1 = q1.objective.value(&s1.primal);
        let f2 = q1.objective.value(&s2.primal);
        assert_relative_eq!(f1, f2, epsilon = 1e-10);
        assert!(verify_kkt(&q1, &s1).overall <= 1e-9);
    }

    #[test]
    fn strong_convexity_claim_is_probed() {
        let qp = QpProblem::new(
            dense(Mat::from_diagonal(&[1.0, 0.0]), vec![0.0, 0.0]),
            Mat::zeros(0, 2),
            vec![],
            BoxSet::free(2),
        )
        .unwrap();
        assert!(qp.clone().with_strong_convexity(0.5).is_err());
        assert!(qp.with_strong_convexity(0.0).is_ok());
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let h = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(QpProblem::new(
            dense(h, vec![0.0; 2]),
            Mat::zeros(0, 2),
            vec![],
            BoxSet::free(2)
        )
        .is_err());
    }

    #[test]
    fn warm_start_reproduces_solution() {
        let q = QpProblem::new(
            dense(
                Mat::from_rows(&[
                    vec![2.0, 0.5, 0.0],
                    vec![0.5, 1.0, 0.1],
                    vec![0.0, 0.1, 3.0],
                ]),
                vec![-1.0, 2.0, -4.0],
            ),
            Mat::from_rows(&[vec![1.0, 1.0, 1.0]]),
            vec![1.0],
            BoxSet::new(
                vec![0.0, 0.0, f64::NEG_INFINITY],
                vec![1.0, f64::INFINITY, 0.8],
            )
            .unwrap(),
        )
        .unwrap();
        let cold = solve_qp(&q, 1e-10, None, None);
        let warm = solve_qp(&q, 1e-10, None, Some(&cold.primal));
        assert_eq!(cold.status, QpStatus::Solved);
        assert_eq!(warm.status, QpStatus::Solved);
        assert!(warm.kkt_residual <= cold.kkt_residual.max(1e-10));
        assert!(warm.iterations <= cold.iterations);
    }
}
