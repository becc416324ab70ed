//! Projections and tangent-cone operations on boxes.

use serde::{Deserialize, Serialize};

use crate::linalg::{norm2, Mat};
use crate::problem::BoxSet;
use crate::Scalar;

/// Indices at their lower and upper bounds. A fixed variable (`l = u`) is
/// reported in `at_lower` only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveSet {
    pub at_lower: Vec<usize>,
    pub at_upper: Vec<usize>,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.at_lower.is_empty() && self.at_upper.is_empty()
    }

    pub fn len(&self) -> usize {
        self.at_lower.len() + self.at_upper.len()
    }

    /// Compact text form `l:0;3|u:5` used in the iteration ledger.
    pub fn encode(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        format!("l:{}|u:{}", join(&self.at_lower), join(&self.at_upper))
    }
}

/// Default activity tolerance `1e-10·(1 + |bound|)`.
#[inline]
pub fn default_active_tol<T: Scalar>(bound: T) -> T {
    T::lit(1e-10) * (T::one() + bound.abs())
}

/// Activity tolerance for one bound; `tol_active = None` selects the default.
#[inline]
fn tol_for<T: Scalar>(bound: T, tol_active: Option<T>) -> T {
    tol_active.unwrap_or_else(|| default_active_tol(bound))
}

#[inline]
fn at_lower<T: Scalar>(x: T, l: T, tol_active: Option<T>) -> bool {
    l.is_finite() && x - l <= tol_for(l, tol_active)
}

#[inline]
fn at_upper<T: Scalar>(x: T, u: T, tol_active: Option<T>) -> bool {
    u.is_finite() && u - x <= tol_for(u, tol_active)
}

/// Componentwise clamp onto the box.
pub fn project_box<T: Scalar>(x: &[T], bounds: &BoxSet<T>) -> Vec<T> {
    x.iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|(&xi, (&l, &u))| xi.max(l).min(u))
        .collect()
}

/// Euclidean projection of `d` onto the tangent cone of the box at `x`.
pub fn project_tangent_cone<T: Scalar>(
    d: &[T],
    x: &[T],
    bounds: &BoxSet<T>,
    tol_active: Option<T>,
) -> Vec<T> {
    d.iter()
        .zip(x)
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|((&di, &xi), (&l, &u))| {
            let lo = at_lower(xi, l, tol_active);
            let hi = at_upper(xi, u, tol_active);
            match (lo, hi) {
                (true, true) => T::zero(),
                (true, false) => di.max(T::zero()),
                (false, true) => di.min(T::zero()),
                (false, false) => di,
            }
        })
        .collect()
}

/// Feasibility stationarity measure: `dir = Proj_T(−Jᵀc)`, `δ = ‖dir‖₂`.
pub fn compute_delta<T: Scalar>(
    x: &[T],
    c: &[T],
    jac: &Mat<T>,
    bounds: &BoxSet<T>,
    tol_active: Option<T>,
) -> (T, Vec<T>) {
    let mut neg_grad = jac.tr_mul_vec(c);
    neg_grad.iter_mut().for_each(|v| *v = -*v);
    let dir = project_tangent_cone(&neg_grad, x, bounds, tol_active);
    (norm2(&dir), dir)
}

pub fn active_set<T: Scalar>(x: &[T], bounds: &BoxSet<T>, tol_active: Option<T>) -> ActiveSet {
    let mut out = ActiveSet::default();
    for (i, (&xi, (&l, &u))) in x
        .iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .enumerate()
    {
        if at_lower(xi, l, tol_active) {
            out.at_lower.push(i);
        } else if at_upper(xi, u, tol_active) {
            out.at_upper.push(i);
        }
    }
    out
}

/// Per-component complementarity between `x` and a bound multiplier `z`
/// (`z ≤ 0` pairs with the lower bound, `z ≥ 0` with the upper).
///
/// Returns `(comp, sign)`: `comp_i = min{x_i − l_i, −z_i}` for `z_i < 0`,
/// `min{u_i − x_i, z_i}` for `z_i > 0`, and `sign_i = |z_i|` when `z_i` points
/// at an infinite bound (in which case `comp_i = 0`).
pub fn box_complementarity<T: Scalar>(x: &[T], z: &[T], bounds: &BoxSet<T>) -> (Vec<T>, Vec<T>) {
    let n = x.len();
    let mut comp = vec![T::zero(); n];
    let mut sign = vec![T::zero(); n];
    for i in 0..n {
        let (l, u, zi) = (bounds.lower()[i], bounds.upper()[i], z[i]);
        if zi < T::zero() {
            if l.is_finite() {
                comp[i] = (x[i] - l).min(-zi);
            } else {
                sign[i] = -zi;
            }
        } else if zi > T::zero() {
            if u.is_finite() {
                comp[i] = (u - x[i]).min(zi);
            } else {
                sign[i] = zi;
            }
        }
    }
    (comp, sign)
}

/// Sign pattern of the listed components as `+`, `-`, `0`.
pub fn sign_pattern<T: Scalar>(x: &[T], indices: &[usize]) -> String {
    indices
        .iter()
        .map(|&i| {
            if x[i] > T::zero() {
                '+'
            } else if x[i] < T::zero() {
                '-'
            } else {
                '0'
            }
        })
        .collect()
}
