//! Problem abstraction: smooth parts, weighted ℓ1 regularizer and box set.
//!
//! A [`ProblemInstance`] describes
//!
//! ```text
//!     min  f(x) + Σ λ_i |x_i|   s.t.  c(x) = 0,  lower ≤ x ≤ upper
//! ```
//!
//! Inequality constraints are brought into this form by [`add_slacks`].

mod file;
mod functions;
mod scaling;
mod slacks;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm_inf, Mat};
use crate::Scalar;

pub use file::{BoundValue, ConstraintBlock, LoadedProblem, ProblemFile, ProblemKind, Sentinel};
pub use functions::{FnFunctions, QuadraticFunctions};
pub use scaling::{apply_scaling, ScaleInfo};
pub use slacks::{add_slacks, GeneralProblem};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("bound {index}: lower {lower} exceeds upper {upper}")]
    InvertedBound {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("regularizer weight {index} is negative or not finite ({value})")]
    BadWeight { index: usize, value: f64 },
    #[error("more constraints ({m}) than variables ({n})")]
    TooManyConstraints { n: usize, m: usize },
    #[error("non-finite value in {what} at component {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("invalid problem file: {0}")]
    File(String),
}

/// Smooth objective and constraint evaluators.
///
/// Implementations must be pure: the same `x` always produces the same output.
pub trait SmoothFunctions<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn objective(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    fn constraints(&self, x: &[T]) -> Vec<T>;
    /// `∇c(x)ᵀ`, one row per constraint.
    fn jacobian(&self, x: &[T]) -> Mat<T>;
}

/// Componentwise bounds with ±∞ allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoxSet<T: Scalar> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> BoxSet<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() {
            return Err(ProblemError::Dimension {
                what: "box upper",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == T::infinity() || u == T::neg_infinity() {
                return Err(ProblemError::InvertedBound {
                    index: i,
                    lower: l.as_f64(),
                    upper: u.as_f64(),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn free(n: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); n],
            upper: vec![T::infinity(); n],
        }
    }

    /// The nonnegative orthant.
    pub fn orthant(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    #[inline]
    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn is_orthant(&self) -> bool {
        self.lower.iter().all(|&l| l == T::zero()) && self.upper.iter().all(|&u| u == T::infinity())
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol)
    }

    /// Largest bound violation of `x`.
    pub fn violation(&self, x: &[T]) -> T {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .fold(T::zero(), |acc, (&xi, (&l, &u))| {
                acc.max(l - xi).max(xi - u)
            })
    }

    /// Concatenates two boxes (used for slack variables).
    pub fn concat(&self, other: &Self) -> Self {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        Self { lower, upper }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> BoxSet<U> {
        BoxSet {
            lower: self.lower.iter().map(|&v| f(v)).collect(),
            upper: self.upper.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `r(x) = Σ λ_i |x_i|` with `λ_i ≥ 0`; zero weight means unregularized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct L1Regularizer<T: Scalar> {
    weights: Vec<T>,
}

impl<T: Scalar> L1Regularizer<T> {
    pub fn new(weights: Vec<T>) -> Result<Self, ProblemError> {
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(ProblemError::BadWeight {
                    index: i,
                    value: w.as_f64(),
                });
            }
        }
        Ok(Self { weights })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            weights: vec![T::zero(); n],
        }
    }

    pub fn uniform(n: usize, lambda: T) -> Result<Self, ProblemError> {
        Self::new(vec![lambda; n])
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Indices with a positive weight, in increasing order.
    pub fn regularized_indices(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > T::zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn value(&self, x: &[T]) -> T {
        self.weights
            .iter()
            .zip(x)
            .map(|(&w, &xi)| w * xi.abs())
            .sum()
    }

    /// Membership test `g_r ∈ ∂r(x)` with tolerance `tol`: `|g_i| ≤ λ_i + tol`
    /// everywhere, and `|g_i − λ_i sign(x_i)| ≤ tol` where `|x_i| > tol`.
    pub fn subgradient_check(&self, x: &[T], g_r: &[T], tol: T) -> bool {
        self.subgradient_margin(x, g_r, tol) <= tol
    }

    /// Largest violation of the membership conditions (0 when satisfied exactly).
    pub fn subgradient_margin(&self, x: &[T], g_r: &[T], zero_tol: T) -> T {
        let mut worst = T::zero();
        for ((&w, &xi), &gi) in self.weights.iter().zip(x).zip(g_r) {
            worst = worst.max(gi.abs() - w);
            if xi.abs() > zero_tol {
                worst = worst.max((gi - w * xi.signum()).abs());
            }
        }
        worst
    }

    /// Euclidean distance from `v` to `∂r(x)`; exact zeros of `x` get the
    /// interval `[−λ_i, λ_i]`.
    pub fn subdifferential_distance(&self, x: &[T], v: &[T]) -> T {
        let mut s = T::zero();
        for ((&w, &xi), &vi) in self.weights.iter().zip(x).zip(v) {
            let d = if xi == T::zero() {
                (vi.abs() - w).max(T::zero())
            } else {
                vi - w * xi.signum()
            };
            s += d * d;
        }
        s.sqrt()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            weights: self.weights.iter().map(|&w| w * factor).collect(),
        }
    }

    /// Extends the weight vector by `k` unregularized components.
    pub fn extended(&self, k: usize) -> Self {
        let mut weights = self.weights.clone();
        weights.extend(std::iter::repeat_n(T::zero(), k));
        Self { weights }
    }
}

/// A complete problem in the solver's canonical form.
#[derive(Clone)]
pub struct ProblemInstance<T: Scalar> {
    pub name: String,
    functions: Arc<dyn SmoothFunctions<T>>,
    reg: L1Regularizer<T>,
    bounds: BoxSet<T>,
    scale: Option<ScaleInfo<T>>,
}

impl<T: Scalar> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("scaled", &self.scale.is_some())
            .finish()
    }
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(
        name: impl Into<String>,
        functions: Arc<dyn SmoothFunctions<T>>,
        reg: L1Regularizer<T>,
        bounds: BoxSet<T>,
    ) -> Result<Self, ProblemError> {
        let n = functions.dim();
        let m = functions.num_constraints();
        if reg.dim() != n {
            return Err(ProblemError::Dimension {
                what: "l1 weights",
                expected: n,
                got: reg.dim(),
            });
        }
        if bounds.dim() != n {
            return Err(ProblemError::Dimension {
                what: "box",
                expected: n,
                got: bounds.dim(),
            });
        }
        if m > n {
            return Err(ProblemError::TooManyConstraints { n, m });
        }
        Ok(Self {
            name: name.into(),
            functions,
            reg,
            bounds,
            scale: None,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.functions.dim()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.functions.num_constraints()
    }

    #[inline]
    pub fn regularizer(&self) -> &L1Regularizer<T> {
        &self.reg
    }

    #[inline]
    pub fn bounds(&self) -> &BoxSet<T> {
        &self.bounds
    }

    #[inline]
    pub fn functions(&self) -> &Arc<dyn SmoothFunctions<T>> {
        &self.functions
    }

    #[inline]
    pub fn scale_info(&self) -> Option<&ScaleInfo<T>> {
        self.scale.as_ref()
    }

    pub fn objective(&self, x: &[T]) -> T {
        self.functions.objective(x)
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        self.functions.gradient(x)
    }

    pub fn constraints(&self, x: &[T]) -> Vec<T> {
        self.functions.constraints(x)
    }

    pub fn jacobian(&self, x: &[T]) -> Mat<T> {
        self.functions.jacobian(x)
    }

    pub fn reg_value(&self, x: &[T]) -> T {
        self.reg.value(x)
    }

    /// `f(x) + r(x)` in the original (unscaled) units.
    pub fn unscaled_objective(&self, x: &[T]) -> T {
        let v = self.objective(x) + self.reg_value(x);
        match &self.scale {
            Some(s) => v / s.objective_factor,
            None => v,
        }
    }

    /// Constraint values in the original (unscaled) units.
    pub fn unscaled_constraints(&self, x: &[T]) -> Vec<T> {
        let c = self.constraints(x);
        match &self.scale {
            Some(s) => c
                .iter()
                .zip(&s.constraint_factors)
                .map(|(&ci, &f)| ci / f)
                .collect(),
            None => c,
        }
    }

    pub(crate) fn with_scale(mut self, scale: ScaleInfo<T>) -> Self {
        self.scale = Some(scale);
        self
    }

    pub(crate) fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Result of [`check_derivatives`].
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct DerivativeReport<T: Scalar> {
    pub gradient_error: T,
    /// One entry per Jacobian row.
    pub jacobian_errors: Vec<T>,
    pub step: T,
}

impl<T: Scalar> DerivativeReport<T> {
    pub fn max_error(&self) -> T {
        self.jacobian_errors
            .iter()
            .fold(self.gradient_error, |a, &b| a.max(b))
    }
}

/// Default central-difference step `1e-6·(1 + ‖x‖∞)`.
pub fn default_fd_step<T: Scalar>(x: &[T]) -> T {
    T::lit(1e-6) * (T::one() + norm_inf(x))
}

/// Compares analytic derivatives against central differences.
///
/// Errors are `|fd − analytic| / (1 + |analytic|)` maximized over components.
pub fn check_derivatives<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    h: T,
) -> Result<DerivativeReport<T>, ProblemError> {
    let n = p.n();
    let m = p.m();
    if x.len() != n {
        return Err(ProblemError::Dimension {
            what: "point",
            expected: n,
            got: x.len(),
        });
    }
    let g = p.gradient(x);
    let jac = p.jacobian(x);
    finite_check("gradient", &g)?;
    finite_check("jacobian", jac.as_slice())?;
    let two_h = h + h;
    let mut grad_err = T::zero();
    let mut jac_err = vec![T::zero(); m];
    let mut xp = x.to_vec();
    for j in 0..n {
        let orig = xp[j];
        xp[j] = orig + h;
        let fp = p.objective(&xp);
        let cp = p.constraints(&xp);
        xp[j] = orig - h;
        let fm = p.objective(&xp);
        let cm = p.constraints(&xp);
        xp[j] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(ProblemError::NonFinite {
                what: "objective",
                index: j,
            });
        }
        let fd = (fp - fm) / two_h;
        grad_err = grad_err.max((fd - g[j]).abs() / (T::one() + g[j].abs()));
        for i in 0..m {
            if !cp[i].is_finite() || !cm[i].is_finite() {
                return Err(ProblemError::NonFinite {
                    what: "constraints",
                    index: i,
                });
            }
            let fd = (cp[i] - cm[i]) / two_h;
            let a = jac[(i, j)];
            jac_err[i] = jac_err[i].max((fd - a).abs() / (T::one() + a.abs()));
        }
    }
    Ok(DerivativeReport {
        gradient_error: grad_err,
        jacobian_errors: jac_err,
        step: h,
    })
}

pub(crate) fn finite_check<T: Scalar>(what: &'static str, v: &[T]) -> Result<(), ProblemError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(ProblemError::NonFinite { what, index }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_eq() -> ProblemInstance<f64> {
        // f = x1², c = x1 + x2 − 1
        let f = FnFunctions::new(
            2,
            1,
            |x: &[f64]| x[0] * x[0],
            |x: &[f64]| vec![2.0 * x[0], 0.0],
            |x: &[f64]| vec![x[0] + x[1] - 1.0],
            |_x: &[f64]| Mat::from_rows(&[vec![1.0, 1.0]]),
        );
        ProblemInstance::new("lin", Arc::new(f), L1Regularizer::zero(2), BoxSet::free(2)).unwrap()
    }

    #[test]
    fn derivative_check_on_quadratic_and_linear() {
        let p = linear_eq();
        // power-of-two step keeps the linear differences exact in binary
        let rep = check_derivatives(&p, &[3.0, 0.0], 1.0 / 131072.0).unwrap();
        assert!(rep.gradient_error <= 1e-8, "{}", rep.gradient_error);
        assert_eq!(rep.jacobian_errors[0], 0.0);
    }

    #[test]
    fn derivative_check_reports_nan() {
        let f = FnFunctions::new(
            1,
            0,
            |x: &[f64]| x[0].ln(),
            |x: &[f64]| vec![1.0 / x[0]],
            |_x: &[f64]| vec![],
            |_x: &[f64]| Mat::zeros(0, 1),
        );
        let p = ProblemInstance::new("ln", Arc::new(f), L1Regularizer::zero(1), BoxSet::free(1))
            .unwrap();
        let err = check_derivatives(&p, &[0.0], 1e-3).unwrap_err();
        assert!(matches!(err, ProblemError::NonFinite { .. }));
    }

    #[test]
    fn reg_value_and_subgradients() {
        let r = L1Regularizer::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(r.value(&[2.0, -3.0]), 5.0);
        assert!(r.subgradient_check(&[2.0, -3.0], &[1.0, -1.0], 1e-12));

        let r = L1Regularizer::new(vec![1.0, 0.0]).unwrap();
        assert!(r.subgradient_check(&[0.0, 4.0], &[0.5, 0.0], 1e-12));
        assert!(!r.subgradient_check(&[0.0, 4.0], &[1.5, 0.0], 1e-12));

        let r = L1Regularizer::new(vec![2.0, 2.0]).unwrap();
        assert!(r.subgradient_check(&[0.0, 0.0], &[2.0, -2.0], 1e-12));
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(L1Regularizer::new(vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxSet::new(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).is_ok());
    }

    proptest! {
        #[test]
        fn reg_is_nonnegative_and_convex(
            w in prop::collection::vec(0.0f64..5.0, 4),
            x in prop::collection::vec(-10.0f64..10.0, 4),
            y in prop::collection::vec(-10.0f64..10.0, 4),
            theta in 0.0f64..1.0,
        ) {
            let r = L1Regularizer::new(w).unwrap();
            prop_assert!(r.value(&x) >= 0.0);
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            prop_assert!(r.value(&z) <= theta * r.value(&x) + (1.0 - theta) * r.value(&y) + 1e-12);
        }
    }
}
