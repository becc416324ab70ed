use std::sync::Arc;

use crate::linalg::Mat;
use crate::problem::{BoxSet, L1Regularizer, ProblemError, ProblemInstance, SmoothFunctions};
use crate::Scalar;

/// A problem with equality and two-sided inequality constraints.
///
/// `functions` returns `[c_E(x); c_I(x)]` with the first `num_eq` rows being
/// equalities; the remaining rows must satisfy `ineq_lower ≤ c_I(x) ≤ ineq_upper`.
#[derive(Clone)]
pub struct GeneralProblem<T: Scalar> {
    pub name: String,
    pub functions: Arc<dyn SmoothFunctions<T>>,
    pub num_eq: usize,
    pub reg: L1Regularizer<T>,
    pub bounds: BoxSet<T>,
    pub ineq_lower: Vec<T>,
    pub ineq_upper: Vec<T>,
}

struct SlackFunctions<T: Scalar> {
    inner: Arc<dyn SmoothFunctions<T>>,
    n: usize,
    num_eq: usize,
    num_ineq: usize,
}

impl<T: Scalar> SmoothFunctions<T> for SlackFunctions<T> {
    fn dim(&self) -> usize {
        self.n + self.num_ineq
    }

    fn num_constraints(&self) -> usize {
        self.num_eq + self.num_ineq
    }

    fn objective(&self, z: &[T]) -> T {
        self.inner.objective(&z[..self.n])
    }

    fn gradient(&self, z: &[T]) -> Vec<T> {
        let mut g = self.inner.gradient(&z[..self.n]);
        g.extend(std::iter::repeat_n(T::zero(), self.num_ineq));
        g
    }

    fn constraints(&self, z: &[T]) -> Vec<T> {
        let mut c = self.inner.constraints(&z[..self.n]);
        for k in 0..self.num_ineq {
            c[self.num_eq + k] -= z[self.n + k];
        }
        c
    }

    fn jacobian(&self, z: &[T]) -> Mat<T> {
        let inner = self.inner.jacobian(&z[..self.n]);
        let rows = self.num_eq + self.num_ineq;
        let cols = self.n + self.num_ineq;
        let mut j = Mat::zeros(rows, cols);
        for i in 0..rows {
            j.row_mut(i)[..self.n].copy_from_slice(inner.row(i));
        }
        for k in 0..self.num_ineq {
            j[(self.num_eq + k, self.n + k)] = -T::one();
        }
        j
    }
}

/// Rewrites inequalities `c_l ≤ c_I(x) ≤ c_u` as `c_I(x) − s = 0` with
/// `c_l ≤ s ≤ c_u`. Slacks are appended after `x` and are unregularized.
pub fn add_slacks<T: Scalar>(gp: GeneralProblem<T>) -> Result<ProblemInstance<T>, ProblemError> {
    let n = gp.functions.dim();
    let total = gp.functions.num_constraints();
    if gp.num_eq > total {
        return Err(ProblemError::Dimension {
            what: "equality count",
            expected: total,
            got: gp.num_eq,
        });
    }
    let num_ineq = total - gp.num_eq;
    if gp.ineq_lower.len() != num_ineq || gp.ineq_upper.len() != num_ineq {
        return Err(ProblemError::Dimension {
            what: "inequality bounds",
            expected: num_ineq,
            got: gp.ineq_lower.len().min(gp.ineq_upper.len()),
        });
    }
    let slack_box = BoxSet::new(gp.ineq_lower.clone(), gp.ineq_upper.clone())?;
    if num_ineq == 0 {
        return ProblemInstance::new(gp.name, gp.functions, gp.reg, gp.bounds);
    }
    let funcs = SlackFunctions {
        inner: gp.functions,
        n,
        num_eq: gp.num_eq,
        num_ineq,
    };
    let bounds = gp.bounds.concat(&slack_box);
    let reg = gp.reg.extended(num_ineq);
    ProblemInstance::new(gp.name, Arc::new(funcs), reg, bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnFunctions;
    use proptest::prelude::*;

    fn single_ineq() -> GeneralProblem<f64> {
        // f = ½w², c_I = w ≤ 1
        let f = FnFunctions::new(
            1,
            1,
            |x: &[f64]| 0.5 * x[0] * x[0],
            |x: &[f64]| vec![x[0]],
            |x: &[f64]| vec![x[0]],
            |_x: &[f64]| Mat::from_rows(&[vec![1.0]]),
        );
        GeneralProblem {
            name: "w".into(),
            functions: Arc::new(f),
            num_eq: 0,
            reg: L1Regularizer::new(vec![0.3]).unwrap(),
            bounds: BoxSet::free(1),
            ineq_lower: vec![f64::NEG_INFINITY],
            ineq_upper: vec![1.0],
        }
    }

    #[test]
    fn single_inequality_becomes_slack_equality() {
        let p = add_slacks(single_ineq()).unwrap();
        assert_eq!((p.n(), p.m()), (2, 1));
        assert_eq!(p.constraints(&[0.75, 0.25]), vec![0.5]);
        assert_eq!(p.jacobian(&[0.75, 0.25]).row(0), &[1.0, -1.0]);
        assert_eq!(p.bounds().upper()[1], 1.0);
        assert_eq!(p.bounds().lower()[1], f64::NEG_INFINITY);
        assert_eq!(p.regularizer().weights(), &[0.3, 0.0]);
    }

    #[test]
    fn inverted_inequality_bounds_rejected() {
        let mut gp = single_ineq();
        gp.ineq_lower = vec![2.0];
        assert!(add_slacks(gp).is_err());
    }

    #[test]
    fn no_inequalities_is_identity() {
        let mut gp = single_ineq();
        gp.num_eq = 1;
        gp.ineq_lower.clear();
        gp.ineq_upper.clear();
        let p = add_slacks(gp).unwrap();
        assert_eq!((p.n(), p.m()), (1, 1));
        assert_eq!(p.constraints(&[0.4]), vec![0.4]);
    }

    proptest! {
        // (x, s) feasible for the slack form iff x feasible for the original,
        // with s = c_I(x) the only admissible slack.
        #[test]
        fn slack_form_preserves_feasibility(
            x in prop::collection::vec(-2.0f64..2.0, 2),
            ds in -0.5f64..0.5,
        ) {
            let f = FnFunctions::new(
                2, 2,
                |_x: &[f64]| 0.0,
                |_x: &[f64]| vec![0.0, 0.0],
                |x: &[f64]| vec![x[0] - x[1], x[0] + x[1]],
                |_x: &[f64]| Mat::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]),
            );
            let gp = GeneralProblem {
                name: "p".into(),
                functions: Arc::new(f),
                num_eq: 1,
                reg: L1Regularizer::zero(2),
                bounds: BoxSet::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
                ineq_lower: vec![-0.5],
                ineq_upper: vec![0.5],
            };
            let xs = vec![x[0], x[0]]; // satisfy the equality exactly
            let orig_feasible = gp.bounds.contains(&xs, 0.0)
                && (-0.5..=0.5).contains(&(xs[0] + xs[1]));
            let p = add_slacks(gp).unwrap();
            let s = xs[0] + xs[1];
            let z = vec![xs[0], xs[1], s];
            let slack_feasible = p.bounds().contains(&z, 0.0)
                && p.constraints(&z).iter().all(|c| *c == 0.0);
            prop_assert_eq!(orig_feasible, slack_feasible);
            // any other slack value violates the equality
            let z2 = vec![xs[0], xs[1], s + ds];
            if ds != 0.0 {
                prop_assert!(p.constraints(&z2)[1] != 0.0);
            }
        }
    }
}
