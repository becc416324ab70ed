use std::sync::Arc;

use serde::Serialize;

use crate::linalg::{norm_inf, Mat};
use crate::problem::{ProblemInstance, SmoothFunctions};
use crate::Scalar;

/// Gradient-based scaling factors, each in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ScaleInfo<T: Scalar> {
    pub objective_factor: T,
    pub constraint_factors: Vec<T>,
}

fn factor<T: Scalar>(grad_inf: T) -> T {
    let hundred = T::lit(100.0);
    if grad_inf > hundred && grad_inf.is_finite() {
        hundred / grad_inf
    } else {
        T::one()
    }
}

struct ScaledFunctions<T: Scalar> {
    inner: Arc<dyn SmoothFunctions<T>>,
    obj: T,
    cons: Vec<T>,
}

impl<T: Scalar> SmoothFunctions<T> for ScaledFunctions<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }
    fn objective(&self, x: &[T]) -> T {
        self.obj * self.inner.objective(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = self.inner.gradient(x);
        g.iter_mut().for_each(|v| *v *= self.obj);
        g
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        let mut c = self.inner.constraints(x);
        c.iter_mut().zip(&self.cons).for_each(|(v, &s)| *v *= s);
        c
    }
    fn jacobian(&self, x: &[T]) -> Mat<T> {
        let mut j = self.inner.jacobian(x);
        j.scale_rows(&self.cons);
        j
    }
}

/// Scales the objective by `min(1, 100/‖∇f(x0)‖∞)` and each constraint by
/// `min(1, 100/‖∇c_i(x0)‖∞)`.
///
/// The ℓ1 weights are scaled with the objective so that the scaled problem is
/// a positive multiple of the original and keeps its minimizers.
pub fn apply_scaling<T: Scalar>(
    p: &ProblemInstance<T>,
    x0: &[T],
) -> (ProblemInstance<T>, ScaleInfo<T>) {
    let g = p.gradient(x0);
    let obj = factor(norm_inf(&g));
    let jac = p.jacobian(x0);
    let cons: Vec<T> = (0..p.m()).map(|i| factor(norm_inf(jac.row(i)))).collect();
    let info = ScaleInfo {
        objective_factor: obj,
        constraint_factors: cons.clone(),
    };
    let scaled = ProblemInstance {
        name: p.name.clone(),
        functions: Arc::new(ScaledFunctions {
            inner: p.functions.clone(),
            obj,
            cons,
        }),
        reg: p.reg.scaled(obj),
        bounds: p.bounds.clone(),
        scale: None,
    }
    .with_scale(info.clone());
    (scaled, info)
}
