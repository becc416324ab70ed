use serde::Serialize;

use crate::geometry::box_complementarity;
use crate::linalg::{norm2, Mat};
use crate::problem::{BoxSet, ProblemInstance};
use crate::Scalar;

/// Components of the KKT residual `χ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct KktParts<T: Scalar> {
    /// `‖g + g_r + Jᵀy + z‖`.
    pub stationarity: T,
    /// `‖c‖`.
    pub feasibility: T,
    /// Box complementarity, including sign violations of `z` against
    /// infinite bounds. On the orthant this is `‖min{x, −z}‖`.
    pub complementarity: T,
    pub chi: T,
}

/// `χ = max{‖g + g_r + Jᵀy + z‖, ‖c‖, ‖comp‖}` at `x`.
pub fn kkt_residual<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    y: &[T],
    z: &[T],
    g_r: &[T],
) -> KktParts<T> {
    let g = p.gradient(x);
    let c = p.constraints(x);
    let jac = p.jacobian(x);
    kkt_parts_at(&g, &c, &jac, p.bounds(), x, y, z, g_r)
}

/// [`kkt_residual`] with the derivatives already evaluated.
#[allow(clippy::too_many_arguments)]
pub fn kkt_parts_at<T: Scalar>(
    g: &[T],
    c: &[T],
    jac: &Mat<T>,
    bounds: &BoxSet<T>,
    x: &[T],
    y: &[T],
    z: &[T],
    g_r: &[T],
) -> KktParts<T> {
    let jty = jac.tr_mul_vec(y);
    let r: Vec<T> = (0..x.len())
        .map(|i| g[i] + g_r[i] + jty[i] + z[i])
        .collect();
    let (comp, sign) = box_complementarity(x, z, bounds);
    let merged: Vec<T> = comp.iter().zip(&sign).map(|(&a, &b)| a.max(b)).collect();
    let stationarity = norm2(&r);
    let feasibility = norm2(c);
    let complementarity = norm2(&merged);
    KktParts {
        stationarity,
        feasibility,
        complementarity,
        chi: stationarity.max(feasibility).max(complementarity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnFunctions, L1Regularizer};
    use std::sync::Arc;

    fn orthant_lp() -> ProblemInstance<f64> {
        // f = eᵀx, no constraints, x ≥ 0
        let f = FnFunctions::new(
            2,
            0,
            |x: &[f64]| x[0] + x[1],
            |_x: &[f64]| vec![1.0, 1.0],
            |_x: &[f64]| vec![],
            |_x: &[f64]| Mat::zeros(0, 2),
        );
        ProblemInstance::new(
            "lp",
            Arc::new(f),
            L1Regularizer::zero(2),
            BoxSet::orthant(2),
        )
        .unwrap()
    }

    #[test]
    fn exact_kkt_gives_zero() {
        let p = orthant_lp();
        let k = kkt_residual(&p, &[0.0, 0.0], &[], &[-1.0, -1.0], &[0.0, 0.0]);
        assert_eq!(k.chi, 0.0);
    }

    #[test]
    fn complementarity_examples() {
        let bounds = BoxSet::orthant(2);
        let j = Mat::zeros(0, 2);
        // stationarity exact: g + z = 0 with g = (2, 0)
        let k = kkt_parts_at(
            &[2.0, 0.0],
            &[],
            &j,
            &bounds,
            &[0.0, 1.0],
            &[],
            &[-2.0, 0.0],
            &[0.0, 0.0],
        );
        assert_eq!(k.chi, 0.0);
        let k = kkt_parts_at(
            &[2.0, 0.0],
            &[],
            &j,
            &bounds,
            &[0.5, 0.0],
            &[],
            &[-2.0, 0.0],
            &[0.0, 0.0],
        );
        assert_eq!(k.complementarity, 0.5);
        assert!(k.chi >= 0.5);
    }

    #[test]
    fn wrong_sign_against_infinite_bound_counts() {
        let bounds = BoxSet::orthant(1);
        let j = Mat::zeros(0, 1);
        let k = kkt_parts_at(&[-3.0], &[], &j, &bounds, &[1.0], &[], &[3.0], &[0.0]);
        assert_eq!(k.stationarity, 0.0);
        assert_eq!(k.complementarity, 3.0);
    }

    #[test]
    fn feasibility_and_multiplier_terms() {
        let bounds = BoxSet::free(2);
        let j = Mat::from_rows(&[vec![1.0, 1.0]]);
        // g = (1, 2), y = −1.5 leaves (−0.5, 0.5)
        let k = kkt_parts_at(
            &[1.0, 2.0],
            &[0.3],
            &j,
            &bounds,
            &[0.0, 0.0],
            &[-1.5],
            &[0.0, 0.0],
            &[0.0, 0.0],
        );
        assert!((k.stationarity - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(k.feasibility, 0.3);
        assert_eq!(k.chi, k.stationarity);
    }
}
