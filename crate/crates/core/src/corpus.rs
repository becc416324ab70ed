//! Small analytic test problems with known solutions.
//!
//! Each KKT instance carries its primal-dual solution, derived by hand, and a
//! parametrization of its feasible set, so the oracle can be re-derived by
//! grid search followed by local refinement.

use std::sync::Arc;

use serde::Serialize;

use crate::driver::kkt_residual;
use crate::geometry::{active_set, sign_pattern, ActiveSet};
use crate::linalg::{norm_inf, Mat};
use crate::problem::{
    add_slacks, BoxSet, GeneralProblem, L1Regularizer, ProblemInstance, QuadraticFunctions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Expectation {
    KktPoint,
    InfeasibleStationary,
    /// Constraint qualification fails; a KKT point still exists but the
    /// convergence theory does not cover it.
    NoGuarantee,
}

#[derive(Clone, Debug, Serialize)]
pub struct Oracle {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub g_r: Vec<f64>,
    pub active_set: ActiveSet,
    pub sign_pattern: String,
}

pub type FeasibleMap = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// Feasible set as the image of a parameter box.
#[derive(Clone)]
pub struct Parametrization {
    pub ranges: Vec<(f64, f64)>,
    pub map: FeasibleMap,
}

#[derive(Clone)]
pub struct CorpusInstance {
    pub name: &'static str,
    pub problem: ProblemInstance<f64>,
    pub x0: Vec<f64>,
    pub expectation: Expectation,
    pub oracle: Option<Oracle>,
    pub feasible_set: Option<Parametrization>,
    pub note: &'static str,
    /// Instance with strict complementarity at the solution.
    pub strict_complementarity: bool,
}

fn quad(
    name: &str,
    hess: Mat<f64>,
    lin: Vec<f64>,
    constant: f64,
    a: Mat<f64>,
    b: Vec<f64>,
    ch: Vec<Option<Mat<f64>>>,
    weights: Vec<f64>,
    bounds: BoxSet<f64>,
) -> ProblemInstance<f64> {
    let f = QuadraticFunctions::new(hess, lin, constant, a, b, ch).expect("corpus dimensions");
    ProblemInstance::new(
        name,
        Arc::new(f),
        L1Regularizer::new(weights).unwrap(),
        bounds,
    )
    .unwrap()
}

/// `½‖x − a‖²` as `(I, −a, ½‖a‖²)`.
fn dist_sq(a: &[f64]) -> (Mat<f64>, Vec<f64>, f64) {
    let n = a.len();
    (
        Mat::identity(n),
        a.iter().map(|v| -v).collect(),
        0.5 * a.iter().map(|v| v * v).sum::<f64>(),
    )
}

fn oracle(
    p: &ProblemInstance<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    g_r: Vec<f64>,
) -> Oracle {
    let regularized = p.regularizer().regularized_indices();
    Oracle {
        active_set: active_set(&x, p.bounds(), Some(0.0)),
        sign_pattern: sign_pattern(&x, &regularized),
        x,
        y,
        z,
        g_r,
    }
}

fn param(
    ranges: Vec<(f64, f64)>,
    map: impl Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync + 'static,
) -> Option<Parametrization> {
    Some(Parametrization {
        ranges,
        map: Arc::new(map),
    })
}

fn in_box(x: Vec<f64>, lo: f64, hi: f64) -> Option<Vec<f64>> {
    x.iter().all(|v| (lo..=hi).contains(v)).then_some(x)
}

pub fn corpus() -> Vec<CorpusInstance> {
    let mut out = Vec::new();
    let sum_row = |n: usize| Mat::from_rows(&[vec![1.0; n]]);

    // min ½‖x − (2,0)‖² s.t. x1 + x2 = 1, x ≥ 0. The unconstrained projection
    // onto the line is (1.5, −0.5), so x2 = 0 is active: x = (1, 0), y = 1, z2 = −1.
    {
        let (h, q, k) = dist_sq(&[2.0, 0.0]);
        let p = quad(
            "EQ-QUAD-1",
            h,
            q,
            k,
            sum_row(2),
            vec![1.0],
            vec![],
            vec![0.0; 2],
            BoxSet::orthant(2),
        );
        let o = oracle(&p, vec![1.0, 0.0], vec![1.0], vec![0.0, -1.0], vec![0.0; 2]);
        out.push(CorpusInstance {
            name: "EQ-QUAD-1",
            x0: vec![0.2, 0.3],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, 1.0)], |t| Some(vec![t[0], 1.0 - t[0]])),
            note: "projection onto the simplex edge; bound x2 ≥ 0 active with z2 = −1",
            strict_complementarity: true,
            problem: p,
        });
    }

    // min x1 + |x2| s.t. x1 = 1: x = (1, 0), y = −1, g_r2 = 0.
    {
        let p = quad(
            "L1-LIN-1",
            Mat::zeros(2, 2),
            vec![1.0, 0.0],
            0.0,
            Mat::from_rows(&[vec![1.0, 0.0]]),
            vec![1.0],
            vec![],
            vec![0.0, 1.0],
            BoxSet::free(2),
        );
        let o = oracle(&p, vec![1.0, 0.0], vec![-1.0], vec![0.0; 2], vec![0.0, 0.0]);
        out.push(CorpusInstance {
            name: "L1-LIN-1",
            x0: vec![0.0, 0.7],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(-2.0, 2.0)], |t| Some(vec![1.0, t[0]])),
            note: "separable; soft threshold drives x2 to exactly 0",
            strict_complementarity: false,
            problem: p,
        });
    }

    // f = ½(x2 − 1)², c = x1² + 1 > 0 everywhere. ∇(½c²) = 2c·x1 e1 vanishes
    // at x1 = 0 with c = 1.
    {
        let p = quad(
            "INFEAS-1",
            Mat::from_diagonal(&[0.0, 1.0]),
            vec![0.0, -1.0],
            0.5,
            Mat::zeros(1, 2),
            vec![-1.0],
            vec![Some(Mat::from_diagonal(&[2.0, 0.0]))],
            vec![0.0; 2],
            BoxSet::free(2),
        );
        out.push(CorpusInstance {
            name: "INFEAS-1",
            x0: vec![0.0, 0.0],
            expectation: Expectation::InfeasibleStationary,
            oracle: None,
            feasible_set: None,
            note: "c(x) = x1² + 1 has no zero; x1 = 0 is an infeasible stationary point",
            strict_complementarity: false,
            problem: p,
        });
    }

    // min ½‖x − a‖² + ½‖x‖₁ s.t. Σx = 1, x ≥ 0, a = (2, 1.5, −1).
    // On the support x_i = a_i − ½ − y; y = ¾ gives (¾, ¼) and x3 = 0 with
    // ρ3 = −(1 + ¾) = −1.75, so g_r3 = −½ and z3 = −1.25 < 0.
    {
        let (h, q, k) = dist_sq(&[2.0, 1.5, -1.0]);
        let p = quad(
            "SC-ORTH-1",
            h,
            q,
            k,
            sum_row(3),
            vec![1.0],
            vec![],
            vec![0.5; 3],
            BoxSet::orthant(3),
        );
        let mut o = oracle(
            &p,
            vec![0.75, 0.25, 0.0],
            vec![0.75],
            vec![0.0, 0.0, -1.25],
            vec![0.5, 0.5, -0.5],
        );
        o.active_set = ActiveSet {
            at_lower: vec![2],
            at_upper: vec![],
        };
        o.sign_pattern = "++0".into();
        out.push(CorpusInstance {
            name: "SC-ORTH-1",
            x0: vec![1.0 / 3.0; 3],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, 1.0), (0.0, 1.0)], |t| {
                in_box(vec![t[0], t[1], 1.0 - t[0] - t[1]], 0.0, f64::INFINITY)
            }),
            note: "strict complementarity: A(x*) = {3}, support {1, 2}",
            strict_complementarity: true,
            problem: p,
        });
    }

    // min ½‖x − a‖² + ‖x‖₁ s.t. Σx = 1, a = (3, −2, 0.2): x = soft(a − y, 1)
    // with y = 0 gives (2, −1, 0).
    {
        let (h, q, k) = dist_sq(&[3.0, -2.0, 0.2]);
        let p = quad(
            "SIGN-1",
            h,
            q,
            k,
            sum_row(3),
            vec![1.0],
            vec![],
            vec![1.0; 3],
            BoxSet::free(3),
        );
        let o = oracle(
            &p,
            vec![2.0, -1.0, 0.0],
            vec![0.0],
            vec![0.0; 3],
            vec![1.0, -1.0, 0.2],
        );
        out.push(CorpusInstance {
            name: "SIGN-1",
            x0: vec![0.0; 3],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, 4.0), (-3.0, 1.0)], |t| {
                Some(vec![t[0], t[1], 1.0 - t[0] - t[1]])
            }),
            note: "mixed sign pattern +-0",
            strict_complementarity: false,
            problem: p,
        });
    }

    // min x1 + x2 s.t. x1² + x2² = 2: x = (−1, −1), 1 + 2y·(−1) = 0 ⇒ y = ½.
    {
        let p = quad(
            "CIRCLE-1",
            Mat::zeros(2, 2),
            vec![1.0, 1.0],
            0.0,
            Mat::zeros(1, 2),
            vec![2.0],
            vec![Some(Mat::from_diagonal(&[2.0, 2.0]))],
            vec![0.0; 2],
            BoxSet::free(2),
        );
        let o = oracle(&p, vec![-1.0, -1.0], vec![0.5], vec![0.0; 2], vec![0.0; 2]);
        out.push(CorpusInstance {
            name: "CIRCLE-1",
            x0: vec![-1.2, -0.6],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, std::f64::consts::TAU)], |t| {
                let r = 2f64.sqrt();
                Some(vec![r * t[0].cos(), r * t[0].sin()])
            }),
            note: "nonconvex equality; global minimizer on the circle",
            strict_complementarity: false,
            problem: p,
        });
    }

    // min ½‖x − (1.5, 1.5)‖² s.t. ‖x‖² = 1: (1 + 2y)x = (1.5, 1.5) with
    // x = (1, 1)/√2 gives 1 + 2y = 1.5√2.
    {
        let (h, q, k) = dist_sq(&[1.5, 1.5]);
        let p = quad(
            "QUAD-CIRC-1",
            h,
            q,
            k,
            Mat::zeros(1, 2),
            vec![1.0],
            vec![Some(Mat::from_diagonal(&[2.0, 2.0]))],
            vec![0.0; 2],
            BoxSet::free(2),
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let o = oracle(
            &p,
            vec![s, s],
            vec![(1.5 * 2f64.sqrt() - 1.0) / 2.0],
            vec![0.0; 2],
            vec![0.0; 2],
        );
        out.push(CorpusInstance {
            name: "QUAD-CIRC-1",
            x0: vec![1.0, 0.0],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, std::f64::consts::TAU)], |t| {
                Some(vec![t[0].cos(), t[0].sin()])
            }),
            note: "projection onto the unit circle",
            strict_complementarity: false,
            problem: p,
        });
    }

    // min x1 + 2x2 + 0.1‖x‖₁ s.t. x1 + x2 = 1, x ≥ 0: x = (1, 0), y = −1.1,
    // ρ2 = −0.9 ⇒ g_r2 = −0.1, z2 = −0.8. Started at the solution.
    {
        let p = quad(
            "LP-L1-KKT-1",
            Mat::zeros(2, 2),
            vec![1.0, 2.0],
            0.0,
            sum_row(2),
            vec![1.0],
            vec![],
            vec![0.1; 2],
            BoxSet::orthant(2),
        );
        let o = oracle(
            &p,
            vec![1.0, 0.0],
            vec![-1.1],
            vec![0.0, -0.8],
            vec![0.1, -0.1],
        );
        out.push(CorpusInstance {
            name: "LP-L1-KKT-1",
            x0: vec![1.0, 0.0],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, 1.0)], |t| Some(vec![t[0], 1.0 - t[0]])),
            note: "starts at an exact KKT point; the first step is zero",
            strict_complementarity: true,
            problem: p,
        });
    }

    // min ½‖x − (1, 2)‖² s.t. x1 + x2 = 1 and 2x1 + 2x2 = 2. The rows are
    // parallel, so LICQ fails; x = (0, 1) with any y1 + 2y2 = 1.
    {
        let (h, q, k) = dist_sq(&[1.0, 2.0]);
        let p = quad(
            "LICQ-DEG-1",
            h,
            q,
            k,
            Mat::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            vec![1.0, 2.0],
            vec![],
            vec![0.0; 2],
            BoxSet::free(2),
        );
        let o = oracle(
            &p,
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0; 2],
            vec![0.0; 2],
        );
        out.push(CorpusInstance {
            name: "LICQ-DEG-1",
            x0: vec![0.0, 0.0],
            expectation: Expectation::NoGuarantee,
            oracle: Some(o),
            feasible_set: param(vec![(-2.0, 2.0)], |t| Some(vec![t[0], 1.0 - t[0]])),
            note: "duplicated constraint; rank-deficient Jacobian, multipliers not unique",
            strict_complementarity: false,
            problem: p,
        });
    }

    // min ½‖x − (2, −3, 0.5)‖² s.t. Σx = 0.5, x ∈ [−1, 1]³: x = (1, −1, 0.5),
    // y = 0, z = (1, −2, 0).
    {
        let (h, q, k) = dist_sq(&[2.0, -3.0, 0.5]);
        let bounds = BoxSet::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let p = quad(
            "BOX-QP-1",
            h,
            q,
            k,
            sum_row(3),
            vec![0.5],
            vec![],
            vec![0.0; 3],
            bounds,
        );
        let o = oracle(
            &p,
            vec![1.0, -1.0, 0.5],
            vec![0.0],
            vec![1.0, -2.0, 0.0],
            vec![0.0; 3],
        );
        out.push(CorpusInstance {
            name: "BOX-QP-1",
            x0: vec![0.0; 3],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(-1.0, 1.0), (-1.0, 1.0)], |t| {
                in_box(vec![t[0], t[1], 0.5 - t[0] - t[1]], -1.0, 1.0)
            }),
            note: "upper bound on x1 and lower bound on x2 active",
            strict_complementarity: true,
            problem: p,
        });
    }

    // min (x1 − 2)² + (x2 − 1)² s.t. ‖x‖² ≤ 1 through a slack s ≤ 1:
    // x = (2, 1)/√5, (1 + y)x = (2, 1) ⇒ y = √5 − 1, z_s = y.
    {
        let f = QuadraticFunctions::new(
            Mat::from_diagonal(&[2.0, 2.0]),
            vec![-4.0, -2.0],
            5.0,
            Mat::zeros(1, 2),
            vec![0.0],
            vec![Some(Mat::from_diagonal(&[2.0, 2.0]))],
        )
        .unwrap();
        let gp = GeneralProblem {
            name: "SLACK-INEQ-1".into(),
            functions: Arc::new(f),
            num_eq: 0,
            reg: L1Regularizer::zero(2),
            bounds: BoxSet::free(2),
            ineq_lower: vec![f64::NEG_INFINITY],
            ineq_upper: vec![1.0],
        };
        let p = add_slacks(gp).unwrap();
        let r5 = 5f64.sqrt();
        let y = r5 - 1.0;
        let o = oracle(
            &p,
            vec![2.0 / r5, 1.0 / r5, 1.0],
            vec![y],
            vec![0.0, 0.0, y],
            vec![0.0; 3],
        );
        out.push(CorpusInstance {
            name: "SLACK-INEQ-1",
            x0: vec![0.0; 3],
            expectation: Expectation::KktPoint,
            oracle: Some(o),
            feasible_set: param(vec![(0.0, 1.0), (0.0, std::f64::consts::TAU)], |t| {
                let (r, th) = (t[0], t[1]);
                Some(vec![r * th.cos(), r * th.sin(), r * r])
            }),
            note: "inequality through a slack; slack upper bound active",
            strict_complementarity: true,
            problem: p,
        });
    }

    out
}

/// `χ` of the oracle point with its multipliers.
pub fn oracle_kkt(inst: &CorpusInstance) -> Option<f64> {
    let o = inst.oracle.as_ref()?;
    Some(kkt_residual(&inst.problem, &o.x, &o.y, &o.z, &o.g_r).chi)
}

/// Minimizes `f + r` over the parametrized feasible set: a grid at spacing
/// `1e-3` of each parameter range, then repeated local grids shrinking by
/// a factor 10 until the spacing reaches `1e-10`.
pub fn brute_force_minimizer(inst: &CorpusInstance) -> Option<(Vec<f64>, f64)> {
    let par = inst.feasible_set.as_ref()?;
    let p = &inst.problem;
    let value = |t: &[f64]| -> Option<(f64, Vec<f64>)> {
        let x = (par.map)(t)?;
        Some((p.objective(&x) + p.reg_value(&x), x))
    };
    let d = par.ranges.len();
    let counts: Vec<usize> = par
        .ranges
        .iter()
        .map(|(a, b)| ((b - a) / 1e-3).round() as usize + 1)
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![0usize; d];
    let mut t = vec![0.0; d];
    loop {
        for i in 0..d {
            let (a, b) = par.ranges[i];
            t[i] = a + (b - a) * idx[i] as f64 / (counts[i] - 1).max(1) as f64;
        }
        if let Some((v, _)) = value(&t) {
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, t.clone()));
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                break;
            }
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    let (mut best_v, mut best_t) = best?;
    let mut h = 1e-3;
    while h > 1e-10 {
        let width = 10;
        let mut improved = true;
        while improved {
            improved = false;
            let center = best_t.clone();
            let mut off = vec![-(width as i64); d];
            loop {
                let cand: Vec<f64> = (0..d)
                    .map(|i| {
                        let (a, b) = par.ranges[i];
                        (center[i] + off[i] as f64 * h / width as f64).clamp(a, b)
                    })
                    .collect();
                if let Some((v, _)) = value(&cand) {
                    if v < best_v {
                        best_v = v;
                        best_t = cand;
                        improved = true;
                    }
                }
                let mut i = 0;
                while i < d {
                    off[i] += 1;
                    if off[i] <= width as i64 {
                        break;
                    }
                    off[i] = -(width as i64);
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
        }
        h /= 10.0;
    }
    let x = (par.map)(&best_t)?;
    Some((x, best_v))
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub oracle_kkt: Option<f64>,
    /// ∞-norm distance between the brute-force minimizer and the oracle.
    pub brute_force_gap: Option<f64>,
    pub passed: bool,
}

/// Oracle KKT residual must be at most `1e-10`, and the brute-force
/// minimizer must land within `1e-6` of the oracle point.
pub fn check_oracle(inst: &CorpusInstance) -> OracleCheck {
    let kkt = oracle_kkt(inst);
    let gap = match (&inst.oracle, brute_force_minimizer(inst)) {
        (Some(o), Some((x, _))) => {
            let diff: Vec<f64> = x.iter().zip(&o.x).map(|(a, b)| a - b).collect();
            Some(norm_inf(&diff))
        }
        _ => None,
    };
    let passed = match inst.expectation {
        Expectation::InfeasibleStationary => inst.oracle.is_none(),
        _ => kkt.is_some_and(|v| v <= 1e-10) && gap.is_some_and(|g| g <= 1e-6),
    };
    OracleCheck {
        name: inst.name,
        oracle_kkt: kkt,
        brute_force_gap: gap,
        passed,
    }
}
