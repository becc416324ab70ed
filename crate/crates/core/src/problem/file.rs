//! JSON problem files.
//!
//! Three kinds are accepted, selected by the `kind` field: `quadratic`
//! (quadratic objective with quadratic or linear constraints), `scca`
//! (generated sparse CCA instance) and `analytic` (a named corpus instance).
//! Infinite bounds are written as the strings `"-inf"` and `"inf"`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    add_slacks, BoxSet, GeneralProblem, L1Regularizer, ProblemError, ProblemInstance,
    QuadraticFunctions,
};
use crate::linalg::Mat;

/// A bound entry: a number or one of the sentinels `"-inf"`, `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundValue {
    Finite(f64),
    Sentinel(Sentinel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sentinel {
    #[serde(rename = "-inf")]
    NegInf,
    #[serde(rename = "inf")]
    Inf,
}

impl BoundValue {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Sentinel(Sentinel::NegInf) => f64::NEG_INFINITY,
            Self::Sentinel(Sentinel::Inf) => f64::INFINITY,
        }
    }
}

impl From<f64> for BoundValue {
    fn from(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            Self::Sentinel(Sentinel::NegInf)
        } else if v == f64::INFINITY {
            Self::Sentinel(Sentinel::Inf)
        } else {
            Self::Finite(v)
        }
    }
}

/// Constraint rows `½xᵀP_i x + a_iᵀx`, held either at `rhs` (equalities) or
/// between `lower` and `upper` (inequalities).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintBlock {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hessians: Vec<Option<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rhs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lower: Vec<BoundValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub upper: Vec<BoundValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemKind {
    Quadratic {
        /// `f = ½xᵀHx + qᵀx + constant`.
        hessian: Vec<Vec<f64>>,
        linear: Vec<f64>,
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        equalities: Option<ConstraintBlock>,
        #[serde(default)]
        inequalities: Option<ConstraintBlock>,
        #[serde(default)]
        lower: Option<Vec<BoundValue>>,
        #[serde(default)]
        upper: Option<Vec<BoundValue>>,
        #[serde(default)]
        l1_weights: Option<Vec<f64>>,
    },
    Scca {
        nx: usize,
        ny: usize,
        samples: usize,
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
    Analytic {
        instance: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: ProblemKind,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

/// A built problem with its suggested start point.
pub struct LoadedProblem {
    pub problem: ProblemInstance<f64>,
    pub x0: Vec<f64>,
}

fn matrix(rows: &[Vec<f64>], cols: usize, what: &'static str) -> Result<Mat<f64>, ProblemError> {
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(ProblemError::Dimension {
            what,
            expected: cols,
            got: bad.len(),
        });
    }
    if rows.is_empty() {
        return Ok(Mat::zeros(0, cols));
    }
    Ok(Mat::from_rows(rows))
}

fn bounds_vec(
    v: Option<&Vec<BoundValue>>,
    n: usize,
    fill: f64,
    what: &'static str,
) -> Result<Vec<f64>, ProblemError> {
    match v {
        None => Ok(vec![fill; n]),
        Some(v) if v.len() == n => Ok(v.iter().map(|b| b.value()).collect()),
        Some(v) => Err(ProblemError::Dimension {
            what,
            expected: n,
            got: v.len(),
        }),
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        serde_json::from_str(text).map_err(|e| ProblemError::File(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProblemError::File(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    /// Builds the instance. The start point is `x0` when given, otherwise
    /// the kind's default (CCA start for SCCA, corpus start for analytic,
    /// projected origin for quadratic).
    pub fn build(&self) -> Result<LoadedProblem, ProblemError> {
        let (problem, default_x0) = match &self.kind {
            ProblemKind::Quadratic {
                hessian,
                linear,
                constant,
                equalities,
                inequalities,
                lower,
                upper,
                l1_weights,
            } => {
                let n = linear.len();
                let h = matrix(hessian, n, "objective hessian")?;
                if h.rows() != n {
                    return Err(ProblemError::Dimension {
                        what: "objective hessian rows",
                        expected: n,
                        got: h.rows(),
                    });
                }
                let empty = ConstraintBlock {
                    matrix: Vec::new(),
                    hessians: Vec::new(),
                    rhs: Vec::new(),
                    lower: Vec::new(),
                    upper: Vec::new(),
                };
                let eq = equalities.as_ref().unwrap_or(&empty);
                let ineq = inequalities.as_ref().unwrap_or(&empty);
                let (me, mi) = (eq.matrix.len(), ineq.matrix.len());
                if eq.rhs.len() != me {
                    return Err(ProblemError::Dimension {
                        what: "equality rhs",
                        expected: me,
                        got: eq.rhs.len(),
                    });
                }
                if !eq.lower.is_empty() || !eq.upper.is_empty() || !ineq.rhs.is_empty() {
                    return Err(ProblemError::File(
                        "equalities take `rhs`; inequalities take `lower`/`upper`".into(),
                    ));
                }
                let rows: Vec<Vec<f64>> = eq.matrix.iter().chain(&ineq.matrix).cloned().collect();
                let a = matrix(&rows, n, "constraint matrix")?;
                let mut rhs = eq.rhs.clone();
                rhs.extend(std::iter::repeat_n(0.0, mi));
                let block_hessians =
                    |b: &ConstraintBlock,
                     m: usize|
                     -> Result<Vec<Option<Mat<f64>>>, ProblemError> {
                        if b.hessians.is_empty() {
                            return Ok(vec![None; m]);
                        }
                        if b.hessians.len() != m {
                            return Err(ProblemError::Dimension {
                                what: "constraint hessian count",
                                expected: m,
                                got: b.hessians.len(),
                            });
                        }
                        b.hessians
                            .iter()
                            .map(|h| {
                                h.as_ref()
                                    .map(|h| matrix(h, n, "constraint hessian"))
                                    .transpose()
                            })
                            .collect()
                    };
                let mut hessians = block_hessians(eq, me)?;
                hessians.extend(block_hessians(ineq, mi)?);
                let funcs =
                    QuadraticFunctions::new(h, linear.clone(), *constant, a, rhs, hessians)?;
                let lo = bounds_vec(lower.as_ref(), n, f64::NEG_INFINITY, "lower bounds")?;
                let up = bounds_vec(upper.as_ref(), n, f64::INFINITY, "upper bounds")?;
                let bounds = BoxSet::new(lo, up)?;
                let reg = match l1_weights {
                    Some(w) => L1Regularizer::new(w.clone())?,
                    None => L1Regularizer::zero(n),
                };
                let il = bounds_vec(
                    Some(&ineq.lower).filter(|v| !v.is_empty()),
                    mi,
                    f64::NEG_INFINITY,
                    "inequality lower",
                )?;
                let iu = bounds_vec(
                    Some(&ineq.upper).filter(|v| !v.is_empty()),
                    mi,
                    f64::INFINITY,
                    "inequality upper",
                )?;
                let gp = GeneralProblem {
                    name: self.name.clone().unwrap_or_else(|| "quadratic".into()),
                    functions: Arc::new(funcs),
                    num_eq: me,
                    reg,
                    bounds,
                    ineq_lower: il,
                    ineq_upper: iu,
                };
                let p = add_slacks(gp)?;
                let origin = crate::geometry::project_box(&vec![0.0; p.n()], p.bounds());
                (p, origin)
            }
            ProblemKind::Scca {
                nx,
                ny,
                samples,
                lambda,
                seed,
            } => {
                let err = |e: crate::scca::SccaError| ProblemError::File(e.to_string());
                let data = crate::scca::scca_generate(*nx, *ny, *samples, *seed).map_err(err)?;
                let p = crate::scca::scca_problem(&data, *lambda).map_err(err)?;
                let x0 = crate::scca::scca_init(&data, None).x0;
                (p, x0)
            }
            ProblemKind::Analytic { instance } => {
                let inst = crate::corpus::corpus()
                    .into_iter()
                    .find(|c| c.name == instance)
                    .ok_or_else(|| {
                        ProblemError::File(format!("unknown corpus instance `{instance}`"))
                    })?;
                (inst.problem, inst.x0)
            }
        };
        let problem = match &self.name {
            Some(name) if !matches!(self.kind, ProblemKind::Quadratic { .. }) => {
                problem.with_name(name.clone())
            }
            _ => problem,
        };
        let x0 = match &self.x0 {
            Some(x) if x.len() == problem.n() => x.clone(),
            Some(x) => {
                return Err(ProblemError::Dimension {
                    what: "x0",
                    expected: problem.n(),
                    got: x.len(),
                })
            }
            None => default_x0,
        };
        Ok(LoadedProblem { problem, x0 })
    }
}
