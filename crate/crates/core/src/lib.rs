//! Proximal-gradient solver for nonsmooth, equality and bound constrained
//! problems
//!
//! ```text
//!     min  f(x) + Σ λ_i |x_i|   s.t.  c(x) = 0,  x ∈ [l, u]
//! ```
//!
//! Each iteration combines a normal step toward linearized feasibility with
//! a proximal tangential step in the null space of the constraint Jacobian,
//! and accepts steps on an ℓ2 merit function with an adaptive merit
//! parameter. The core is generic over `f32`/`f64` through [`Scalar`]; the
//! `*F64` aliases below fix the scalar type.
//!
//! ```
//! use pgcon_core::corpus::corpus;
//! use pgcon_core::{solve, SolveStatus, SolverConfig};
//!
//! let inst = corpus().into_iter().find(|c| c.name == "L1-LIN-1").unwrap();
//! let report = solve(&inst.problem, &inst.x0, &SolverConfig::default()).unwrap();
//! assert_eq!(report.status, SolveStatus::KktPoint);
//! ```

pub mod bench;
pub mod corpus;
pub mod driver;
pub mod geometry;
pub mod linalg;
pub mod merit;
pub mod normal_step;
pub mod problem;
pub mod qp;
mod scalar;
pub mod scca;
pub mod tangential;

pub use driver::{
    load_config, solve, ConfigError, InvariantKind, InvariantViolation, IterationRecord, KktParts,
    SolveError, SolveReport, SolveStatus, SolverConfig,
};
pub use merit::AlphaRule;
pub use problem::{
    BoxSet, FnFunctions, L1Regularizer, ProblemError, ProblemFile, ProblemInstance,
    QuadraticFunctions, SmoothFunctions,
};
pub use scalar::Scalar;
pub use tangential::TangentialSolver;

pub type ProblemInstanceF64 = ProblemInstance<f64>;
pub type SolveReportF64 = SolveReport<f64>;
pub type BoxSetF64 = BoxSet<f64>;
pub type L1RegularizerF64 = L1Regularizer<f64>;
pub type MatF64 = linalg::Mat<f64>;
pub type QpProblemF64 = qp::QpProblem<f64>;
pub type QpSolutionF64 = qp::QpSolution<f64>;
