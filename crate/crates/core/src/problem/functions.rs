use crate::linalg::{dot, Mat};
use crate::problem::{ProblemError, SmoothFunctions};
use crate::Scalar;

type ScalarFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
type VectorFn<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type MatrixFn<T> = Box<dyn Fn(&[T]) -> Mat<T> + Send + Sync>;

/// Smooth functions given as closures.
pub struct FnFunctions<T: Scalar> {
    n: usize,
    m: usize,
    f: ScalarFn<T>,
    g: VectorFn<T>,
    c: VectorFn<T>,
    jac: MatrixFn<T>,
}

impl<T: Scalar> FnFunctions<T> {
    pub fn new(
        n: usize,
        m: usize,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
        g: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        c: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        jac: impl Fn(&[T]) -> Mat<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            m,
            f: Box::new(f),
            g: Box::new(g),
            c: Box::new(c),
            jac: Box::new(jac),
        }
    }
}

impl<T: Scalar> SmoothFunctions<T> for FnFunctions<T> {
    fn dim(&self) -> usize {
        self.n
    }
    fn num_constraints(&self) -> usize {
        self.m
    }
    fn objective(&self, x: &[T]) -> T {
        (self.f)(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.g)(x)
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        (self.c)(x)
    }
    fn jacobian(&self, x: &[T]) -> Mat<T> {
        (self.jac)(x)
    }
}

/// `f(x) = ½xᵀQx + qᵀx + k` with constraints
/// `c_i(x) = ½xᵀP_i x + a_iᵀx − b_i`.
#[derive(Clone, Debug)]
pub struct QuadraticFunctions<T: Scalar> {
    hessian: Mat<T>,
    linear: Vec<T>,
    constant: T,
    eq_matrix: Mat<T>,
    eq_rhs: Vec<T>,
    constraint_hessians: Vec<Option<Mat<T>>>,
}

impl<T: Scalar> QuadraticFunctions<T> {
    pub fn new(
        hessian: Mat<T>,
        linear: Vec<T>,
        constant: T,
        eq_matrix: Mat<T>,
        eq_rhs: Vec<T>,
        constraint_hessians: Vec<Option<Mat<T>>>,
    ) -> Result<Self, ProblemError> {
        let n = linear.len();
        let m = eq_rhs.len();
        let check = |what, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(ProblemError::Dimension {
                    what,
                    expected,
                    got,
                })
            }
        };
        check("objective hessian rows", n, hessian.rows())?;
        check("objective hessian cols", n, hessian.cols())?;
        check("constraint matrix rows", m, eq_matrix.rows())?;
        if m > 0 {
            check("constraint matrix cols", n, eq_matrix.cols())?;
        }
        let constraint_hessians = if constraint_hessians.is_empty() {
            vec![None; m]
        } else {
            check("constraint hessians", m, constraint_hessians.len())?;
            for p in constraint_hessians.iter().flatten() {
                check("constraint hessian rows", n, p.rows())?;
                check("constraint hessian cols", n, p.cols())?;
            }
            constraint_hessians
        };
        let eq_matrix = if m == 0 { Mat::zeros(0, n) } else { eq_matrix };
        Ok(Self {
            hessian,
            linear,
            constant,
            eq_matrix,
            eq_rhs,
            constraint_hessians,
        })
    }
}

impl<T: Scalar> SmoothFunctions<T> for QuadraticFunctions<T> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn num_constraints(&self) -> usize {
        self.eq_rhs.len()
    }

    fn objective(&self, x: &[T]) -> T {
        let qx = self.hessian.mul_vec(x);
        T::lit(0.5) * dot(x, &qx) + dot(&self.linear, x) + self.constant
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = self.hessian.mul_vec(x);
        for (gi, &li) in g.iter_mut().zip(&self.linear) {
            *gi += li;
        }
        g
    }

    fn constraints(&self, x: &[T]) -> Vec<T> {
        let mut c = self.eq_matrix.mul_vec(x);
        for (i, ci) in c.iter_mut().enumerate() {
            *ci -= self.eq_rhs[i];
            if let Some(p) = &self.constraint_hessians[i] {
                *ci += T::lit(0.5) * dot(x, &p.mul_vec(x));
            }
        }
        c
    }

    fn jacobian(&self, x: &[T]) -> Mat<T> {
        let mut j = self.eq_matrix.clone();
        for (i, p) in self.constraint_hessians.iter().enumerate() {
            if let Some(p) = p {
                let px = p.mul_vec(x);
                for (a, b) in j.row_mut(i).iter_mut().zip(px) {
                    *a += b;
                }
            }
        }
        j
    }
}
