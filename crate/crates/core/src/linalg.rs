//! Small dense linear algebra used by the subproblem solvers.
//!
//! Matrices are row-major. Everything here is sized for desk-scale problems
//! (a few thousand entries per side at most); no blocking or BLAS.

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Mat<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `out = A x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = Aᵀ y`
    pub fn tr_mul_vec_into(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &yi) in y.iter().enumerate() {
            if yi != T::zero() {
                axpy(yi, self.row(i), out);
            }
        }
    }

    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_into(y, &mut out);
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != T::zero() {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        out
    }

    /// `A Bᵀ`, convenient for covariance products `X Xᵀ`.
    pub fn mul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "mul_transpose dimensions");
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        out
    }

    /// `Aᵀ A`
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let ri = row[i];
                if ri == T::zero() {
                    continue;
                }
                for j in i..self.cols {
                    out[(i, j)] += ri * row[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }

    /// `A Aᵀ` restricted to the listed columns.
    pub fn outer_gram_cols(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            let ri = self.row(i);
            for j in i..self.rows {
                let rj = self.row(j);
                let mut s = T::zero();
                for &c in cols {
                    s += ri[c] * rj[c];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn scale_rows(&mut self, factors: &[T]) {
        for (i, &f) in factors.iter().enumerate() {
            self.row_mut(i).iter_mut().for_each(|v| *v *= f);
        }
    }

    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += a x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2<T: Scalar>(x: &[T]) -> T {
    // scaled to avoid overflow on large entries
    let scale = norm_inf(x);
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s: T = x.iter().map(|&v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

pub fn norm_inf<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| {
        if v.is_nan() {
            T::nan()
        } else {
            acc.max(v.abs())
        }
    })
}

pub fn norm1<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|v| v.abs()).sum()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scaled<T: Scalar>(a: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&v| a * v).collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T: Scalar> {
    l: Mat<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when a pivot is not strictly positive.
    pub fn factor(a: &Mat<T>) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "cholesky of non-square matrix");
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L⁻¹ b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `L⁻ᵀ b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Eigen-decomposition `A = Q diag(values) Qᵀ` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen<T: Scalar> {
    pub values: Vec<T>,
    /// Eigenvectors stored as columns.
    pub vectors: Mat<T>,
}

impl<T: Scalar> SymEigen<T> {
    /// Cyclic Jacobi rotations. Accurate to working precision for the small
    /// systems used here; cost is O(n³) per sweep.
    pub fn new(a: &Mat<T>) -> Self {
        let n = a.rows();
        assert_eq!(n, a.cols(), "eigen of non-square matrix");
        let mut m = a.clone();
        for i in 0..n {
            for j in 0..i {
                let avg = (m[(i, j)] + m[(j, i)]) * T::lit(0.5);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        let mut v = Mat::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag += m[(i, i)] * m[(i, i)];
                for j in 0..i {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if off <= eps * eps * diag * T::lit(1e-4) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..n).map(|i| m[(i, i)]).collect();
        Self { values, vectors: v }
    }

    pub fn max_abs_value(&self) -> T {
        norm_inf(&self.values)
    }

    /// Splits `b` into the pseudo-inverse solution and the coefficients of `b`
    /// along the (numerically) null eigenvectors. `rel_tol` is relative to the
    /// largest eigenvalue magnitude.
    pub fn pseudo_solve(&self, b: &[T], rel_tol: T) -> PseudoSolve<T> {
        let n = self.values.len();
        let cutoff = rel_tol * self.max_abs_value().max(T::min_positive_value());
        let mut x = vec![T::zero(); n];
        let mut null_coeffs = Vec::new();
        for k in 0..n {
            let mut beta = T::zero();
            for i in 0..n {
                beta += self.vectors[(i, k)] * b[i];
            }
            if self.values[k].abs() > cutoff {
                let w = beta / self.values[k];
                for i in 0..n {
                    x[i] += w * self.vectors[(i, k)];
                }
            } else {
                null_coeffs.push((k, beta));
            }
        }
        PseudoSolve { x, null_coeffs }
    }
}

#[derive(Clone, Debug)]
pub struct PseudoSolve<T> {
    pub x: Vec<T>,
    /// `(eigenvector column, qᵀb)` for each null direction.
    pub null_coeffs: Vec<(usize, T)>,
}

/// Largest eigenvalue of `J Jᵀ` (equivalently `‖JᵀJ‖₂`).
///
/// Exact through the m×m Gram matrix when m is small, otherwise a
/// 20-step power iteration on `JᵀJ`.
pub fn gram_spectral_norm<T: Scalar>(j: &Mat<T>) -> T {
    let m = j.rows();
    if m == 0 || j.cols() == 0 {
        return T::zero();
    }
    if m <= 64 {
        let cols: Vec<usize> = (0..j.cols()).collect();
        let g = j.outer_gram_cols(&cols);
        let e = SymEigen::new(&g);
        return e.values.iter().fold(T::zero(), |a, &v| a.max(v));
    }
    let n = j.cols();
    let mut x = vec![T::one() / T::from_usize_lossy(n).sqrt(); n];
    let mut est = T::zero();
    for _ in 0..20 {
        let jx = j.mul_vec(&x);
        let y = j.tr_mul_vec(&jx);
        let ny = norm2(&y);
        if ny == T::zero() {
            return T::zero();
        }
        est = ny;
        x = scaled(T::one() / ny, &y);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ]);
        let ch = Cholesky::factor(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let ax = a.mul_vec(&x);
        for (l, r) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*l, r, epsilon = 1e-12);
        }
        assert!(Cholesky::factor(&Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]])).is_none());
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = Mat::from_rows(&[
            vec![2.0, -1.0, 0.0, 0.3],
            vec![-1.0, 2.0, -1.0, 0.0],
            vec![0.0, -1.0, 2.0, 0.1],
            vec![0.3, 0.0, 0.1, -1.0],
        ]);
        let e = SymEigen::new(&a);
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += e.vectors[(i, k)] * e.values[k] * e.vectors[(j, k)];
                }
                assert_relative_eq!(s, a[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pseudo_solve_flags_inconsistent_rhs() {
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let e = SymEigen::new(&a);
        let ps: PseudoSolve<f64> = e.pseudo_solve(&[2.0, 3.0], 1e-12);
        assert_relative_eq!(ps.x[0], 2.0, epsilon = 1e-14);
        assert_eq!(ps.null_coeffs.len(), 1);
        assert_relative_eq!(ps.null_coeffs[0].1.abs(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gram_norm_matches_power_method_route() {
        let j = Mat::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let exact = gram_spectral_norm(&j);
        // JJᵀ = [[5,2],[2,2]]: λ² − 7λ + 6 = 0 → λmax = 6
        assert_relative_eq!(exact, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn norms_handle_scale() {
        assert_relative_eq!(norm2(&[3e200, 4e200]), 5e200, max_relative = 1e-14);
        assert_eq!(norm2::<f64>(&[]), 0.0);
        assert_eq!(norm_inf(&[-2.0, 1.0]), 2.0);
    }
}
