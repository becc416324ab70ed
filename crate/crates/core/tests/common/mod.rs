//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use pgcon_core::linalg::Mat;
use pgcon_core::problem::BoxSet;
use pgcon_core::qp::{QpObjective, QpProblem};
use rand::Rng;

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Minimizer of a strictly convex QP by enumerating every assignment of the
/// variables to {free, lower, upper} and keeping the feasible stationary
/// candidate with the smallest objective.
pub fn enumerate_qp(
    h: &Mat<f64>,
    q: &[f64],
    a: &Mat<f64>,
    b: &[f64],
    bounds: &BoxSet<f64>,
) -> Option<Vec<f64>> {
    let d = q.len();
    let p = b.len();
    let (lo, up) = (bounds.lower(), bounds.upper());
    let options: Vec<Vec<u8>> = (0..d)
        .map(|i| {
            let mut o = vec![0u8];
            if lo[i].is_finite() {
                o.push(1);
            }
            if up[i].is_finite() && up[i] != lo[i] {
                o.push(2);
            }
            if lo[i] == up[i] {
                o = vec![1];
            }
            o
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let status: Vec<u8> = (0..d).map(|i| options[i][idx[i]]).collect();
        let free: Vec<usize> = (0..d).filter(|&i| status[i] == 0).collect();
        let mut x = vec![0.0; d];
        for i in 0..d {
            match status[i] {
                1 => x[i] = lo[i],
                2 => x[i] = up[i],
                _ => {}
            }
        }
        let nf = free.len();
        // rows of A restricted to the free block must be solvable for the fixed part
        let size = nf + p;
        let mut k = vec![vec![0.0; size]; size];
        let mut rhs = vec![0.0; size];
        for (ia, &i) in free.iter().enumerate() {
            for (ja, &j) in free.iter().enumerate() {
                k[ia][ja] = h[(i, j)];
            }
            let mut r = -q[i];
            for j in 0..d {
                if status[j] != 0 {
                    r -= h[(i, j)] * x[j];
                }
            }
            rhs[ia] = r;
            for row in 0..p {
                k[nf + row][ia] = a[(row, i)];
                k[ia][nf + row] = a[(row, i)];
            }
        }
        for row in 0..p {
            let mut r = b[row];
            for j in 0..d {
                if status[j] != 0 {
                    r -= a[(row, j)] * x[j];
                }
            }
            rhs[nf + row] = r;
        }
        let sol = if size == 0 {
            Some(vec![])
        } else {
            gauss_solve(k, rhs)
        };
        if let Some(sol) = sol {
            for (ia, &i) in free.iter().enumerate() {
                x[i] = sol[ia];
            }
            let feasible = (0..d).all(|i| x[i] >= lo[i] - 1e-9 && x[i] <= up[i] + 1e-9)
                && (0..p).all(|row| {
                    let s: f64 = (0..d).map(|j| a[(row, j)] * x[j]).sum();
                    (s - b[row]).abs() <= 1e-9 * (1.0 + b[row].abs())
                });
            if feasible {
                let hx = h.mul_vec(&x);
                let f: f64 = 0.5 * x.iter().zip(&hx).map(|(u, v)| u * v).sum::<f64>()
                    + q.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>();
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, x));
                }
            }
        }
        // next assignment
        let mut pos = 0;
        loop {
            if pos == d {
                return best.map(|b| b.1);
            }
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Random strongly convex QP with `d ≤ 8`, `p ≤ 3` and mixed finite and
/// infinite bounds, feasible by construction.
pub fn random_qp(rng: &mut impl Rng) -> QpProblem<f64> {
    let d = rng.random_range(1..=8usize);
    let p = rng.random_range(0..=3usize.min(d - 1).max(0));
    let mut m = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let mut h = m.gram();
    let mu = rng.random_range(0.1..1.0);
    for i in 0..d {
        h[(i, i)] += mu;
    }
    let q: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut lo = vec![f64::NEG_INFINITY; d];
    let mut up = vec![f64::INFINITY; d];
    let mut xf = vec![0.0; d];
    for i in 0..d {
        let kind = rng.random_range(0..4);
        let c: f64 = rng.random_range(-1.0..1.0);
        if kind == 1 || kind == 3 {
            lo[i] = c - rng.random_range(0.0..1.0);
        }
        if kind == 2 || kind == 3 {
            up[i] = c + rng.random_range(0.0..1.0);
        }
        xf[i] = c;
    }
    let mut a = Mat::zeros(p, d);
    for r in 0..p {
        for j in 0..d {
            a[(r, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let b = a.mul_vec(&xf);
    QpProblem::new(
        QpObjective::Dense {
            hessian: h,
            linear: q,
        },
        a,
        b,
        BoxSet::new(lo, up).unwrap(),
    )
    .unwrap()
    .with_strong_convexity(mu * 0.999)
    .unwrap()
}
