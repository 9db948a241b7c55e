//! Small dense helpers not covered directly by nalgebra.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Full Householder QR of a tall `n x p` matrix.
///
/// Returns `(Q, R)` with `Q` an `n x n` orthogonal matrix and `R` the leading
/// `p x p` upper-triangular block, so `A = Q[:, ..p] R` and
/// `Q[:, p..]' A = 0`.
pub(crate) fn full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = a.shape();
    debug_assert!(n >= p);
    let mut work = a.clone();
    let mut reflectors: Vec<Option<DVector<f64>>> = Vec::with_capacity(p);

    for k in 0..p {
        let x = work.view((k, k), (n - k, 1)).column(0).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        v /= vnorm;
        {
            let mut block = work.view_mut((k, k), (n - k, p - k));
            let proj = block.tr_mul(&v);
            block.ger(-2.0, &v, &proj, 1.0);
        }
        reflectors.push(Some(v));
    }

    let mut q = DMatrix::<f64>::identity(n, n);
    for k in (0..p).rev() {
        if let Some(v) = &reflectors[k] {
            let mut block = q.view_mut((k, 0), (n - k, n));
            let proj = block.tr_mul(v);
            block.ger(-2.0, v, &proj, 1.0);
        }
    }
    let mut r = work.view((0, 0), (p, p)).clone_owned();
    for j in 0..p {
        for i in (j + 1)..p {
            r[(i, j)] = 0.0;
        }
    }
    (q, r)
}

/// Cholesky factorization of a symmetric matrix, `None` when not numerically positive definite.
pub(crate) fn cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m)
}

/// Solve `R x = b` for upper-triangular `R`.
pub(crate) fn solve_upper(r: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    r.solve_upper_triangular(b)
}

/// Symmetrize in place: `M <- (M + M') / 2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}
