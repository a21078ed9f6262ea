//! Small dense helpers. The generic routines are written over `Scalar` so
//! they can run on dual numbers; f64-only work goes through nalgebra.

use crate::scalar::Scalar;
use crate::{CgbError, Result};
use nalgebra::DMatrix;

/// Euclidean dot product.
pub fn dot<S: Scalar>(u: &[S], v: &[S]) -> S {
    let mut acc = S::zero();
    for (a, b) in u.iter().zip(v) {
        acc = acc + *a * *b;
    }
    acc
}

/// Inner product under a metric given row-major as `g[n*i + j]`.
pub fn metric_inner<S: Scalar>(g: &[S], u: &[S], v: &[S]) -> S {
    let n = u.len();
    debug_assert_eq!(g.len(), n * n);
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            acc = acc + g[n * i + j] * u[i] * v[j];
        }
    }
    acc
}

pub fn axpy<S: Scalar>(y: &mut [S], a: S, x: &[S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * *xi;
    }
}

pub fn scale_vec<S: Scalar>(v: &[S], a: S) -> Vec<S> {
    v.iter().map(|&x| x * a).collect()
}

/// Gram-Schmidt under a metric, in the given order, without pivoting.
/// Returns the orthonormal vectors. Errors if a vector degenerates.
pub fn gram_schmidt<S: Scalar>(g: &[S], basis: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let mut out: Vec<Vec<S>> = Vec::with_capacity(basis.len());
    for b in basis {
        let mut v = b.clone();
        for e in &out {
            let c = metric_inner(g, e, &v);
            axpy(&mut v, -c, e);
        }
        let nn = metric_inner(g, &v, &v);
        if nn.val() <= 1e-26 {
            return Err(CgbError::DegenerateParam(
                b.iter().map(|x| x.val()).collect(),
            ));
        }
        let inv = nn.sqrt().recip();
        out.push(scale_vec(&v, inv));
    }
    Ok(out)
}

/// Determinant of a small square matrix, row-major.
pub fn det_f64(a: &[f64], n: usize) -> f64 {
    DMatrix::from_row_slice(n, n, a).determinant()
}

/// Deterministic pairwise summation; result is independent of any chunking
/// a caller might do as long as the input order is fixed.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Invert a small matrix, row-major. Errors on singularity.
pub fn invert_f64(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let inv = m.try_inverse().ok_or(CgbError::SingularMetric)?;
    Ok(inv.transpose().as_slice().to_vec()) // nalgebra is column-major
}
