//! Linear algebra substrate: CSR matrices, the algorithm metrics and the
//! iterative / dense solves built on them.

mod metric;
mod sparse;

pub use metric::{MetricKind, MetricMatrix, SpectralBounds, DENSE_CAP};
pub use sparse::SparseMatrix;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Plain dense vector. Finiteness is checked where data enters the library.
pub type Vector = Vec<f64>;

pub const POWER_ITERATION_CAP: usize = 10_000;
pub const CG_DEFAULT_TOL: f64 = 1e-12;
pub const CG_DEFAULT_CAP: usize = 10_000;
/// Dimension cap for dense singular value computations.
pub const SVD_CAP: usize = 500;

pub fn ensure_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vector {
    a.iter().map(|x| x * t).collect()
}

/// `y += t x`
pub fn axpy(t: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += t * xi;
    }
}

pub fn concat(x: &[f64], y: &[f64]) -> Vector {
    let mut z = Vec::with_capacity(x.len() + y.len());
    z.extend_from_slice(x);
    z.extend_from_slice(y);
    z
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest singular value of `a` by power iteration on `AᵀA`.
///
/// Starts from the normalized all-ones vector; stops once the Rayleigh
/// quotient changes by at most `tol` relative between sweeps.
pub fn operator_norm(a: &SparseMatrix, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let n = a.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut av = vec![0.0; a.rows()];
    let mut atav = vec![0.0; n];
    let mut estimate = 0.0;
    let mut restarted = false;
    for _ in 0..POWER_ITERATION_CAP {
        a.mul_vec_into(&v, &mut av);
        let rayleigh = dot(&av, &av);
        a.mul_transpose_vec_into(&av, &mut atav);
        let len = norm(&atav);
        if len == 0.0 {
            if restarted {
                return Ok(0.0);
            }
            // start vector lies in the kernel; switch to a fixed irregular one
            restarted = true;
            v = (0..n).map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract()).collect();
            let l = norm(&v);
            v.iter_mut().for_each(|x| *x /= l);
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&atav) {
            *vi = wi / len;
        }
        if (rayleigh - estimate).abs() <= tol * rayleigh {
            // one more Rayleigh quotient with the improved vector
            a.mul_vec_into(&v, &mut av);
            return Ok(dot(&av, &av).max(rayleigh).sqrt());
        }
        estimate = rayleigh;
    }
    Err(Error::PowerIteration {
        iters: POWER_ITERATION_CAP,
        estimate: estimate.sqrt(),
    })
}

/// Conjugate gradients for a symmetric positive definite operator given as a
/// closure. Returns the solution and the iteration count; the final residual
/// is recomputed explicitly before reporting success.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iters: usize) -> Result<(Vector, usize)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iters = 0;
    // a restart from the true residual absorbs drift of the recursive residual
    for _restart in 0..3 {
        while iters < max_iters {
            if rr.sqrt() <= target {
                break;
            }
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::CgNotConverged {
                    iters,
                    residual: rr.sqrt() / b_norm,
                });
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
            rr = rr_new;
            iters += 1;
        }
        apply(&x, &mut ap);
        r = sub(b, &ap);
        rr = dot(&r, &r);
        if rr.sqrt() <= target {
            return Ok((x, iters));
        }
        if iters >= max_iters {
            break;
        }
        p = r.clone();
    }
    Err(Error::CgNotConverged {
        iters,
        residual: rr.sqrt() / b_norm,
    })
}

/// Singular values of `a` via a dense SVD, descending.
pub fn singular_values(a: &SparseMatrix) -> Result<Vec<f64>> {
    let dim = a.rows().max(a.cols());
    if dim > SVD_CAP {
        return Err(Error::DenseCapExceeded { dim, cap: SVD_CAP });
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = a.to_dense().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Smallest nonzero singular value; values below `1e-12·σ_max` count as zero.
pub fn min_positive_singular_value(a: &SparseMatrix) -> Result<Option<f64>> {
    let sv = singular_values(a)?;
    let Some(&top) = sv.first() else {
        return Ok(None);
    };
    if top == 0.0 {
        return Ok(None);
    }
    Ok(sv.iter().copied().filter(|&s| s > 1e-12 * top).reduce(f64::min))
}

/// Minimum-norm least-squares solution of `M x = rhs` by dense SVD.
pub fn dense_min_norm_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vector> {
    let b = nalgebra::DVector::from_column_slice(rhs);
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = 1e-12 * top.max(f64::MIN_POSITIVE);
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidArgument(format!("dense least squares failed: {e}")))?;
    Ok(x.iter().copied().collect())
}
