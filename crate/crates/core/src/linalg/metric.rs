use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::{conjugate_gradient, dot, operator_norm, SparseMatrix, Vector, CG_DEFAULT_CAP, CG_DEFAULT_TOL};
use crate::error::{Error, Result};

/// Largest total dimension for which the dense eigendecomposition is built.
pub const DENSE_CAP: usize = 2000;

/// Eigenvalues below this fraction of the largest one are treated as zero by
/// the pseudo-inverse.
const RANK_CUTOFF: f64 = 1e-10;

/// Which algorithm the metric belongs to, with its step parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricKind {
    /// `[[I/s, -Aᵀ], [-A, I/s]]`
    Pdhg { s: f64 },
    /// `I/s`
    Ppm { s: f64 },
    /// `[[I/τ, -Aᵀ], [-A, λI]]`
    Ladmm { tau: f64, lambda: f64 },
    /// `[[I/τ, -Aᵀ], [-A, τAAᵀ]]`, only semi-definite.
    Admm { tau: f64 },
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Pdhg { .. } => "pdhg",
            MetricKind::Ppm { .. } => "ppm",
            MetricKind::Ladmm { .. } => "ladmm",
            MetricKind::Admm { .. } => "admm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralBounds {
    /// Condition number `upper / lower`; infinite for a singular metric.
    pub fn condition(&self) -> f64 {
        if self.lower > 0.0 {
            self.upper / self.lower
        } else {
            f64::INFINITY
        }
    }
}

struct DenseEigen {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    cutoff: f64,
}

/// Block metric `P` of one of the supported algorithms, applied matrix-free.
pub struct MetricMatrix {
    kind: MetricKind,
    a: Arc<SparseMatrix>,
    a_norm: f64,
    bounds: SpectralBounds,
    cg_tol: f64,
    cg_cap: usize,
    eigen: OnceLock<Result<DenseEigen>>,
}

impl std::fmt::Debug for MetricMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricMatrix")
            .field("kind", &self.kind)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl MetricMatrix {
    /// Builds the metric, estimating `‖A‖` by power iteration.
    pub fn new(kind: MetricKind, a: Arc<SparseMatrix>) -> Result<Self> {
        let a_norm = operator_norm(&a, 1e-13)?;
        Self::with_operator_norm(kind, a, a_norm)
    }

    pub fn with_operator_norm(kind: MetricKind, a: Arc<SparseMatrix>, a_norm: f64) -> Result<Self> {
        let bounds = match kind {
            MetricKind::Pdhg { s } => {
                positive("s", s)?;
                if s * a_norm >= 1.0 {
                    return Err(Error::StepSize(format!("s·‖A‖ < 1 (s = {s}, ‖A‖ = {a_norm})")));
                }
                SpectralBounds {
                    lower: 1.0 / s - a_norm,
                    upper: 1.0 / s + a_norm,
                }
            }
            MetricKind::Ppm { s } => {
                positive("s", s)?;
                SpectralBounds {
                    lower: 1.0 / s,
                    upper: 1.0 / s,
                }
            }
            MetricKind::Ladmm { tau, lambda } => {
                positive("tau", tau)?;
                positive("lambda", lambda)?;
                if lambda <= tau * a_norm * a_norm {
                    return Err(Error::StepSize(format!(
                        "λ > τ‖A‖² (λ = {lambda}, τ = {tau}, ‖A‖ = {a_norm})"
                    )));
                }
                let mid = 0.5 * (1.0 / tau + lambda);
                let rad = (0.25 * (1.0 / tau - lambda).powi(2) + a_norm * a_norm).sqrt();
                SpectralBounds {
                    lower: mid - rad,
                    upper: mid + rad,
                }
            }
            MetricKind::Admm { tau } => {
                positive("tau", tau)?;
                SpectralBounds {
                    lower: 0.0,
                    upper: 1.0 / tau + tau * a_norm * a_norm,
                }
            }
        };
        Ok(MetricMatrix {
            kind,
            a,
            a_norm,
            bounds,
            cg_tol: CG_DEFAULT_TOL,
            cg_cap: CG_DEFAULT_CAP,
            eigen: OnceLock::new(),
        })
    }

    /// Overrides the conjugate-gradient tolerance and iteration cap.
    pub fn with_cg(mut self, tol: f64, cap: usize) -> Self {
        self.cg_tol = tol;
        self.cg_cap = cap;
        self
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    pub fn operator_norm(&self) -> f64 {
        self.a_norm
    }

    pub fn coupling(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn spectral_bounds(&self) -> SpectralBounds {
        self.bounds
    }

    pub fn is_positive_definite(&self) -> bool {
        !matches!(self.kind, MetricKind::Admm { .. })
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (x, y) = z.split_at(n);
        let (ox, oy) = out.split_at_mut(n);
        match self.kind {
            MetricKind::Ppm { s } => {
                for (o, v) in out.iter_mut().zip(z) {
                    *o = v / s;
                }
            }
            MetricKind::Pdhg { s } => {
                self.a.mul_transpose_vec_into(y, ox);
                self.a.mul_vec_into(x, oy);
                for (o, xi) in ox.iter_mut().zip(x) {
                    *o = xi / s - *o;
                }
                for (o, yi) in oy.iter_mut().zip(y) {
                    *o = yi / s - *o;
                }
            }
            MetricKind::Ladmm { tau, lambda } => {
                self.a.mul_transpose_vec_into(y, ox);
                self.a.mul_vec_into(x, oy);
                for (o, xi) in ox.iter_mut().zip(x) {
                    *o = xi / tau - *o;
                }
                for (o, yi) in oy.iter_mut().zip(y) {
                    *o = lambda * yi - *o;
                }
            }
            MetricKind::Admm { tau } => {
                self.a.mul_transpose_vec_into(y, ox);
                let aaty = self.a.mul_vec(ox);
                self.a.mul_vec_into(x, oy);
                for (o, xi) in ox.iter_mut().zip(x) {
                    *o = xi / tau - *o;
                }
                for (o, v) in oy.iter_mut().zip(&aaty) {
                    *o = tau * v - *o;
                }
            }
        }
    }

    /// `P z`, blockwise without forming `P`.
    pub fn apply(&self, z: &[f64]) -> Result<Vector> {
        self.check_dim(z.len())?;
        let mut out = vec![0.0; z.len()];
        self.apply_into(z, &mut out);
        Ok(out)
    }

    /// `P⁻¹ w` by conjugate gradients with the configured tolerance.
    pub fn solve(&self, w: &[f64]) -> Result<Vector> {
        self.solve_with_tol(w, self.cg_tol)
    }

    /// `P⁻¹ w` with `‖P v − w‖ ≤ tol·‖w‖`.
    pub fn solve_with_tol(&self, w: &[f64], tol: f64) -> Result<Vector> {
        self.check_dim(w.len())?;
        match self.kind {
            MetricKind::Admm { .. } => Err(Error::SemiDefiniteMetric),
            MetricKind::Ppm { s } => Ok(w.iter().map(|v| v * s).collect()),
            _ => {
                let (v, _) = conjugate_gradient(|x, out| self.apply_into(x, out), w, tol, self.cg_cap)?;
                Ok(v)
            }
        }
    }

    /// `zᵀ P z`
    pub fn norm_sq(&self, z: &[f64]) -> Result<f64> {
        Ok(dot(z, &self.apply(z)?))
    }

    /// `wᵀ P⁻¹ w` (pseudo-inverse for the semi-definite kind).
    pub fn inv_norm_sq(&self, w: &[f64]) -> Result<f64> {
        let v = if self.is_positive_definite() {
            self.solve(w)?
        } else {
            self.pseudo_inverse_apply(w)?
        };
        Ok(dot(w, &v))
    }

    /// Dense copy of `P`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            out.set_column(j, &DVector::from_column_slice(&col));
            e[j] = 0.0;
        }
        out
    }

    fn eigen(&self) -> Result<&DenseEigen> {
        let cached = self.eigen.get_or_init(|| {
            let dim = self.dim();
            if dim > DENSE_CAP {
                return Err(Error::DenseCapExceeded { dim, cap: DENSE_CAP });
            }
            let mut p = self.to_dense();
            // symmetrize away rounding before the symmetric solver
            let pt = p.transpose();
            p = (p + pt) * 0.5;
            let eig = p.symmetric_eigen();
            let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let top = values.iter().copied().fold(0.0, f64::max);
            Ok(DenseEigen {
                vectors: eig.eigenvectors,
                values,
                cutoff: RANK_CUTOFF * top,
            })
        });
        match cached {
            Ok(e) => Ok(e),
            Err(Error::DenseCapExceeded { dim, cap }) => Err(Error::DenseCapExceeded { dim: *dim, cap: *cap }),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        }
    }

    /// Moore–Penrose pseudo-inverse applied to `w`, via a cached dense
    /// eigendecomposition.
    pub fn pseudo_inverse_apply(&self, w: &[f64]) -> Result<Vector> {
        self.check_dim(w.len())?;
        let eig = self.eigen()?;
        let wv = DVector::from_column_slice(w);
        let coeffs = eig.vectors.transpose() * wv;
        let mut out = DVector::zeros(self.dim());
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam > eig.cutoff {
                out += eig.vectors.column(k) * (coeffs[k] / lam);
            }
        }
        Ok(out.iter().copied().collect())
    }

    /// Orthogonal projection of `w` onto `range(P)`.
    pub fn project_onto_range(&self, w: &[f64]) -> Result<Vector> {
        self.check_dim(w.len())?;
        let eig = self.eigen()?;
        let wv = DVector::from_column_slice(w);
        let coeffs = eig.vectors.transpose() * wv;
        let mut out = DVector::zeros(self.dim());
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam > eig.cutoff {
                out += eig.vectors.column(k) * coeffs[k];
            }
        }
        Ok(out.iter().copied().collect())
    }

    /// Numerical rank of `P` under the pseudo-inverse cutoff.
    pub fn rank(&self) -> Result<usize> {
        let eig = self.eigen()?;
        Ok(eig.values.iter().filter(|&&l| l > eig.cutoff).count())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::StepSize(format!("{name} > 0 (got {v})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, norm, sub};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64) -> Arc<SparseMatrix> {
        Arc::new(SparseMatrix::diag(&[a]).unwrap())
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random_bool(density) {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, &t).unwrap()
    }

    #[test]
    fn pdhg_apply_small() {
        let p = MetricMatrix::new(MetricKind::Pdhg { s: 0.5 }, scalar(1.0)).unwrap();
        assert_eq!(p.apply(&[1.0, 0.0]).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn ppm_apply_is_scaled_identity() {
        let p = MetricMatrix::new(MetricKind::Ppm { s: 0.5 }, scalar(1.0)).unwrap();
        assert_eq!(p.apply(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(p.solve(&[3.0, -1.0]).unwrap(), vec![1.5, -0.5]);
    }

    #[test]
    fn admm_apply_has_kernel() {
        let p = MetricMatrix::new(MetricKind::Admm { tau: 1.0 }, scalar(1.0)).unwrap();
        assert_eq!(p.apply(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(p.solve(&[1.0, 0.0]), Err(Error::SemiDefiniteMetric)));
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let p = MetricMatrix::new(MetricKind::Pdhg { s: 0.5 }, scalar(1.0)).unwrap();
        assert!(matches!(p.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pdhg_solve_small() {
        // inverse of [[2, -1], [-1, 2]] is (1/3)[[2, 1], [1, 2]]
        let p = MetricMatrix::new(MetricKind::Pdhg { s: 0.5 }, scalar(1.0)).unwrap();
        let v = p.solve(&[0.0, -1.0]).unwrap();
        assert_relative_eq!(v[0], -1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(v[1], -2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn step_size_conditions_are_enforced() {
        assert!(MetricMatrix::new(MetricKind::Pdhg { s: 1.0 }, scalar(1.0)).is_err());
        assert!(MetricMatrix::new(MetricKind::Ladmm { tau: 1.0, lambda: 1.0 }, scalar(1.0)).is_err());
        assert!(MetricMatrix::new(MetricKind::Admm { tau: -1.0 }, scalar(1.0)).is_err());
    }

    #[test]
    fn pseudo_inverse_of_rank_one_admm_metric() {
        let p = MetricMatrix::new(MetricKind::Admm { tau: 1.0 }, scalar(1.0)).unwrap();
        let v = p.pseudo_inverse_apply(&[1.0, -1.0]).unwrap();
        assert_relative_eq!(v[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(v[1], -0.5, max_relative = 1e-12);
        let k = p.pseudo_inverse_apply(&[1.0, 1.0]).unwrap();
        assert!(norm(&k) < 1e-12);
        assert_eq!(p.rank().unwrap(), 1);
    }

    #[test]
    fn pseudo_inverse_matches_solve_on_definite_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Arc::new(random_matrix(&mut rng, 4, 6, 0.6));
        let p = MetricMatrix::new(MetricKind::Pdhg { s: 0.4 / crate::linalg::operator_norm(&a, 1e-13).unwrap() }, a)
            .unwrap();
        let w: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dense = p.pseudo_inverse_apply(&w).unwrap();
        let cg = p.solve(&w).unwrap();
        assert!(max_abs_diff(&dense, &cg) <= 1e-8);
    }

    #[test]
    fn round_trip_for_every_definite_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Arc::new(random_matrix(&mut rng, 7, 9, 0.4));
        let an = crate::linalg::operator_norm(&a, 1e-13).unwrap();
        let tau = 1.0 / (2.0 * an);
        let kinds = [
            MetricKind::Pdhg { s: 1.0 / (2.0 * an) },
            MetricKind::Ppm { s: 0.7 },
            MetricKind::Ladmm {
                tau,
                lambda: 1.05 * tau * an * an + 1e-12,
            },
        ];
        for kind in kinds {
            let p = MetricMatrix::new(kind, a.clone()).unwrap();
            for _ in 0..100 {
                let z: Vec<f64> = (0..16).map(|_| rng.random_range(-5.0..5.0)).collect();
                let back = p.solve(&p.apply(&z).unwrap()).unwrap();
                assert!(norm(&sub(&back, &z)) <= 1e-10 * norm(&z), "{kind:?}");
            }
        }
    }

    #[test]
    fn pdhg_eigenvalues_within_bounds_at_default_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Arc::new(random_matrix(&mut rng, 6, 8, 0.5));
        let an = crate::linalg::operator_norm(&a, 1e-13).unwrap();
        let s = 1.0 / (2.0 * an);
        let p = MetricMatrix::new(MetricKind::Pdhg { s }, a).unwrap();
        let eig = p.to_dense().symmetric_eigen();
        for &l in eig.eigenvalues.iter() {
            assert!(l >= 1.0 / (2.0 * s) - 1e-10 && l <= 2.0 / s + 1e-10);
        }
        let b = p.spectral_bounds();
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        assert_relative_eq!(b.lower, lo, max_relative = 1e-9);
        assert_relative_eq!(b.upper, hi, max_relative = 1e-9);
    }

    #[test]
    fn ladmm_bounds_match_dense_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Arc::new(random_matrix(&mut rng, 5, 3, 0.7));
        let an = crate::linalg::operator_norm(&a, 1e-13).unwrap();
        let p = MetricMatrix::new(
            MetricKind::Ladmm {
                tau: 0.3,
                lambda: 2.0 * 0.3 * an * an,
            },
            a,
        )
        .unwrap();
        let eig = p.to_dense().symmetric_eigen();
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let b = p.spectral_bounds();
        assert_relative_eq!(b.lower, lo, max_relative = 1e-9);
        assert_relative_eq!(b.upper, hi, max_relative = 1e-9);
    }

    #[test]
    fn penrose_identity_on_random_admm_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let m = 2 + trial % 5;
            let n = 1 + trial % 7;
            if n + m > 20 {
                continue;
            }
            let a = Arc::new(random_matrix(&mut rng, m, n, 0.6));
            let p = MetricMatrix::new(MetricKind::Admm { tau: rng.random_range(0.2..3.0) }, a).unwrap();
            let dense = p.to_dense();
            let d = p.dim();
            let mut pinv = DMatrix::zeros(d, d);
            for j in 0..d {
                let col = p.pseudo_inverse_apply(&dense.column(j).iter().copied().collect::<Vec<_>>()).unwrap();
                pinv.set_column(j, &DVector::from_column_slice(&col));
            }
            // pinv now holds P⁻P; multiply by P once more
            let ppp = &dense * &pinv;
            let err = (&ppp - &dense).abs().max();
            assert!(err <= 1e-8, "trial {trial}: {err}");
        }
    }
}
