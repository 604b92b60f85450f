//! Infimal sub-differential size: `dist²_{P⁻¹}(0, F(z))`.
//!
//! The projection QP `min_{ω ∈ G(z)} ‖ω + d(z)‖²_{P⁻¹}` is solved by
//! accelerated projected gradient. Semi-definite metrics use the
//! range-restricted variant with the pseudo-inverse.

use crate::error::{Error, Result};
use crate::functions::SubdiffSet;
use crate::linalg::{add, axpy, dot, norm, sub, MetricMatrix, Vector};
use crate::problem::SaddleProblem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgdConfig {
    /// Bound on `‖ω − Proj_G(ω − ∇φ(ω))‖₂`.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Step parameter; defaults to `2·λ_max(P⁻¹)`.
    pub beta: Option<f64>,
    /// Momentum condition number; defaults to `λ_max(P) / λ_min(P)`.
    pub kappa: Option<f64>,
}

impl Default for AgdConfig {
    fn default() -> Self {
        AgdConfig {
            tolerance: 1e-10,
            max_iters: 500,
            beta: None,
            kappa: None,
        }
    }
}

impl AgdConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("AGD tolerance must be > 0, got {}", self.tolerance)));
        }
        if let Some(k) = self.kappa {
            if !(k >= 1.0) {
                return Err(Error::InvalidArgument(format!("κ must be ≥ 1, got {k}")));
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(Error::InvalidArgument(format!("β must be > 0, got {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdsStatus {
    Converged,
    /// AGD hit its iteration cap; `optimality_residual` says how far it got.
    MaxIters,
    /// Range-restricted value taken from a step certificate: an upper bound only.
    UpperBound,
    /// `F(z) ∩ range(P)` is empty for a singleton `G(z)`; the value is `+∞`.
    EmptyIntersection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdsResult {
    pub value: f64,
    /// The minimizing element `ω ∈ G(z)`; the member of `F(z)` is `ω + d(z)`.
    pub witness: Vector,
    pub agd_iters: usize,
    pub optimality_residual: f64,
    pub certificate_value: Option<f64>,
    pub status: IdsStatus,
}

impl IdsResult {
    pub fn converged(&self) -> bool {
        self.status == IdsStatus::Converged
    }
}

fn projected_gradient_residual(set: &SubdiffSet, w: &[f64], h: &[f64]) -> f64 {
    // ∇φ(ω) = 2 P⁻¹(ω + d) = 2h
    let trial: Vector = w.iter().zip(h).map(|(wi, hi)| wi - 2.0 * hi).collect();
    norm(&sub(w, &set.project(&trial)))
}

/// Relative CG tolerance fine enough that solve error stays well below the AGD tolerance.
fn cg_tolerance(metric: &MetricMatrix, rhs_norm: f64, tol: f64) -> f64 {
    let lower = metric.spectral_bounds().lower;
    let h_norm = rhs_norm / lower;
    if h_norm == 0.0 {
        return 1e-12;
    }
    (1e-3 * tol / h_norm).clamp(1e-15, 1e-12)
}

fn metric_solve(metric: &MetricMatrix, v: &[f64], tol: f64) -> Result<Vector> {
    metric.solve_with_tol(v, cg_tolerance(metric, norm(v), tol))
}

/// `dist²_{P⁻¹}(0, F(z))` by accelerated projected gradient from `ω₀ = Proj_G(−d)`.
pub fn ids_evaluate(p: &SaddleProblem, metric: &MetricMatrix, z: &[f64], cfg: &AgdConfig) -> Result<IdsResult> {
    cfg.validate()?;
    if !metric.is_positive_definite() {
        return Err(Error::SemiDefiniteMetric);
    }
    if metric.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: metric.dim(),
        });
    }
    let (d, set) = p.operator_f(z)?;
    let bounds = metric.spectral_bounds();
    let beta = cfg.beta.unwrap_or(2.0 / bounds.lower);
    let kappa = cfg.kappa.unwrap_or(bounds.condition());
    let theta = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let step = 2.0 / beta;

    let neg_d: Vector = d.iter().map(|v| -v).collect();
    let mut w = set.project(&neg_d);
    let mut h = metric_solve(metric, &add(&w, &d), cfg.tolerance)?;
    let mut w_prev = w.clone();
    let mut h_prev = h.clone();
    let mut residual = projected_gradient_residual(&set, &w, &h);
    let mut iters = 0;

    while residual > cfg.tolerance && iters < cfg.max_iters {
        // u = w + θ(w − w_prev); P⁻¹(u + d) is the same combination of cached solves
        let u: Vector = w.iter().zip(&w_prev).map(|(a, b)| a + theta * (a - b)).collect();
        let hu: Vector = h.iter().zip(&h_prev).map(|(a, b)| a + theta * (a - b)).collect();
        let mut trial = u;
        axpy(-step, &hu, &mut trial);
        let w_next = set.project(&trial);
        let h_next = metric_solve(metric, &add(&w_next, &d), cfg.tolerance)?;
        w_prev = std::mem::replace(&mut w, w_next);
        h_prev = std::mem::replace(&mut h, h_next);
        residual = projected_gradient_residual(&set, &w, &h);
        iters += 1;
    }

    let value = dot(&add(&w, &d), &h).max(0.0);
    Ok(IdsResult {
        value,
        witness: w,
        agd_iters: iters,
        optimality_residual: residual,
        certificate_value: None,
        status: if residual <= cfg.tolerance {
            IdsStatus::Converged
        } else {
            IdsStatus::MaxIters
        },
    })
}

/// `‖z_k − z_{k+1}‖²_P`, which equals `‖ω̃‖²_{P⁻¹}` for `ω̃ = P(z_k − z_{k+1})`.
pub fn ids_certificate(metric: &MetricMatrix, z_k: &[f64], z_next: &[f64]) -> Result<f64> {
    if z_k.len() != z_next.len() {
        return Err(Error::DimensionMismatch {
            expected: z_k.len(),
            got: z_next.len(),
        });
    }
    Ok(metric.norm_sq(&sub(z_k, z_next))?.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapCertificate {
    /// `√IDS · ‖z_k − z_ref‖_P`
    pub bound: f64,
    /// `L(x_k, y_ref) − L(x_ref, y_k)` when both values are finite.
    pub gap: Option<f64>,
}

pub fn gap_certificate(
    p: &SaddleProblem,
    metric: &MetricMatrix,
    z_k: &[f64],
    z_ref: &[f64],
    ids_value: f64,
) -> Result<GapCertificate> {
    p.check_dim(z_k)?;
    p.check_dim(z_ref)?;
    let dist = metric.norm_sq(&sub(z_k, z_ref))?.max(0.0).sqrt();
    let bound = ids_value.max(0.0).sqrt() * dist;
    let (xk, yk) = p.split(z_k);
    let (xr, yr) = p.split(z_ref);
    let gap = match (p.lagrangian(xk, yr)?, p.lagrangian(xr, yk)?) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    Ok(GapCertificate { bound, gap })
}

/// Tolerance for `d + g ∈ range(P)` in the singleton case.
pub const RANGE_TOL: f64 = 1e-8;

/// `dist²_{P⁻}(0, F(z) ∩ range(P))` for a semi-definite metric.
///
/// Exact when `G(z)` is a singleton. Otherwise the value is
/// `‖z_k − z_{k+1}‖²_P` from `step_witness = (z_k, z_{k+1})` with `z = z_{k+1}`,
/// and the result is flagged as an upper bound.
pub fn ids_range_restricted(
    p: &SaddleProblem,
    metric: &MetricMatrix,
    z: &[f64],
    step_witness: Option<(&[f64], &[f64])>,
) -> Result<IdsResult> {
    if metric.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: metric.dim(),
        });
    }
    let (d, set) = p.operator_f(z)?;
    if set.is_singleton() {
        let member = add(&d, &set.lo);
        let proj = metric.project_onto_range(&member)?;
        let off = norm(&sub(&member, &proj));
        let certificate_value = match step_witness {
            Some((zk, zn)) => Some(ids_certificate(metric, zk, zn)?),
            None => None,
        };
        if off > RANGE_TOL * (1.0 + norm(&member)) {
            return Ok(IdsResult {
                value: f64::INFINITY,
                witness: set.lo,
                agd_iters: 0,
                optimality_residual: off,
                certificate_value,
                status: IdsStatus::EmptyIntersection,
            });
        }
        let value = dot(&proj, &metric.pseudo_inverse_apply(&proj)?).max(0.0);
        return Ok(IdsResult {
            value,
            witness: set.lo,
            agd_iters: 0,
            optimality_residual: off,
            certificate_value,
            status: IdsStatus::Converged,
        });
    }
    let Some((zk, zn)) = step_witness else {
        return Err(Error::Unsupported(
            "exact range-restricted IDS needs a singleton G(z); pass a step witness for the certificate bound".into(),
        ));
    };
    if zn != z {
        return Err(Error::InvalidArgument("step witness must end at the evaluation point".into()));
    }
    let diff = sub(zk, zn);
    let omega = metric.apply(&diff)?;
    let value = dot(&diff, &omega).max(0.0);
    let witness = sub(&omega, &d);
    let residual = set.distance(&witness);
    Ok(IdsResult {
        value,
        witness,
        agd_iters: 0,
        optimality_residual: residual,
        certificate_value: Some(value),
        status: IdsStatus::UpperBound,
    })
}
