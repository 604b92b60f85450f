//! PDHG, PPM, linearized ADMM and ADMM, each written as
//! `P(z_k − z_{k+1}) ∈ F(z_{k+1})` for its own metric `P`.
//!
//! For the ADMM variants the problem's `f` is the primal function and its
//! `g` holds the conjugate `g*`, so the saddle is `f(v) + ⟨Av, y⟩ − g*(y)`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::functions::{ProxFunction, ProxKind};
use crate::ids::{gap_certificate, ids_certificate, ids_evaluate, ids_range_restricted, AgdConfig};
use crate::linalg::{self, axpy, conjugate_gradient, norm, sub, MetricKind, MetricMatrix, Vector};
use crate::problem::{kkt_residual, subregularity_alpha, SaddleProblem};
use crate::trace::{Algorithm, SolverTrace, TraceHeader, TraceRow};

/// Tolerance on the certificate membership residual.
pub const INCLUSION_TOL: f64 = 1e-8;
/// Tolerance of inner solves (PPM resolvent, ADMM dual subproblem).
pub const INNER_TOL: f64 = 1e-10;
const INNER_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// `s` for PDHG/PPM, `τ` for the ADMM variants. Defaults per algorithm when absent.
    pub step_size: Option<f64>,
    /// `λ` for linearized ADMM.
    pub lambda: Option<f64>,
    pub max_iters: usize,
    pub ids_every: usize,
    pub inclusion_audit: bool,
    pub seed: u64,
    pub agd: AgdConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Pdhg,
            step_size: None,
            lambda: None,
            max_iters: 1000,
            ids_every: 1,
            inclusion_audit: true,
            seed: 0,
            agd: AgdConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            ..Default::default()
        }
    }

    /// Resolves step sizes against `‖A‖` and builds the algorithm metric.
    ///
    /// Defaults: `s = 1/(2‖A‖)` for PDHG and PPM, `τ = 1/(2‖A‖)` with
    /// `λ = 1.05·τ‖A‖² + 1e−12` for linearized ADMM, `τ = 1` for ADMM.
    pub fn metric(&self, p: &SaddleProblem) -> Result<MetricMatrix> {
        let a_norm = p.operator_norm()?;
        let half_inv = if a_norm > 0.0 { 0.5 / a_norm } else { 1.0 };
        let kind = match self.algorithm {
            Algorithm::Pdhg => MetricKind::Pdhg {
                s: self.step_size.unwrap_or(half_inv),
            },
            Algorithm::Ppm => MetricKind::Ppm {
                s: self.step_size.unwrap_or(half_inv),
            },
            Algorithm::Ladmm => {
                let tau = self.step_size.unwrap_or(half_inv);
                MetricKind::Ladmm {
                    tau,
                    lambda: self.lambda.unwrap_or(1.05 * tau * a_norm * a_norm + 1e-12),
                }
            }
            Algorithm::Admm => MetricKind::Admm {
                tau: self.step_size.unwrap_or(1.0),
            },
        };
        MetricMatrix::with_operator_norm(kind, p.a_shared(), a_norm)
    }

    fn validate(&self) -> Result<()> {
        if self.ids_every == 0 {
            return Err(Error::InvalidArgument("ids_every must be ≥ 1".into()));
        }
        if self.lambda.is_some() && self.algorithm != Algorithm::Ladmm {
            return Err(Error::InvalidArgument("lambda only applies to ladmm".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    /// `(x, y)` for PDHG/PPM, `(v, y)` for the ADMM variants.
    pub z: Vector,
    /// `w_k` of the ADMM variants.
    pub w: Option<Vector>,
    pub k: usize,
    pub last_inclusion_residual: Option<f64>,
}

impl SolverState {
    pub fn new(z: Vector) -> Self {
        SolverState {
            z,
            w: None,
            k: 0,
            last_inclusion_residual: None,
        }
    }
}

fn check_step(p: &SaddleProblem, s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::StepSize(format!("s > 0 (got {s})")));
    }
    let a_norm = p.operator_norm()?;
    if s * a_norm >= 1.0 {
        return Err(Error::StepSize(format!("s·‖A‖ < 1 (s = {s}, ‖A‖ = {a_norm})")));
    }
    Ok(())
}

fn check_point(p: &SaddleProblem, z: &[f64]) -> Result<()> {
    p.check_dim(z)?;
    linalg::ensure_finite(z, "iterate")
}

/// One PDHG step: `x⁺ = prox_f^s(x − sAᵀy)`, `y⁺ = prox_g^s(y + sA(2x⁺ − x))`.
pub fn pdhg_step(p: &SaddleProblem, s: f64, z: &[f64]) -> Result<Vector> {
    check_step(p, s)?;
    check_point(p, z)?;
    Ok(pdhg_update(p, p.f(), p.g(), s, s, z))
}

/// PDHG with separate primal and dual steps and explicit functions.
fn pdhg_update(p: &SaddleProblem, f: &ProxFunction, g: &ProxFunction, s: f64, t: f64, z: &[f64]) -> Vector {
    let (x, y) = p.split(z);
    let a = p.a();
    let mut xt = x.to_vec();
    axpy(-s, &a.mul_transpose_vec(y), &mut xt);
    let x_next = f.prox(s, &xt).expect("dimensions checked");
    let extrap: Vector = x_next.iter().zip(x).map(|(n, o)| 2.0 * n - o).collect();
    let mut yt = y.to_vec();
    axpy(t, &a.mul_vec(&extrap), &mut yt);
    let y_next = g.prox(t, &yt).expect("dimensions checked");
    linalg::concat(&x_next, &y_next)
}

/// `(μ, b)` of a side whose subdifferential is `μ·u + b`.
fn affine_side(h: &ProxFunction) -> Option<(f64, Vector)> {
    match h.kind() {
        ProxKind::Zero => Some((0.0, vec![0.0; h.dim()])),
        ProxKind::Linear(c) => Some((0.0, c.clone())),
        ProxKind::HalfSqNorm { weight, shift } => Some((*weight, shift.clone())),
        _ => None,
    }
}

/// One proximal point step, the resolvent `z⁺ = (I + sF)⁻¹ z`.
///
/// Affine `F` is solved directly through the Schur complement on `x`; other
/// problems run an inner PDHG on the regularized subproblem until
/// `(z − z⁺)/s ∈ F(z⁺)` holds to [`INNER_TOL`].
pub fn ppm_step(p: &SaddleProblem, s: f64, z: &[f64]) -> Result<Vector> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::StepSize(format!("s > 0 (got {s})")));
    }
    check_point(p, z)?;
    match (affine_side(p.f()), affine_side(p.g())) {
        (Some(fs), Some(gs)) => ppm_affine(p, s, z, fs, gs),
        _ => ppm_inner(p, s, z),
    }
}

fn ppm_affine(p: &SaddleProblem, s: f64, z: &[f64], (mf, bf): (f64, Vector), (mg, bg): (f64, Vector)) -> Result<Vector> {
    let (x, y) = p.split(z);
    let a = p.a();
    let rx: Vector = x.iter().zip(&bf).map(|(xi, b)| xi - s * b).collect();
    let ry: Vector = y.iter().zip(&bg).map(|(yi, b)| yi - s * b).collect();
    let dy = 1.0 + s * mg;
    let dx = 1.0 + s * mf;
    let coef = s * s / dy;
    let mut rhs = rx;
    axpy(-s / dy, &a.mul_transpose_vec(&ry), &mut rhs);
    let mut tmp = vec![0.0; p.m()];
    let apply = |v: &[f64], out: &mut [f64]| {
        let mut t = vec![0.0; a.rows()];
        a.mul_vec_into(v, &mut t);
        a.mul_transpose_vec_into(&t, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = dx * vi + coef * *o;
        }
    };
    let (x_next, _) = conjugate_gradient(apply, &rhs, 1e-14, 10_000)?;
    a.mul_vec_into(&x_next, &mut tmp);
    let y_next: Vector = ry.iter().zip(&tmp).map(|(r, ax)| (r + s * ax) / dy).collect();
    Ok(linalg::concat(&x_next, &y_next))
}

/// `prox` of `h + ‖· − center‖²/(2s)` with parameter `t`.
fn regularized_prox(h: &ProxFunction, center: &[f64], s: f64, t: f64, v: &[f64]) -> Vector {
    let mix: Vector = center.iter().zip(v).map(|(c, vi)| (t * c + s * vi) / (s + t)).collect();
    h.prox(s * t / (s + t), &mix).expect("dimensions checked")
}

fn ppm_inner(p: &SaddleProblem, s: f64, z: &[f64]) -> Result<Vector> {
    let a_norm = p.operator_norm()?;
    let t = if a_norm > 0.0 { 0.5 / a_norm } else { s };
    let (xc, yc) = p.split(z);
    let mut cur = z.to_vec();
    let tol = INNER_TOL.max(1e-14 * (1.0 + norm(z) / s));
    for _ in 0..INNER_CAP {
        let (x, y) = p.split(&cur);
        let a = p.a();
        let mut xt = x.to_vec();
        axpy(-t, &a.mul_transpose_vec(y), &mut xt);
        let x_next = regularized_prox(p.f(), xc, s, t, &xt);
        let extrap: Vector = x_next.iter().zip(x).map(|(n, o)| 2.0 * n - o).collect();
        let mut yt = y.to_vec();
        axpy(t, &a.mul_vec(&extrap), &mut yt);
        let y_next = regularized_prox(p.g(), yc, s, t, &yt);
        cur = linalg::concat(&x_next, &y_next);
        let w: Vector = sub(z, &cur).iter().map(|v| v / s).collect();
        if p.membership_residual(&cur, &w)? <= tol {
            return Ok(cur);
        }
    }
    Err(Error::InnerSolve(format!("PPM resolvent not within {INNER_TOL:e} after {INNER_CAP} PDHG steps")))
}

fn check_ladmm(p: &SaddleProblem, tau: f64, lambda: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite() && lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::StepSize(format!("τ, λ > 0 (got τ = {tau}, λ = {lambda})")));
    }
    let a_norm = p.operator_norm()?;
    if lambda <= tau * a_norm * a_norm {
        return Err(Error::StepSize(format!("λ > τ‖A‖² (λ = {lambda}, τ = {tau}, ‖A‖ = {a_norm})")));
    }
    Ok(())
}

fn admm_w(state: &SolverState, n: usize) -> Vector {
    state.w.clone().unwrap_or_else(|| vec![0.0; n])
}

/// Output of [`ladmm_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct LadmmStep {
    pub state: SolverState,
    /// Largest deviation between the line-by-line updates (through `f*`)
    /// and the prox forms; absent when `f` has no catalogue conjugate.
    pub raw_discrepancy: Option<f64>,
}

/// Tolerance for the line-by-line versus prox-form cross-check.
pub const LADMM_CROSS_TOL: f64 = 1e-10;

/// Linearized ADMM: `v⁺ = prox_f^τ(v − τAᵀy)`,
/// `y⁺ = prox_{g*}^{1/λ}(y + (1/λ)A(2v⁺ − v))`, `w⁺ = (v − τAᵀy − v⁺)/τ`.
pub fn ladmm_step(p: &SaddleProblem, tau: f64, lambda: f64, state: &SolverState) -> Result<LadmmStep> {
    check_ladmm(p, tau, lambda)?;
    check_point(p, &state.z)?;
    let (v, y) = p.split(&state.z);
    let a = p.a();
    let mut t = v.to_vec();
    axpy(-tau, &a.mul_transpose_vec(y), &mut t);
    let v_next = p.f().prox(tau, &t)?;
    let w_next: Vector = t.iter().zip(&v_next).map(|(ti, vi)| (ti - vi) / tau).collect();
    let extrap: Vector = v_next.iter().zip(v).map(|(n, o)| 2.0 * n - o).collect();
    let mut yt = y.to_vec();
    axpy(1.0 / lambda, &a.mul_vec(&extrap), &mut yt);
    let y_next = p.g().prox(1.0 / lambda, &yt)?;
    let next = SolverState {
        z: linalg::concat(&v_next, &y_next),
        w: Some(w_next),
        k: state.k + 1,
        last_inclusion_residual: None,
    };
    let raw_discrepancy = match ladmm_step_raw(p, tau, lambda, state) {
        Ok(raw) => {
            let dz = linalg::max_abs_diff(&raw.z, &next.z);
            let dw = linalg::max_abs_diff(raw.w.as_deref().unwrap_or(&[]), next.w.as_deref().unwrap_or(&[]));
            Some(dz.max(dw))
        }
        Err(Error::UnsupportedConjugate { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(d) = raw_discrepancy {
        let scale = 1.0 + norm(&state.z) + norm(&next.z);
        if d > LADMM_CROSS_TOL * scale {
            return Err(Error::InnerSolve(format!(
                "linearized ADMM prox form disagrees with the line-by-line update by {d:e}"
            )));
        }
    }
    Ok(LadmmStep { state: next, raw_discrepancy })
}

/// Linearized ADMM exactly as written with `f*` and `g*`:
/// `w⁺ = argmin f*(w) − ⟨w, v − τ(Aᵀy + w_k)⟩ + (τ/2)‖w − w_k‖²`,
/// `v⁺ = v − τ(Aᵀy + w⁺)`,
/// `y⁺ = argmin g*(y) − ⟨Aᵀy, v⁺ − τ(Aᵀy_k + w⁺)⟩ + (λ/2)‖y − y_k‖²`.
pub fn ladmm_step_raw(p: &SaddleProblem, tau: f64, lambda: f64, state: &SolverState) -> Result<SolverState> {
    check_ladmm(p, tau, lambda)?;
    check_point(p, &state.z)?;
    let f_conj = p.f().conjugate()?;
    let (v, y) = p.split(&state.z);
    let a = p.a();
    let w = admm_w(state, p.n());
    let aty = a.mul_transpose_vec(y);
    // completing the square: argmin f*(w) + (τ/2)‖w − (v − τAᵀy − τw_k)/τ − w_k‖²
    let center: Vector = (0..p.n())
        .map(|i| (v[i] - tau * (aty[i] + w[i])) / tau + w[i])
        .collect();
    let w_next = f_conj.prox(1.0 / tau, &center)?;
    let v_next: Vector = (0..p.n()).map(|i| v[i] - tau * (aty[i] + w_next[i])).collect();
    let inner: Vector = (0..p.n()).map(|i| v_next[i] - tau * (aty[i] + w_next[i])).collect();
    let mut yt = y.to_vec();
    axpy(1.0 / lambda, &a.mul_vec(&inner), &mut yt);
    let y_next = p.g().prox(1.0 / lambda, &yt)?;
    Ok(SolverState {
        z: linalg::concat(&v_next, &y_next),
        w: Some(w_next),
        k: state.k + 1,
        last_inclusion_residual: None,
    })
}

/// ADMM: the `v`-update of linearized ADMM, then
/// `y⁺ = argmin g*(y) + (τ/2)‖Aᵀy + w⁺ − v⁺/τ‖²`.
///
/// The `y` subproblem is a linear solve when `g*` is zero, linear or a
/// scaled square norm, and an accelerated proximal gradient loop otherwise.
pub fn admm_step(p: &SaddleProblem, tau: f64, state: &SolverState) -> Result<SolverState> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::StepSize(format!("τ > 0 (got {tau})")));
    }
    check_point(p, &state.z)?;
    let (v, y) = p.split(&state.z);
    let a = p.a();
    let mut t = v.to_vec();
    axpy(-tau, &a.mul_transpose_vec(y), &mut t);
    let v_next = p.f().prox(tau, &t)?;
    let w_next: Vector = t.iter().zip(&v_next).map(|(ti, vi)| (ti - vi) / tau).collect();
    let r: Vector = v_next.iter().zip(&w_next).map(|(vi, wi)| vi / tau - wi).collect();
    let y_next = admm_dual_solve(p, tau, &r, y)?;
    Ok(SolverState {
        z: linalg::concat(&v_next, &y_next),
        w: Some(w_next),
        k: state.k + 1,
        last_inclusion_residual: None,
    })
}

/// `argmin_y g*(y) + (τ/2)‖Aᵀy − r‖²`, warm-started at `y0`.
pub fn admm_dual_solve(p: &SaddleProblem, tau: f64, r: &[f64], y0: &[f64]) -> Result<Vector> {
    let a = p.a();
    let ar = a.mul_vec(r);
    if let Some((mu, b)) = affine_side(p.g()) {
        // (μI + τAAᵀ) y = τAr − b
        let rhs: Vector = ar.iter().zip(&b).map(|(x, bi)| tau * x - bi).collect();
        let apply = |u: &[f64], out: &mut [f64]| {
            let atu = a.mul_transpose_vec(u);
            a.mul_vec_into(&atu, out);
            for (o, ui) in out.iter_mut().zip(u) {
                *o = tau * *o + mu * ui;
            }
        };
        return conjugate_gradient(apply, &rhs, 1e-14, 10_000)
            .map(|(y, _)| y)
            .map_err(|e| Error::InnerSolve(format!("ADMM dual system: {e}")));
    }
    let a_norm = p.operator_norm()?;
    let lip = tau * a_norm * a_norm;
    if lip == 0.0 {
        return Err(Error::InnerSolve("ADMM dual subproblem with A = 0 is unbounded".into()));
    }
    let grad = |u: &[f64]| -> Vector {
        let atu = a.mul_transpose_vec(u);
        let res = sub(&atu, r);
        let mut g = a.mul_vec(&res);
        g.iter_mut().for_each(|x| *x *= tau);
        g
    };
    let scale = 1.0 + tau * norm(&ar);
    let mut x = y0.to_vec();
    let mut u = x.clone();
    let mut theta: f64 = 1.0;
    for _ in 0..INNER_CAP {
        let gu = grad(&u);
        let mut trial = u.clone();
        axpy(-1.0 / lip, &gu, &mut trial);
        let x_next = p.g().prox(1.0 / lip, &trial)?;
        // L(u − x⁺) + ∇h(x⁺) − ∇h(u) ∈ ∂g*(x⁺) + ∇h(x⁺)
        let gx = grad(&x_next);
        let opt: Vector = (0..x.len()).map(|i| lip * (u[i] - x_next[i]) + gx[i] - gu[i]).collect();
        if norm(&opt) <= 1e-2 * INNER_TOL * scale {
            return Ok(x_next);
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let restart = linalg::dot(&sub(&u, &x_next), &sub(&x_next, &x)) > 0.0;
        if restart {
            theta = 1.0;
            u = x_next.clone();
        } else {
            let mom = (theta - 1.0) / theta_next;
            u = (0..x.len()).map(|i| x_next[i] + mom * (x_next[i] - x[i])).collect();
            theta = theta_next;
        }
        x = x_next;
    }
    Err(Error::InnerSolve(format!("ADMM dual subproblem not within {INNER_TOL:e}")))
}

/// Euclidean distance from `P(z_k − z_{k+1})` to `F(z_{k+1})`.
pub fn inclusion_residual(p: &SaddleProblem, metric: &MetricMatrix, z_k: &[f64], z_next: &[f64]) -> Result<f64> {
    let omega = metric.apply(&sub(z_k, z_next))?;
    p.membership_residual(z_next, &omega)
}

/// A problem bound to an algorithm and its metric.
pub struct Solver<'a> {
    problem: &'a SaddleProblem,
    metric: MetricMatrix,
    algorithm: Algorithm,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a SaddleProblem, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let metric = cfg.metric(problem)?;
        Ok(Solver {
            problem,
            metric,
            algorithm: cfg.algorithm,
        })
    }

    pub fn metric(&self) -> &MetricMatrix {
        &self.metric
    }

    pub fn problem(&self) -> &SaddleProblem {
        self.problem
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// One step; does not touch `last_inclusion_residual`.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        let p = self.problem;
        match self.metric.kind() {
            MetricKind::Pdhg { s } => {
                check_point(p, &state.z)?;
                Ok(SolverState {
                    z: pdhg_update(p, p.f(), p.g(), s, s, &state.z),
                    w: None,
                    k: state.k + 1,
                    last_inclusion_residual: None,
                })
            }
            MetricKind::Ppm { s } => Ok(SolverState {
                z: ppm_step(p, s, &state.z)?,
                w: None,
                k: state.k + 1,
                last_inclusion_residual: None,
            }),
            MetricKind::Ladmm { tau, lambda } => Ok(ladmm_step(p, tau, lambda, state)?.state),
            MetricKind::Admm { tau } => admm_step(p, tau, state),
        }
    }

    /// Steps and records the certificate residual.
    pub fn audited_step(&self, state: &SolverState) -> Result<SolverState> {
        let mut next = self.step(state)?;
        next.last_inclusion_residual = Some(inclusion_residual(self.problem, &self.metric, &state.z, &next.z)?);
        Ok(next)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: SolverTrace,
    pub final_state: SolverState,
}

pub fn run(p: &SaddleProblem, cfg: &SolverConfig, z0: &[f64]) -> Result<RunOutput> {
    run_with(p, cfg, z0, "unnamed", |_, _, _| Ok(()))
}

/// Runs `cfg.max_iters` steps from `z0`, instrumenting `k = 0` and every
/// `ids_every`-th iterate. `on_row` sees the header and each row with its
/// iterate as it is produced.
pub fn run_with<F>(p: &SaddleProblem, cfg: &SolverConfig, z0: &[f64], instance: &str, mut on_row: F) -> Result<RunOutput>
where
    F: FnMut(&TraceHeader, &TraceRow, &[f64]) -> Result<()>,
{
    let solver = Solver::new(p, cfg)?;
    check_point(p, z0)?;
    let metric = solver.metric();
    let (alpha, provenance) = match metric.kind() {
        MetricKind::Pdhg { s } => {
            let cert = subregularity_alpha(p, s);
            (cert.alpha, cert.alpha.map(|_| cert.provenance))
        }
        _ => (None, None),
    };
    let header = TraceHeader {
        instance: instance.to_string(),
        algorithm: cfg.algorithm,
        metric: metric.kind(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        ids_every: cfg.ids_every,
        max_iters: cfg.max_iters,
        alpha,
        provenance,
        dist0_sq: match p.z_star() {
            Some(zs) => Some(metric.norm_sq(&sub(z0, zs))?),
            None => None,
        },
    };
    let lp = p.as_lp();
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cfg.max_iters / cfg.ids_every + 1);

    let mut state = SolverState::new(z0.to_vec());
    let mut prev_z: Option<Vector> = None;
    let mut worst_inclusion: Option<f64> = None;

    loop {
        if state.k.is_multiple_of(cfg.ids_every) {
            let z = &state.z;
            let ids = if metric.is_positive_definite() {
                Some(ids_evaluate(p, metric, z, &cfg.agd)?)
            } else {
                match ids_range_restricted(p, metric, z, prev_z.as_deref().map(|zp| (zp, &z[..]))) {
                    Ok(r) => Some(r),
                    Err(Error::Unsupported(_)) => None,
                    Err(e) => return Err(e),
                }
            };
            let ids_value = ids.as_ref().map(|r| r.value).filter(|v| v.is_finite());
            let certificate = match &prev_z {
                Some(zp) => Some(ids_certificate(metric, zp, z)?),
                None => None,
            };
            let kkt = match &lp {
                Some(lp) => {
                    let (x, y) = p.split(z);
                    Some(kkt_residual(lp, x, y)?.powi(2))
                }
                None => None,
            };
            let gap_bound = match (p.z_star(), ids_value) {
                (Some(zs), Some(v)) => Some(gap_certificate(p, metric, z, zs, v)?.bound),
                _ => None,
            };
            let row = TraceRow {
                k: state.k,
                ids: ids_value,
                ids_certificate: certificate,
                kkt_residual_sq: kkt,
                gap_bound,
                inclusion_residual: worst_inclusion.take(),
                agd_iters: ids.as_ref().map(|r| r.agd_iters),
                elapsed_ns: start.elapsed().as_nanos() as u64,
            };
            on_row(&header, &row, z)?;
            rows.push(row);
        }
        if state.k >= cfg.max_iters {
            break;
        }
        let next = if cfg.inclusion_audit {
            solver.audited_step(&state)?
        } else {
            solver.step(&state)?
        };
        if let Some(r) = next.last_inclusion_residual {
            worst_inclusion = Some(worst_inclusion.map_or(r, |w: f64| w.max(r)));
        }
        prev_z = Some(std::mem::replace(&mut state, next).z);
    }

    Ok(RunOutput {
        trace: SolverTrace { header, rows },
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use approx::assert_relative_eq;

    fn xy() -> SaddleProblem {
        SaddleProblem::new(ProxFunction::zero(1), ProxFunction::zero(1), SparseMatrix::diag(&[1.0]).unwrap())
            .unwrap()
            .with_z_star(vec![0.0, 0.0])
            .unwrap()
    }

    #[test]
    fn pdhg_hand_trace() {
        let p = xy();
        let z1 = pdhg_step(&p, 0.5, &[1.0, 0.0]).unwrap();
        assert_eq!(z1, vec![1.0, 0.5]);
        let z2 = pdhg_step(&p, 0.5, &z1).unwrap();
        assert_eq!(z2, vec![0.75, 0.75]);
        assert_eq!(pdhg_step(&p, 0.5, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn pdhg_rejects_large_steps() {
        assert!(matches!(pdhg_step(&xy(), 1.0, &[1.0, 0.0]), Err(Error::StepSize(_))));
    }

    #[test]
    fn ppm_closed_form() {
        let p = xy();
        let z1 = ppm_step(&p, 0.5, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(z1[0], 0.8, max_relative = 1e-13);
        assert_relative_eq!(z1[1], 0.4, max_relative = 1e-13);
        assert_eq!(ppm_step(&p, 0.5, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn ppm_inner_path_satisfies_the_resolvent() {
        let f = ProxFunction::new(ProxKind::L1 { weight: 0.3 }, 2).unwrap();
        let g = ProxFunction::new(ProxKind::IndicatorLinfBall { radius: 0.7 }, 1).unwrap();
        let p = SaddleProblem::new(f, g, SparseMatrix::from_dense_rows(&[vec![1.0, -2.0]]).unwrap()).unwrap();
        let s = 0.4;
        let z = [1.0, -0.5, 0.2];
        let z1 = ppm_step(&p, s, &z).unwrap();
        let w: Vec<f64> = sub(&z, &z1).iter().map(|v| v / s).collect();
        assert!(p.membership_residual(&z1, &w).unwrap() <= 1e-10 * 10.0);
    }

    #[test]
    fn run_records_hand_trace() {
        let cfg = SolverConfig {
            step_size: Some(0.5),
            max_iters: 2,
            ..SolverConfig::new(Algorithm::Pdhg)
        };
        let out = run(&xy(), &cfg, &[1.0, 0.0]).unwrap();
        let ids: Vec<f64> = out.trace.rows.iter().map(|r| r.ids.unwrap()).collect();
        assert_eq!(ids.len(), 3);
        for (got, want) in ids.iter().zip([2.0 / 3.0, 0.5, 0.375]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        assert_eq!(out.final_state.z, vec![0.75, 0.75]);
        assert_eq!(out.trace.rows[0].ids_certificate, None);
        assert_relative_eq!(out.trace.rows[1].ids_certificate.unwrap(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn run_row_counts() {
        let cfg = SolverConfig {
            max_iters: 0,
            ..SolverConfig::new(Algorithm::Pdhg)
        };
        assert_eq!(run(&xy(), &cfg, &[1.0, 0.0]).unwrap().trace.rows.len(), 1);
        let cfg = SolverConfig {
            max_iters: 100,
            ids_every: 10,
            ..SolverConfig::new(Algorithm::Pdhg)
        };
        let rows = run(&xy(), &cfg, &[1.0, 0.0]).unwrap().trace.rows;
        assert_eq!(rows.len(), 11);
        assert_eq!(rows.last().unwrap().k, 100);
    }

    #[test]
    fn default_steps() {
        let p = SaddleProblem::new(ProxFunction::zero(2), ProxFunction::zero(2), SparseMatrix::diag(&[1.0, 2.0]).unwrap())
            .unwrap();
        let m = SolverConfig::new(Algorithm::Pdhg).metric(&p).unwrap();
        match m.kind() {
            MetricKind::Pdhg { s } => assert_relative_eq!(s, 0.25, max_relative = 1e-12),
            k => panic!("{k:?}"),
        }
        match SolverConfig::new(Algorithm::Ladmm).metric(&p).unwrap().kind() {
            MetricKind::Ladmm { tau, lambda } => {
                assert_relative_eq!(tau, 0.25, max_relative = 1e-12);
                assert_relative_eq!(lambda, 1.05 * 0.25 * 4.0 + 1e-12, max_relative = 1e-12);
            }
            k => panic!("{k:?}"),
        }
        assert_eq!(SolverConfig::new(Algorithm::Admm).metric(&p).unwrap().kind(), MetricKind::Admm { tau: 1.0 });
    }
}
