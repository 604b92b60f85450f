//! Deterministic instance generators: bilinear and strongly convex examples,
//! the two tightness constructions and random LPs with a planted optimum.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functions::{ProxFunction, ProxKind};
use crate::ids::{ids_evaluate, AgdConfig};
use crate::linalg::{self, MetricKind, MetricMatrix, SparseMatrix, Vector};
use crate::problem::{lp_to_saddle, subregularity_alpha, LpInstance, SaddleProblem, SubregularityCert};

const LP_RETRIES: usize = 100;

/// `k ↦ (1/12)(1 − 4α²)^k · IDS(z₀)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearEnvelope {
    pub alpha: f64,
    pub ids0: f64,
}

impl LinearEnvelope {
    pub fn at(&self, k: usize) -> f64 {
        (1.0 - 4.0 * self.alpha * self.alpha).powf(k as f64) * self.ids0 / 12.0
    }
}

/// `k ↦ C · ‖z₀ − z_star‖²_P / k` with `C = 1/(48c²e^{4/c²})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SublinearEnvelope {
    pub constant: f64,
    pub dist0_sq: f64,
    pub k_target: usize,
}

impl SublinearEnvelope {
    pub fn constant_for(c_factor: f64) -> f64 {
        1.0 / (48.0 * c_factor * c_factor * (4.0 / (c_factor * c_factor)).exp())
    }

    pub fn at(&self, k: usize) -> f64 {
        self.constant * self.dist0_sq / k as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceKind {
    Bilinear,
    TightnessLinear { sigma: Vector, s: f64, envelope: LinearEnvelope },
    TightnessSublinear { k_target: usize, c_factor: f64, l_a: f64, s: f64, envelope: SublinearEnvelope },
    StronglyConvex { mu: f64 },
    RandomLp { n: usize, m: usize, density: f64, seed: u64, lp: LpInstance },
    /// Read from a problem file.
    Loaded { source: String },
}

impl InstanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceKind::Bilinear => "bilinear",
            InstanceKind::TightnessLinear { .. } => "tightness_linear",
            InstanceKind::TightnessSublinear { .. } => "tightness_sublinear",
            InstanceKind::StronglyConvex { .. } => "strongly_convex",
            InstanceKind::RandomLp { .. } => "random_lp",
            InstanceKind::Loaded { .. } => "loaded",
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub problem: SaddleProblem,
    pub z0: Vector,
    /// Step size the construction is tied to, or `1/(2‖A‖)`.
    pub step_size: f64,
}

impl InstanceSpec {
    /// Wraps a problem read from `source`; `z0` defaults to the all-ones vector.
    pub fn loaded(problem: SaddleProblem, z0: Option<Vector>, source: &str) -> Result<Self> {
        let z0 = z0.unwrap_or_else(|| vec![1.0; problem.dim()]);
        problem.check_dim(&z0)?;
        let kind = InstanceKind::Loaded {
            source: source.to_string(),
        };
        InstanceSpec::new(kind, problem, z0, None)
    }

    fn new(kind: InstanceKind, problem: SaddleProblem, z0: Vector, step_size: Option<f64>) -> Result<Self> {
        let step_size = match step_size {
            Some(s) => s,
            None => default_step(&problem)?,
        };
        Ok(InstanceSpec {
            kind,
            problem,
            z0,
            step_size,
        })
    }

    pub fn z_star(&self) -> Option<&[f64]> {
        self.problem.z_star()
    }

    /// Sub-regularity data for PDHG with step `s`.
    pub fn subregularity(&self, s: f64) -> Result<SubregularityCert> {
        let cert = subregularity_alpha(&self.problem, s);
        match self.problem.z_star() {
            Some(zs) => {
                let metric = pdhg_metric(&self.problem, s)?;
                let d = metric.norm_sq(&linalg::sub(&self.z0, zs))?.sqrt();
                Ok(cert.with_start(&self.z0, zs, d))
            }
            None => Ok(cert),
        }
    }

    pub fn description(&self) -> String {
        match &self.kind {
            InstanceKind::Bilinear => format!("bilinear n={} m={}", self.problem.n(), self.problem.m()),
            InstanceKind::TightnessLinear { sigma, s, .. } => format!("tightness_linear m={} s={s}", sigma.len()),
            InstanceKind::TightnessSublinear { k_target, c_factor, l_a, .. } => {
                format!("tightness_sublinear k_target={k_target} c={c_factor} L_A={l_a}")
            }
            InstanceKind::StronglyConvex { mu } => format!("strongly_convex mu={mu}"),
            InstanceKind::RandomLp { n, m, density, seed, .. } => {
                format!("random_lp n={n} m={m} density={density} seed={seed}")
            }
            InstanceKind::Loaded { source } => format!("file {source}"),
        }
    }
}

fn default_step(p: &SaddleProblem) -> Result<f64> {
    let a = p.operator_norm()?;
    Ok(if a > 0.0 { 0.5 / a } else { 1.0 })
}

fn pdhg_metric(p: &SaddleProblem, s: f64) -> Result<MetricMatrix> {
    MetricMatrix::with_operator_norm(MetricKind::Pdhg { s }, p.a_shared(), p.operator_norm()?)
}

/// `min_x max_y cᵀx + yᵀAx − bᵀy` with the minimum-norm saddle point.
pub fn gen_bilinear(c: Vector, b: Vector, a: SparseMatrix) -> Result<InstanceSpec> {
    if c.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: c.len(),
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    let dense = a.to_dense();
    let x = linalg::dense_min_norm_solve(&dense, &b)?;
    let neg_c: Vector = c.iter().map(|v| -v).collect();
    let y = linalg::dense_min_norm_solve(&dense.transpose(), &neg_c)?;
    let n = a.cols();
    let m = a.rows();
    let f = ProxFunction::new(ProxKind::Linear(c), n)?;
    let g = ProxFunction::new(ProxKind::Linear(b), m)?;
    let problem = SaddleProblem::new(f, g, a)?.with_z_star(linalg::concat(&x, &y))?;
    InstanceSpec::new(InstanceKind::Bilinear, problem, vec![1.0; n + m], None)
}

fn unit(dim: usize) -> Vector {
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    e
}

fn diagonal_zero_problem(sigma: &[f64]) -> Result<SaddleProblem> {
    let m = sigma.len();
    SaddleProblem::new(ProxFunction::zero(m), ProxFunction::zero(m), SparseMatrix::diag(sigma)?)?
        .with_z_star(vec![0.0; 2 * m])
}

/// `f = g = 0`, `A = diag(σ)`, `z₀ = e₁`, with the linear lower envelope for PDHG at step `s`.
pub fn gen_tightness_linear(sigma: &[f64], s: f64) -> Result<InstanceSpec> {
    if sigma.is_empty() {
        return Err(Error::InvalidArgument("σ must be nonempty".into()));
    }
    if !(sigma[0] > 0.0) || sigma.windows(2).any(|w| !(w[0] <= w[1])) || !sigma.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("σ must satisfy 0 < σ₁ ≤ … ≤ σ_m".into()));
    }
    let top = sigma[sigma.len() - 1];
    if !(s > 0.0) || 2.0 * s * top > 1.0 + 1e-15 {
        return Err(Error::StepSize(format!("0 < s ≤ 1/(2σ_m) (s = {s}, σ_m = {top})")));
    }
    let problem = diagonal_zero_problem(sigma)?;
    let z0 = unit(2 * sigma.len());
    let metric = pdhg_metric(&problem, s)?;
    let ids0 = ids_evaluate(&problem, &metric, &z0, &AgdConfig::default())?.value;
    let envelope = LinearEnvelope {
        alpha: 0.5 * s * sigma[0],
        ids0,
    };
    let kind = InstanceKind::TightnessLinear {
        sigma: sigma.to_vec(),
        s,
        envelope,
    };
    InstanceSpec::new(kind, problem, z0, Some(s))
}

/// `σ₁ = L_A/√k_target`, `σ₂ = … = σ_m = L_A`, `s = 1/(c·L_A)`, `z₀ = e₁`.
pub fn gen_tightness_sublinear(k_target: usize, c_factor: f64, l_a: f64, m: usize) -> Result<InstanceSpec> {
    if k_target == 0 {
        return Err(Error::InvalidArgument("k_target ≥ 1".into()));
    }
    if m < 2 {
        return Err(Error::InvalidArgument("m ≥ 2 (the σ = L_A block needs a second coordinate)".into()));
    }
    if !(c_factor >= 2.0 && c_factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("c ≥ 2 (got {c_factor})")));
    }
    if !(l_a > 0.0 && l_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("L_A > 0 (got {l_a})")));
    }
    let mut sigma = vec![l_a; m];
    sigma[0] = l_a / (k_target as f64).sqrt();
    let s = 1.0 / (c_factor * l_a);
    let problem = diagonal_zero_problem(&sigma)?;
    let z0 = unit(2 * m);
    let dist0_sq = pdhg_metric(&problem, s)?.norm_sq(&z0)?;
    let envelope = SublinearEnvelope {
        constant: SublinearEnvelope::constant_for(c_factor),
        dist0_sq,
        k_target,
    };
    let kind = InstanceKind::TightnessSublinear {
        k_target,
        c_factor,
        l_a,
        s,
        envelope,
    };
    InstanceSpec::new(kind, problem, z0, Some(s))
}

/// `f = g = (μ/2)‖·‖²` coupled by `A`; the saddle point is the origin.
pub fn gen_strongly_convex(mu: f64, a: SparseMatrix) -> Result<InstanceSpec> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("μ > 0 (got {mu})")));
    }
    let (n, m) = (a.cols(), a.rows());
    let sq = |d: usize| {
        ProxFunction::new(
            ProxKind::HalfSqNorm {
                weight: mu,
                shift: vec![0.0; d],
            },
            d,
        )
    };
    let problem = SaddleProblem::new(sq(n)?, sq(m)?, a)?.with_z_star(vec![0.0; n + m])?;
    InstanceSpec::new(InstanceKind::StronglyConvex { mu }, problem, vec![1.0; n + m], None)
}

/// Standard-form LP `min cᵀx, Ax = b, x ≥ 0` with a planted primal-dual optimum.
///
/// Entries of `A` are uniform on `[−1, 1]` with probability `density`; rows
/// left empty trigger a resample. `x_star` has at most `m` positives in
/// `[0.1, 1.1]`, `y_star` is uniform on `[−1, 1]`, and `c = Aᵀy_star + r`
/// where `r ∈ [0.1, 1.1]` off the support of `x_star` and `0` on it.
/// The saddle form negates the dual, so `z_star = (x_star, −y_star)`.
pub fn gen_random_lp(n: usize, m: usize, density: f64, seed: u64) -> Result<InstanceSpec> {
    if !(m >= 1 && n > m) {
        return Err(Error::InvalidArgument(format!("n > m ≥ 1 (got n = {n}, m = {m})")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density in (0, 1] (got {density})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = None;
    for _ in 0..LP_RETRIES {
        let mut triplets = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random_bool(density) {
                    let v: f64 = rng.random_range(-1.0..=1.0);
                    if v != 0.0 {
                        triplets.push((i, j, v));
                    }
                }
            }
        }
        let candidate = SparseMatrix::from_triplets(m, n, &triplets)?;
        if !candidate.has_empty_row() {
            a = Some(candidate);
            break;
        }
    }
    let a = a.ok_or_else(|| {
        Error::InvalidArgument(format!("density {density} left an empty row after {LP_RETRIES} samples"))
    })?;

    let support_size = rng.random_range(1..=m);
    let support = rand::seq::index::sample(&mut rng, n, support_size);
    let mut x_star = vec![0.0; n];
    for j in support.iter() {
        x_star[j] = rng.random_range(0.1..=1.1);
    }
    let y_star: Vector = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let r: Vector = x_star
        .iter()
        .map(|&x| if x > 0.0 { 0.0 } else { rng.random_range(0.1..=1.1) })
        .collect();
    let b = a.mul_vec(&x_star);
    let mut c = a.mul_transpose_vec(&y_star);
    linalg::axpy(1.0, &r, &mut c);

    let lp = LpInstance::new(c, a, b)?;
    let neg_y: Vector = y_star.iter().map(|v| -v).collect();
    let problem = lp_to_saddle(&lp)?.with_z_star(linalg::concat(&x_star, &neg_y))?;
    let z0 = vec![1.0; n + m];
    let kind = InstanceKind::RandomLp {
        n,
        m,
        density,
        seed,
        lp,
    };
    InstanceSpec::new(kind, problem, z0, None)
}

/// The two-dimensional recursion `a_{k+1} = [[1 − 2t², −t], [t, 1]] a_k` with `t = sσ`,
/// returned for `k = 0..=steps`.
pub fn diagonal_recursion(t: f64, a0: [f64; 2], steps: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut a = a0;
    out.push(a);
    for _ in 0..steps {
        a = [(1.0 - 2.0 * t * t) * a[0] - t * a[1], t * a[0] + a[1]];
        out.push(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::kkt_residual;
    use approx::assert_relative_eq;

    #[test]
    fn bilinear_examples() {
        let xy = gen_bilinear(vec![0.0], vec![0.0], SparseMatrix::diag(&[1.0]).unwrap()).unwrap();
        assert_eq!(xy.z_star().unwrap(), &[0.0, 0.0]);
        let d = gen_bilinear(vec![0.0; 2], vec![0.0; 2], SparseMatrix::diag(&[1.0, 2.0]).unwrap()).unwrap();
        assert_relative_eq!(d.subregularity(0.25).unwrap().alpha.unwrap(), 0.125, max_relative = 1e-10);
        let one = gen_bilinear(vec![1.0], vec![1.0], SparseMatrix::diag(&[1.0]).unwrap()).unwrap();
        let zs = one.z_star().unwrap();
        assert_relative_eq!(zs[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(zs[1], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn bilinear_without_saddle_is_rejected() {
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 1.0]]).unwrap();
        let r = gen_bilinear(vec![1.0, 0.0], vec![1.0], a);
        assert!(matches!(r, Err(Error::NoSaddle(_))), "{r:?}");
    }

    #[test]
    fn tightness_linear_recursion_matrix() {
        let spec = gen_tightness_linear(&[1.0], 0.25).unwrap();
        assert_eq!(spec.z0, vec![1.0, 0.0]);
        let seq = diagonal_recursion(0.25, [1.0, 0.0], 1);
        assert_eq!(seq[1], [0.875, 0.25]);
        let sq = seq[1][0] * seq[1][0] + seq[1][1] * seq[1][1];
        assert_relative_eq!(sq, 0.828125, max_relative = 1e-15);
        assert!(sq >= (1.0 - 0.0625) / 3.0);
        match spec.kind {
            InstanceKind::TightnessLinear { envelope, .. } => {
                assert!(envelope.ids0 > 0.0);
                assert_relative_eq!(envelope.alpha, 0.125);
            }
            _ => unreachable!(),
        }
        assert!(matches!(gen_tightness_linear(&[1.0], 0.6), Err(Error::StepSize(_))));
    }

    #[test]
    fn tightness_sublinear_parameters() {
        let spec = gen_tightness_sublinear(100, 2.0, 1.0, 2).unwrap();
        assert_relative_eq!(spec.step_size, 0.5);
        assert_eq!(spec.problem.a().as_diagonal().unwrap(), vec![0.1, 1.0]);
        assert_relative_eq!(spec.subregularity(0.5).unwrap().alpha.unwrap(), 0.025, max_relative = 1e-10);
        let inv = 1.0 / SublinearEnvelope::constant_for(2.0);
        assert_relative_eq!(inv, 192.0 * std::f64::consts::E, max_relative = 1e-14);
        assert!((inv - 521.9).abs() < 0.1);
        assert!(gen_tightness_sublinear(100, 2.0, 1.0, 1).is_err());
    }

    #[test]
    fn strongly_convex_example() {
        let spec = gen_strongly_convex(2.0, SparseMatrix::diag(&[1.0]).unwrap()).unwrap();
        assert_eq!(spec.z_star().unwrap(), &[0.0, 0.0]);
        assert_relative_eq!(spec.subregularity(0.1).unwrap().alpha.unwrap(), 0.05, max_relative = 1e-14);
    }

    #[test]
    fn random_lp_plants_an_optimum() {
        for seed in 0..20 {
            let spec = gen_random_lp(2, 1, 1.0, seed).unwrap();
            let InstanceKind::RandomLp { lp, .. } = &spec.kind else { unreachable!() };
            let zs = spec.z_star().unwrap();
            let (x, y) = spec.problem.split(zs);
            assert!(kkt_residual(lp, x, y).unwrap() <= 1e-10);
            let zero = vec![0.0; zs.len()];
            assert!(spec.problem.membership_residual(zs, &zero).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn random_lp_is_deterministic() {
        let a = gen_random_lp(30, 10, 0.3, 42).unwrap();
        let b = gen_random_lp(30, 10, 0.3, 42).unwrap();
        let (InstanceKind::RandomLp { lp: la, .. }, InstanceKind::RandomLp { lp: lb, .. }) = (&a.kind, &b.kind) else {
            unreachable!()
        };
        assert_eq!(la, lb);
        assert_eq!(a.z_star(), b.z_star());
        let other = gen_random_lp(30, 10, 0.3, 43).unwrap();
        assert_ne!(a.z_star(), other.z_star());
    }

    #[test]
    fn random_lp_rejects_bad_shapes() {
        assert!(gen_random_lp(2, 2, 0.5, 0).is_err());
        assert!(gen_random_lp(3, 1, 0.0, 0).is_err());
    }
}
