//! Saddle problems `min_x max_y f(x) + ⟨Ax, y⟩ − g(y)`, linear programs in
//! standard form and sub-regularity constants.

mod mps;
mod native;

pub use mps::{format_mps, parse_mps, read_mps, write_mps};
pub use native::{format_native, parse_native, read_native, write_native, NativeFile};

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::functions::{ProxFunction, ProxKind, SubdiffSet};
use crate::linalg::{self, concat, dot, norm, SparseMatrix, Vector};

/// Tolerance for the `0 ∈ F(z_star)` check.
pub const OPTIMUM_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SaddleProblem {
    f: ProxFunction,
    g: ProxFunction,
    a: Arc<SparseMatrix>,
    z_star: Option<Vector>,
    a_norm: OnceLock<f64>,
}

impl SaddleProblem {
    pub fn new(f: ProxFunction, g: ProxFunction, a: SparseMatrix) -> Result<Self> {
        Self::from_shared(f, g, Arc::new(a))
    }

    pub fn from_shared(f: ProxFunction, g: ProxFunction, a: Arc<SparseMatrix>) -> Result<Self> {
        if f.dim() != a.cols() {
            return Err(Error::DimensionMismatch {
                expected: a.cols(),
                got: f.dim(),
            });
        }
        if g.dim() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: g.dim(),
            });
        }
        Ok(SaddleProblem {
            f,
            g,
            a,
            z_star: None,
            a_norm: OnceLock::new(),
        })
    }

    /// Attaches a known saddle point after checking `0 ∈ F(z_star)`.
    pub fn with_z_star(mut self, z_star: Vector) -> Result<Self> {
        self.check_dim(&z_star)?;
        linalg::ensure_finite(&z_star, "z_star")?;
        let r = self.membership_residual(&z_star, &vec![0.0; self.dim()])?;
        let scale = 1.0 + norm(&z_star);
        if r > OPTIMUM_TOL * scale {
            return Err(Error::NoSaddle(format!("0 ∉ F(z_star): residual {r:e}")));
        }
        self.z_star = Some(z_star);
        Ok(self)
    }

    pub fn f(&self) -> &ProxFunction {
        &self.f
    }

    pub fn g(&self) -> &ProxFunction {
        &self.g
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn a_shared(&self) -> Arc<SparseMatrix> {
        Arc::clone(&self.a)
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Dual dimension.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    pub fn z_star(&self) -> Option<&[f64]> {
        self.z_star.as_deref()
    }

    /// `‖A‖₂`, estimated once and cached.
    pub fn operator_norm(&self) -> Result<f64> {
        if let Some(v) = self.a_norm.get() {
            return Ok(*v);
        }
        let v = linalg::operator_norm(&self.a, 1e-13)?;
        Ok(*self.a_norm.get_or_init(|| v))
    }

    pub fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.n())
    }

    /// Affine part `d(z) = (Aᵀy, −Ax)`.
    pub fn affine_part(&self, z: &[f64]) -> Result<Vector> {
        self.check_dim(z)?;
        let (x, y) = self.split(z);
        let mut d = vec![0.0; self.dim()];
        let (dx, dy) = d.split_at_mut(self.n());
        self.a.mul_transpose_vec_into(y, dx);
        self.a.mul_vec_into(x, dy);
        dy.iter_mut().for_each(|v| *v = -*v);
        Ok(d)
    }

    /// `F(z) = d(z) + G(z)` with `G(z) = ∂f(x) × ∂g(y)`.
    pub fn operator_f(&self, z: &[f64]) -> Result<(Vector, SubdiffSet)> {
        let d = self.affine_part(z)?;
        let (x, y) = self.split(z);
        let set = self.f.subdiff_at(x)?.product(self.g.subdiff_at(y)?);
        Ok((d, set))
    }

    /// Euclidean distance from `w` to `F(z)`.
    pub fn membership_residual(&self, z: &[f64], w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let (d, set) = self.operator_f(z)?;
        Ok(set.distance(&linalg::sub(w, &d)))
    }

    /// `L(x, y)`, or `None` when a term is infinite.
    pub fn lagrangian(&self, x: &[f64], y: &[f64]) -> Result<Option<f64>> {
        let fx = self.f.value(x)?;
        let gy = self.g.value(y)?;
        if !fx.is_finite() || !gy.is_finite() {
            return Ok(None);
        }
        Ok(Some(fx + dot(&self.a.mul_vec(x), y) - gy))
    }

    /// The linear program behind this problem when `f = cᵀx + ι_{x≥0}` and `g = bᵀy`.
    pub fn as_lp(&self) -> Option<LpInstance> {
        match (self.f.kind(), self.g.kind()) {
            (ProxKind::LinearPlusNonneg(c), ProxKind::Linear(b)) => Some(LpInstance {
                c: c.clone(),
                a: Arc::clone(&self.a),
                b: b.clone(),
            }),
            _ => None,
        }
    }
}

/// `minimize cᵀx subject to Ax = b, x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpInstance {
    pub c: Vector,
    pub a: Arc<SparseMatrix>,
    pub b: Vector,
}

impl LpInstance {
    pub fn new(c: Vector, a: SparseMatrix, b: Vector) -> Result<Self> {
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
        linalg::ensure_finite(&c, "objective")?;
        linalg::ensure_finite(&b, "right-hand side")?;
        Ok(LpInstance {
            c,
            a: Arc::new(a),
            b,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }
}

/// `L(x, y) = cᵀx + ι_{x≥0}(x) + yᵀAx − bᵀy`.
pub fn lp_to_saddle(lp: &LpInstance) -> Result<SaddleProblem> {
    if lp.n() == 0 || lp.m() == 0 {
        return Err(Error::InvalidArgument("LP needs n ≥ 1 and m ≥ 1".into()));
    }
    let f = ProxFunction::new(ProxKind::LinearPlusNonneg(lp.c.clone()), lp.n())?;
    let g = ProxFunction::new(ProxKind::Linear(lp.b.clone()), lp.m())?;
    SaddleProblem::from_shared(f, g, Arc::clone(&lp.a))
}

/// `‖(Ax − b; [Aᵀỹ − c]⁺; [cᵀx − bᵀỹ]⁺)‖₂` with `ỹ = −y`.
///
/// `y` is the multiplier of the saddle model; negative entries of `x` are
/// clamped to zero first.
pub fn kkt_residual(lp: &LpInstance, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != lp.n() {
        return Err(Error::DimensionMismatch {
            expected: lp.n(),
            got: x.len(),
        });
    }
    if y.len() != lp.m() {
        return Err(Error::DimensionMismatch {
            expected: lp.m(),
            got: y.len(),
        });
    }
    let x: Vector = x.iter().map(|v| v.max(0.0)).collect();
    let yt: Vector = y.iter().map(|v| -v).collect();
    let ax = lp.a.mul_vec(&x);
    let aty = lp.a.mul_transpose_vec(&yt);
    let primal: f64 = ax.iter().zip(&lp.b).map(|(a, b)| (a - b).powi(2)).sum();
    let dual: f64 = aty.iter().zip(&lp.c).map(|(a, c)| (a - c).max(0.0).powi(2)).sum();
    let gap = (dot(&lp.c, &x) - dot(&lp.b, &yt)).max(0.0);
    Ok((primal + dual + gap * gap).sqrt())
}

/// Where a sub-regularity constant comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Unconstrained bilinear problem, `α_s = (s/2)σ⁺_min(A)`.
    Bilinear,
    /// Linear program; `α_s = s / (2 H(K) √(1 + 4R²))` with `H(K)` unknown.
    LinearProgram,
    /// Both sides `μ`-strongly convex, `α_s = sμ/4`.
    StronglyConvex,
    Unknown,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Bilinear => "bilinear",
            Provenance::LinearProgram => "linear_program",
            Provenance::StronglyConvex => "strongly_convex",
            Provenance::Unknown => "unknown",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Provenance::Bilinear,
            Provenance::LinearProgram,
            Provenance::StronglyConvex,
            Provenance::Unknown,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    WholeSpace,
    /// `{z : ‖z − z_star‖_P ≤ radius}`; the radius is `‖z₀ − z_star‖_P` when known.
    PBall { radius: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubregularityCert {
    pub alpha: Option<f64>,
    pub region: Region,
    pub provenance: Provenance,
    /// Hoffman constant of the KKT system; never computed.
    pub hoffman: Option<f64>,
    /// `R = 2‖z₀ − z_star‖ + ‖z_star‖`, filled in by [`SubregularityCert::with_start`].
    pub r_bound: Option<f64>,
}

impl SubregularityCert {
    fn unavailable(provenance: Provenance) -> Self {
        SubregularityCert {
            alpha: None,
            region: Region::WholeSpace,
            provenance,
            hoffman: None,
            r_bound: None,
        }
    }

    /// Completes the LP region data from a start point and the metric norm of `z₀ − z_star`.
    pub fn with_start(mut self, z0: &[f64], z_star: &[f64], p_dist: f64) -> Self {
        if self.provenance == Provenance::LinearProgram {
            self.r_bound = Some(2.0 * norm(&linalg::sub(z0, z_star)) + norm(z_star));
            self.region = Region::PBall { radius: Some(p_dist) };
        }
        self
    }
}

fn is_bilinear_side(h: &ProxFunction) -> bool {
    matches!(h.kind(), ProxKind::Zero | ProxKind::Linear(_))
}

/// Metric sub-regularity constant for PDHG with step `s`, when known in closed form.
pub fn subregularity_alpha(p: &SaddleProblem, s: f64) -> SubregularityCert {
    if !(s > 0.0) {
        return SubregularityCert::unavailable(Provenance::Unknown);
    }
    if is_bilinear_side(&p.f) && is_bilinear_side(&p.g) {
        let sigma = linalg::min_positive_singular_value(&p.a).ok().flatten();
        return SubregularityCert {
            alpha: sigma.map(|sv| 0.5 * s * sv),
            region: Region::WholeSpace,
            provenance: Provenance::Bilinear,
            hoffman: None,
            r_bound: None,
        };
    }
    if let (ProxKind::HalfSqNorm { weight: mf, .. }, ProxKind::HalfSqNorm { weight: mg, .. }) =
        (p.f.kind(), p.g.kind())
    {
        return SubregularityCert {
            alpha: Some(s * mf.min(*mg) / 4.0),
            region: Region::WholeSpace,
            provenance: Provenance::StronglyConvex,
            hoffman: None,
            r_bound: None,
        };
    }
    if p.as_lp().is_some() {
        let mut cert = SubregularityCert::unavailable(Provenance::LinearProgram);
        cert.region = Region::PBall { radius: None };
        return cert;
    }
    SubregularityCert::unavailable(Provenance::Unknown)
}

/// `(x, y)` stacked.
pub fn stack(x: &[f64], y: &[f64]) -> Vector {
    concat(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar_lp() -> LpInstance {
        LpInstance::new(vec![1.0], SparseMatrix::diag(&[1.0]).unwrap(), vec![1.0]).unwrap()
    }

    fn xy() -> SaddleProblem {
        SaddleProblem::new(ProxFunction::zero(1), ProxFunction::zero(1), SparseMatrix::diag(&[1.0]).unwrap()).unwrap()
    }

    #[test]
    fn operator_f_of_bilinear() {
        let (d, g) = xy().operator_f(&[1.0, 0.0]).unwrap();
        assert_eq!(d, vec![0.0, -1.0]);
        assert!(g.is_singleton());
        assert_eq!(g.lo, vec![0.0, 0.0]);
    }

    #[test]
    fn operator_f_of_lp_interior_is_singleton() {
        let p = lp_to_saddle(&scalar_lp()).unwrap();
        let (d, g) = p.operator_f(&[2.0, 0.5]).unwrap();
        assert_eq!(d, vec![0.5, -2.0]);
        assert_eq!(g.lo, vec![1.0, 1.0]);
        assert!(g.is_singleton());
    }

    #[test]
    fn lp_saddle_matches_substitution() {
        // F(x, y) = (c + Aᵀy + N(x), b − Ax)
        let p = lp_to_saddle(&scalar_lp()).unwrap();
        let (d, g) = p.operator_f(&[0.0, 3.0]).unwrap();
        assert_eq!(d[1] + g.lo[1], 1.0);
        assert_eq!(d[0] + g.hi[0], 4.0);
        assert_eq!(d[0] + g.lo[0], f64::NEG_INFINITY);
        let with_opt = p.with_z_star(vec![1.0, -1.0]).unwrap();
        assert_eq!(with_opt.membership_residual(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn wrong_optimum_is_rejected() {
        let p = lp_to_saddle(&scalar_lp()).unwrap();
        assert!(matches!(p.with_z_star(vec![1.0, 1.0]), Err(Error::NoSaddle(_))));
    }

    #[test]
    fn degenerate_lp_is_rejected() {
        let lp = LpInstance::new(vec![], SparseMatrix::from_triplets(1, 0, &[]).unwrap(), vec![1.0]).unwrap();
        assert!(lp_to_saddle(&lp).is_err());
    }

    #[test]
    fn kkt_residual_examples() {
        let lp = scalar_lp();
        assert_eq!(kkt_residual(&lp, &[1.0], &[-1.0]).unwrap(), 0.0);
        assert_relative_eq!(kkt_residual(&lp, &[0.0], &[0.0]).unwrap(), 1.0);
        // scaling b and c by t scales the residual at scaled points by t
        let t = 3.0;
        let scaled = LpInstance::new(vec![t], SparseMatrix::diag(&[1.0]).unwrap(), vec![t]).unwrap();
        let r1 = kkt_residual(&lp, &[0.2], &[0.3]).unwrap();
        let r2 = kkt_residual(&scaled, &[0.2 * t], &[0.3 * t]).unwrap();
        assert!(r2 > r1);
    }

    #[test]
    fn alpha_examples() {
        let cert = subregularity_alpha(&xy(), 0.5);
        assert_eq!(cert.provenance, Provenance::Bilinear);
        assert_relative_eq!(cert.alpha.unwrap(), 0.25, max_relative = 1e-12);

        let q = ProxFunction::new(
            ProxKind::HalfSqNorm {
                weight: 2.0,
                shift: vec![0.0],
            },
            1,
        )
        .unwrap();
        let sc = SaddleProblem::new(q.clone(), q, SparseMatrix::diag(&[1.0]).unwrap()).unwrap();
        assert_relative_eq!(subregularity_alpha(&sc, 0.1).alpha.unwrap(), 0.05, max_relative = 1e-12);

        let lp = subregularity_alpha(&lp_to_saddle(&scalar_lp()).unwrap(), 0.5);
        assert_eq!(lp.alpha, None);
        assert_eq!(lp.provenance, Provenance::LinearProgram);
        assert_eq!(lp.hoffman, None);
    }

    /// Enumerates the vertices of a tiny standard-form LP.
    fn brute_force_lp(lp: &LpInstance) -> Option<(Vector, f64)> {
        let (m, n) = (lp.m(), lp.n());
        let dense = lp.a.to_dense();
        let mut best: Option<(Vector, f64)> = None;
        for mask in 0u32..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            if cols.len() != m {
                continue;
            }
            let sub = nalgebra::DMatrix::from_fn(m, m, |i, k| dense[(i, cols[k])]);
            let Some(inv) = sub.try_inverse() else { continue };
            let xb = inv * nalgebra::DVector::from_column_slice(&lp.b);
            if xb.iter().any(|v| *v < -1e-12) {
                continue;
            }
            let mut x = vec![0.0; n];
            for (k, &j) in cols.iter().enumerate() {
                x[j] = xb[k].max(0.0);
            }
            let obj = dot(&lp.c, &x);
            if best.as_ref().is_none_or(|b| obj < b.1) {
                best = Some((x, obj));
            }
        }
        best
    }

    #[test]
    fn kkt_zero_at_brute_force_optima() {
        let lp = LpInstance::new(
            vec![1.0, 2.0, 0.5],
            SparseMatrix::from_dense_rows(&[vec![1.0, 1.0, 1.0]]).unwrap(),
            vec![2.0],
        )
        .unwrap();
        let (x, obj) = brute_force_lp(&lp).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 2.0]);
        assert_eq!(obj, 1.0);
        // dual of min cᵀx, Ax = b: ỹ = 0.5, model y = −0.5
        assert!(kkt_residual(&lp, &x, &[-0.5]).unwrap() <= 1e-12);
    }

    fn random_problem() -> impl Strategy<Value = SaddleProblem> {
        (1usize..4, 1usize..4).prop_flat_map(|(m, n)| {
            (proptest::collection::vec(-2.0f64..2.0, m * n), 0usize..4, 0usize..4).prop_map(move |(vals, fk, gk)| {
                let t: Vec<_> = vals.iter().enumerate().map(|(k, &v)| (k / n, k % n, v)).collect();
                let a = SparseMatrix::from_triplets(m, n, &t).unwrap();
                let pick = |k: usize, d: usize| match k {
                    0 => ProxFunction::zero(d),
                    1 => ProxFunction::new(ProxKind::IndicatorNonneg, d).unwrap(),
                    2 => ProxFunction::new(ProxKind::L1 { weight: 0.7 }, d).unwrap(),
                    _ => ProxFunction::new(
                        ProxKind::HalfSqNorm {
                            weight: 1.3,
                            shift: vec![0.2; d],
                        },
                        d,
                    )
                    .unwrap(),
                };
                SaddleProblem::new(pick(fk, n), pick(gk, m), a).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn f_is_monotone(
            p in random_problem(),
            u1 in proptest::collection::vec(-2.0f64..2.0, 8),
            u2 in proptest::collection::vec(-2.0f64..2.0, 8),
            v1 in proptest::collection::vec(-3.0f64..3.0, 8),
            v2 in proptest::collection::vec(-3.0f64..3.0, 8),
        ) {
            let dim = p.dim();
            // move the points into the domains with the prox, which rounds to exact zeros
            let z1 = stack(&p.f().prox(1.0, &u1[..p.n()]).unwrap(), &p.g().prox(1.0, &u1[p.n()..dim]).unwrap());
            let z2 = stack(&p.f().prox(1.0, &u2[..p.n()]).unwrap(), &p.g().prox(1.0, &u2[p.n()..dim]).unwrap());
            let (d1, g1) = p.operator_f(&z1).unwrap();
            let (d2, g2) = p.operator_f(&z2).unwrap();
            let w1 = linalg::add(&d1, &g1.project(&v1[..dim]));
            let w2 = linalg::add(&d2, &g2.project(&v2[..dim]));
            let inner = dot(&linalg::sub(&w1, &w2), &linalg::sub(&z1, &z2));
            prop_assert!(inner >= -1e-9, "⟨w1 − w2, z1 − z2⟩ = {inner}");
        }
    }
}
