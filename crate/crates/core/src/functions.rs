//! Catalogue of separable proximable convex functions.
//!
//! Every member exposes its value, proximal map, subdifferential as a product
//! of intervals, and the Euclidean projection onto that subdifferential. The
//! proximal map follows `prox_h^τ(v) = argmin_u h(u) + ‖u − v‖² / (2τ)`.

use crate::error::{Error, Result};
use crate::linalg::{norm, Vector};

/// Tolerance for domain membership of indicator kinds.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ProxKind {
    Zero,
    /// `cᵀx`
    Linear(Vector),
    /// `ι_{x ≥ 0}`
    IndicatorNonneg,
    /// `ι_{lo ≤ x ≤ hi}`; bounds may be infinite.
    IndicatorBox { lo: Vector, hi: Vector },
    /// `λ‖x‖₁`
    L1 { weight: f64 },
    /// `(μ/2)‖x‖² + bᵀx`
    HalfSqNorm { weight: f64, shift: Vector },
    /// `cᵀx + ι_{x ≥ 0}`
    LinearPlusNonneg(Vector),
    /// `ι_{‖x‖∞ ≤ r}`
    IndicatorLinfBall { radius: f64 },
}

impl ProxKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProxKind::Zero => "zero",
            ProxKind::Linear(_) => "linear",
            ProxKind::IndicatorNonneg => "nonneg",
            ProxKind::IndicatorBox { .. } => "box",
            ProxKind::L1 { .. } => "l1",
            ProxKind::HalfSqNorm { .. } => "half_sq",
            ProxKind::LinearPlusNonneg(_) => "linear_nonneg",
            ProxKind::IndicatorLinfBall { .. } => "linf_ball",
        }
    }
}

/// A catalogue function on `R^dim`, plus a constant added to its value.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxFunction {
    kind: ProxKind,
    dim: usize,
    offset: f64,
}

/// Product of closed intervals `[lo_i, hi_i]`, one per coordinate. A
/// singleton has `lo_i == hi_i`; bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct SubdiffSet {
    pub lo: Vector,
    pub hi: Vector,
}

impl SubdiffSet {
    pub fn singleton(v: Vector) -> Self {
        SubdiffSet { lo: v.clone(), hi: v }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| l == h)
    }

    /// Euclidean projection, a componentwise clamp.
    pub fn project(&self, v: &[f64]) -> Vector {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| x.max(l).min(h))
            .collect()
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Cartesian product `self × other`.
    pub fn product(mut self, other: SubdiffSet) -> Self {
        self.lo.extend(other.lo);
        self.hi.extend(other.hi);
        self
    }

    /// Set shifted by a vector, `self + t`.
    pub fn shifted(&self, t: &[f64]) -> Self {
        SubdiffSet {
            lo: self.lo.iter().zip(t).map(|(l, t)| l + t).collect(),
            hi: self.hi.iter().zip(t).map(|(h, t)| h + t).collect(),
        }
    }
}

fn check_len(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        })
    }
}

impl ProxFunction {
    pub fn new(kind: ProxKind, dim: usize) -> Result<Self> {
        match &kind {
            ProxKind::Linear(c) | ProxKind::LinearPlusNonneg(c) => {
                check_len(dim, c)?;
                crate::linalg::ensure_finite(c, "linear coefficients")?;
            }
            ProxKind::IndicatorBox { lo, hi } => {
                check_len(dim, lo)?;
                check_len(dim, hi)?;
                if lo.iter().chain(hi).any(|v| v.is_nan()) {
                    return Err(Error::NonFinite("box bounds"));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h || *l == f64::INFINITY || *h == f64::NEG_INFINITY) {
                    return Err(Error::InvalidArgument("box needs lo ≤ hi with a nonempty interval".into()));
                }
            }
            ProxKind::L1 { weight } => {
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::InvalidArgument(format!("l1 weight must be ≥ 0, got {weight}")));
                }
            }
            ProxKind::HalfSqNorm { weight, shift } => {
                if !(*weight > 0.0 && weight.is_finite()) {
                    return Err(Error::InvalidArgument(format!("quadratic weight must be > 0, got {weight}")));
                }
                check_len(dim, shift)?;
                crate::linalg::ensure_finite(shift, "quadratic shift")?;
            }
            ProxKind::IndicatorLinfBall { radius } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidArgument(format!("ball radius must be ≥ 0, got {radius}")));
                }
            }
            ProxKind::Zero | ProxKind::IndicatorNonneg => {}
        }
        Ok(ProxFunction { kind, dim, offset: 0.0 })
    }

    pub fn zero(dim: usize) -> Self {
        ProxFunction {
            kind: ProxKind::Zero,
            dim,
            offset: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// True when the subdifferential is a single point everywhere on the domain.
    pub fn is_smooth(&self) -> bool {
        matches!(
            self.kind,
            ProxKind::Zero | ProxKind::Linear(_) | ProxKind::HalfSqNorm { .. }
        )
    }

    /// Function value, `+∞` outside the domain.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x)?;
        let inf = f64::INFINITY;
        let v = match &self.kind {
            ProxKind::Zero => 0.0,
            ProxKind::Linear(c) => crate::linalg::dot(c, x),
            ProxKind::IndicatorNonneg => {
                if x.iter().all(|&v| v >= -DOMAIN_TOL) {
                    0.0
                } else {
                    inf
                }
            }
            ProxKind::IndicatorBox { lo, hi } => {
                if x.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&v, (&l, &h))| v >= l - DOMAIN_TOL && v <= h + DOMAIN_TOL)
                {
                    0.0
                } else {
                    inf
                }
            }
            ProxKind::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::HalfSqNorm { weight, shift } => {
                0.5 * weight * crate::linalg::dot(x, x) + crate::linalg::dot(shift, x)
            }
            ProxKind::LinearPlusNonneg(c) => {
                if x.iter().all(|&v| v >= -DOMAIN_TOL) {
                    crate::linalg::dot(c, x)
                } else {
                    inf
                }
            }
            ProxKind::IndicatorLinfBall { radius } => {
                if x.iter().all(|v| v.abs() <= radius + DOMAIN_TOL) {
                    0.0
                } else {
                    inf
                }
            }
        };
        Ok(v + self.offset)
    }

    /// `argmin_u h(u) + ‖u − v‖² / (2τ)`
    pub fn prox(&self, tau: f64, v: &[f64]) -> Result<Vector> {
        check_len(self.dim, v)?;
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("prox parameter must be > 0, got {tau}")));
        }
        Ok(match &self.kind {
            ProxKind::Zero => v.to_vec(),
            ProxKind::Linear(c) => v.iter().zip(c).map(|(x, c)| x - tau * c).collect(),
            ProxKind::IndicatorNonneg => v.iter().map(|x| x.max(0.0)).collect(),
            ProxKind::IndicatorBox { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&x, (&l, &h))| x.max(l).min(h))
                .collect(),
            ProxKind::L1 { weight } => {
                let t = tau * weight;
                v.iter().map(|&x| soft_threshold(x, t)).collect()
            }
            ProxKind::HalfSqNorm { weight, shift } => v
                .iter()
                .zip(shift)
                .map(|(x, b)| (x - tau * b) / (1.0 + tau * weight))
                .collect(),
            ProxKind::LinearPlusNonneg(c) => v.iter().zip(c).map(|(x, c)| (x - tau * c).max(0.0)).collect(),
            ProxKind::IndicatorLinfBall { radius } => v.iter().map(|x| x.clamp(-radius, *radius)).collect(),
        })
    }

    /// Subdifferential at `x` as a product of intervals.
    pub fn subdiff_at(&self, x: &[f64]) -> Result<SubdiffSet> {
        check_len(self.dim, x)?;
        let inf = f64::INFINITY;
        let n = self.dim;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        let kind = self.kind.name();
        let outside = |index: usize, value: f64| Error::OutsideDomain { kind, index, value };
        match &self.kind {
            ProxKind::Zero => {}
            ProxKind::Linear(c) => {
                lo.copy_from_slice(c);
                hi.copy_from_slice(c);
            }
            ProxKind::IndicatorNonneg | ProxKind::LinearPlusNonneg(_) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi < -DOMAIN_TOL {
                        return Err(outside(i, xi));
                    }
                    if xi <= 0.0 {
                        lo[i] = -inf;
                    }
                }
                if let ProxKind::LinearPlusNonneg(c) = &self.kind {
                    for i in 0..n {
                        lo[i] += c[i];
                        hi[i] += c[i];
                    }
                }
            }
            ProxKind::IndicatorBox { lo: bl, hi: bh } => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi < bl[i] - DOMAIN_TOL || xi > bh[i] + DOMAIN_TOL {
                        return Err(outside(i, xi));
                    }
                    if xi <= bl[i] {
                        lo[i] = -inf;
                    }
                    if xi >= bh[i] {
                        hi[i] = inf;
                    }
                }
            }
            ProxKind::L1 { weight } => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi > 0.0 {
                        lo[i] = *weight;
                        hi[i] = *weight;
                    } else if xi < 0.0 {
                        lo[i] = -weight;
                        hi[i] = -weight;
                    } else {
                        lo[i] = -weight;
                        hi[i] = *weight;
                    }
                }
            }
            ProxKind::HalfSqNorm { weight, shift } => {
                for i in 0..n {
                    let g = weight * x[i] + shift[i];
                    lo[i] = g;
                    hi[i] = g;
                }
            }
            ProxKind::IndicatorLinfBall { radius } => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi.abs() > radius + DOMAIN_TOL {
                        return Err(outside(i, xi));
                    }
                    if xi <= -radius {
                        lo[i] = -inf;
                    }
                    if xi >= *radius {
                        hi[i] = inf;
                    }
                }
            }
        }
        Ok(SubdiffSet { lo, hi })
    }

    /// Euclidean projection of `v` onto `∂h(x)`.
    pub fn project_subdiff(&self, x: &[f64], v: &[f64]) -> Result<Vector> {
        check_len(self.dim, v)?;
        Ok(self.subdiff_at(x)?.project(v))
    }

    /// `‖v − Proj_{∂h(x)}(v)‖₂`, zero iff `v ∈ ∂h(x)`.
    pub fn subdiff_membership_residual(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let p = self.project_subdiff(x, v)?;
        Ok(norm(&crate::linalg::sub(v, &p)))
    }

    /// Fenchel conjugate as a catalogue member.
    pub fn conjugate(&self) -> Result<ProxFunction> {
        let n = self.dim;
        let (kind, offset) = match &self.kind {
            ProxKind::Zero => (
                ProxKind::IndicatorBox {
                    lo: vec![0.0; n],
                    hi: vec![0.0; n],
                },
                0.0,
            ),
            ProxKind::Linear(c) => (
                ProxKind::IndicatorBox {
                    lo: c.clone(),
                    hi: c.clone(),
                },
                0.0,
            ),
            ProxKind::L1 { weight } => (ProxKind::IndicatorLinfBall { radius: *weight }, 0.0),
            ProxKind::IndicatorLinfBall { radius } => (ProxKind::L1 { weight: *radius }, 0.0),
            ProxKind::HalfSqNorm { weight, shift } => {
                // sup_x xᵀy − (μ/2)‖x‖² − bᵀx = ‖y − b‖² / (2μ)
                let b2 = crate::linalg::dot(shift, shift);
                (
                    ProxKind::HalfSqNorm {
                        weight: 1.0 / weight,
                        shift: shift.iter().map(|b| -b / weight).collect(),
                    },
                    b2 / (2.0 * weight),
                )
            }
            ProxKind::IndicatorNonneg => (
                ProxKind::IndicatorBox {
                    lo: vec![f64::NEG_INFINITY; n],
                    hi: vec![0.0; n],
                },
                0.0,
            ),
            ProxKind::LinearPlusNonneg(c) => (
                ProxKind::IndicatorBox {
                    lo: vec![f64::NEG_INFINITY; n],
                    hi: c.clone(),
                },
                0.0,
            ),
            ProxKind::IndicatorBox { lo, hi } => {
                if lo == hi {
                    (ProxKind::Linear(lo.clone()), 0.0)
                } else if lo.iter().all(|&l| l == f64::NEG_INFINITY) && hi.iter().all(|h| h.is_finite()) {
                    if hi.iter().all(|&h| h == 0.0) {
                        (ProxKind::IndicatorNonneg, 0.0)
                    } else {
                        (ProxKind::LinearPlusNonneg(hi.clone()), 0.0)
                    }
                } else if let Some(&r) = hi.first().filter(|&&r| {
                    r.is_finite() && hi.iter().all(|&h| h == r) && lo.iter().all(|&l| l == -r)
                }) {
                    (ProxKind::L1 { weight: r }, 0.0)
                } else {
                    return Err(Error::UnsupportedConjugate { kind: "box" });
                }
            }
        };
        Ok(ProxFunction {
            kind,
            dim: n,
            offset: -self.offset + offset,
        })
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sub;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn f(kind: ProxKind, dim: usize) -> ProxFunction {
        ProxFunction::new(kind, dim).unwrap()
    }

    /// Minimizes `h(u) + (u − v)²/(2τ)` over a fine grid with local refinement.
    fn grid_prox_1d(h: &ProxFunction, tau: f64, v: f64) -> f64 {
        let obj = |u: f64| h.value(&[u]).unwrap() + (u - v).powi(2) / (2.0 * tau);
        let (mut lo, mut hi) = (v - 10.0, v + 10.0);
        for _ in 0..8 {
            let step = (hi - lo) / 2000.0;
            let best = (0..=2000)
                .map(|k| lo + k as f64 * step)
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .unwrap();
            lo = best - 2.0 * step;
            hi = best + 2.0 * step;
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn prox_zero_is_identity() {
        assert_eq!(ProxFunction::zero(2).prox(0.3, &[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn prox_l1_matches_grid_oracle() {
        let h = f(ProxKind::L1 { weight: 1.0 }, 1);
        let oracle = grid_prox_1d(&h, 1.0, 2.0);
        assert_relative_eq!(oracle, 1.0, epsilon = 1e-6);
        assert_eq!(h.prox(1.0, &[2.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn prox_nonneg_projects() {
        let h = f(ProxKind::IndicatorNonneg, 2);
        assert_eq!(h.prox(0.5, &[-1.0, 3.0]).unwrap(), vec![0.0, 3.0]);
    }

    #[test]
    fn prox_quadratic_and_linear_nonneg_match_grid() {
        let q = f(
            ProxKind::HalfSqNorm {
                weight: 2.0,
                shift: vec![0.5],
            },
            1,
        );
        assert_relative_eq!(q.prox(0.7, &[1.3]).unwrap()[0], grid_prox_1d(&q, 0.7, 1.3), epsilon = 1e-6);
        let ln = f(ProxKind::LinearPlusNonneg(vec![1.0]), 1);
        assert_relative_eq!(ln.prox(0.5, &[0.2]).unwrap()[0], grid_prox_1d(&ln, 0.5, 0.2), epsilon = 1e-6);
        assert_relative_eq!(ln.prox(0.5, &[2.0]).unwrap()[0], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn subdiff_of_orthant_is_normal_cone() {
        let h = f(ProxKind::IndicatorNonneg, 2);
        let g = h.subdiff_at(&[1.0, 0.0]).unwrap();
        assert_eq!(g.lo, vec![0.0, f64::NEG_INFINITY]);
        assert_eq!(g.hi, vec![0.0, 0.0]);
    }

    #[test]
    fn subdiff_of_l1() {
        let h = f(ProxKind::L1 { weight: 1.0 }, 2);
        let g = h.subdiff_at(&[0.0, 2.0]).unwrap();
        assert_eq!(g.lo, vec![-1.0, 1.0]);
        assert_eq!(g.hi, vec![1.0, 1.0]);
    }

    #[test]
    fn subdiff_of_zero_is_origin() {
        let g = ProxFunction::zero(3).subdiff_at(&[1.0, 2.0, 3.0]).unwrap();
        assert!(g.is_singleton());
        assert_eq!(g.lo, vec![0.0; 3]);
    }

    #[test]
    fn subdiff_outside_domain_is_an_error() {
        let h = f(ProxKind::IndicatorNonneg, 1);
        assert!(matches!(h.subdiff_at(&[-1e-6]), Err(Error::OutsideDomain { .. })));
        assert!(h.subdiff_at(&[-1e-13]).is_ok());
    }

    #[test]
    fn project_subdiff_examples() {
        let h = f(ProxKind::IndicatorNonneg, 2);
        assert_eq!(h.project_subdiff(&[1.0, 0.0], &[0.5, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(h.project_subdiff(&[1.0, 0.0], &[0.5, -0.3]).unwrap(), vec![0.0, -0.3]);
        let l1 = f(ProxKind::L1 { weight: 1.0 }, 2);
        assert_eq!(l1.project_subdiff(&[0.0, 2.0], &[3.0, 0.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn membership_residual_examples() {
        let l1 = f(ProxKind::L1 { weight: 1.0 }, 1);
        assert_relative_eq!(l1.subdiff_membership_residual(&[0.0], &[2.0]).unwrap(), 1.0);
        assert_eq!(l1.subdiff_membership_residual(&[0.0], &[0.3]).unwrap(), 0.0);
        assert_eq!(ProxFunction::zero(2).subdiff_membership_residual(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn project_subdiff_matches_grid_projection_2d() {
        let h = f(
            ProxKind::IndicatorBox {
                lo: vec![-1.0, 0.0],
                hi: vec![1.0, 2.0],
            },
            2,
        );
        let x = [-1.0, 2.0];
        let v = [0.4, -0.7];
        let g = h.subdiff_at(&x).unwrap();
        // brute force over a bounded window of the (unbounded) set
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let steps = 400;
        for a in 0..=steps {
            for b in 0..=steps {
                let p = [-4.0 + 4.0 * a as f64 / steps as f64, 4.0 * b as f64 / steps as f64];
                if p[0] < g.lo[0] || p[0] > g.hi[0] || p[1] < g.lo[1] || p[1] > g.hi[1] {
                    continue;
                }
                let d = (p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2);
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        let proj = h.project_subdiff(&x, &v).unwrap();
        assert!((proj[0] - best.1[0]).abs() <= 1e-6 + 0.01);
        assert!((proj[1] - best.1[1]).abs() <= 1e-6 + 0.01);
        assert_eq!(proj, vec![0.0, 0.0]);
    }

    #[test]
    fn conjugate_pairs() {
        assert_eq!(
            f(ProxKind::L1 { weight: 1.0 }, 2).conjugate().unwrap().kind(),
            &ProxKind::IndicatorLinfBall { radius: 1.0 }
        );
        let q = f(
            ProxKind::HalfSqNorm {
                weight: 2.0,
                shift: vec![0.0],
            },
            1,
        );
        assert_eq!(
            q.conjugate().unwrap().kind(),
            &ProxKind::HalfSqNorm {
                weight: 0.5,
                shift: vec![-0.0]
            }
        );
        // scalar oracle: sup_x xy − x² = y²/4, i.e. weight 0.5
        let y: f64 = 1.7;
        let sup = (0..=40000)
            .map(|k| -10.0 + k as f64 * 5e-4)
            .map(|x| x * y - x * x)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(sup, q.conjugate().unwrap().value(&[y]).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn conjugate_of_unsupported_box_errors() {
        let b = f(
            ProxKind::IndicatorBox {
                lo: vec![0.0],
                hi: vec![1.0],
            },
            1,
        );
        assert!(matches!(b.conjugate(), Err(Error::UnsupportedConjugate { .. })));
    }

    fn catalogue(dim: usize) -> Vec<ProxFunction> {
        let c: Vec<f64> = (0..dim).map(|i| 0.3 * i as f64 - 0.4).collect();
        vec![
            ProxFunction::zero(dim),
            f(ProxKind::Linear(c.clone()), dim),
            f(ProxKind::IndicatorNonneg, dim),
            f(
                ProxKind::IndicatorBox {
                    lo: vec![-0.5; dim],
                    hi: (0..dim).map(|i| 0.5 + i as f64).collect(),
                },
                dim,
            ),
            f(ProxKind::L1 { weight: 0.8 }, dim),
            f(
                ProxKind::HalfSqNorm {
                    weight: 1.5,
                    shift: c.clone(),
                },
                dim,
            ),
            f(ProxKind::LinearPlusNonneg(c), dim),
            f(ProxKind::IndicatorLinfBall { radius: 0.6 }, dim),
        ]
    }

    fn conjugable(dim: usize) -> Vec<ProxFunction> {
        let c: Vec<f64> = (0..dim).map(|i| 0.25 * i as f64 - 0.3).collect();
        vec![
            ProxFunction::zero(dim),
            f(ProxKind::Linear(c.clone()), dim),
            f(ProxKind::IndicatorNonneg, dim),
            f(ProxKind::L1 { weight: 0.8 }, dim),
            f(
                ProxKind::HalfSqNorm {
                    weight: 1.5,
                    shift: c.clone(),
                },
                dim,
            ),
            f(ProxKind::LinearPlusNonneg(c), dim),
            f(ProxKind::IndicatorLinfBall { radius: 0.6 }, dim),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prox_first_order_condition(v in proptest::collection::vec(-3.0f64..3.0, 3), tau in 0.05f64..4.0) {
            for h in catalogue(3) {
                let p = h.prox(tau, &v).unwrap();
                let g: Vec<f64> = sub(&v, &p).iter().map(|d| d / tau).collect();
                let r = h.subdiff_membership_residual(&p, &g).unwrap();
                prop_assert!(r <= 1e-9, "{:?}: residual {r}", h.kind());
            }
        }

        #[test]
        fn prox_is_nonexpansive(
            v1 in proptest::collection::vec(-3.0f64..3.0, 3),
            v2 in proptest::collection::vec(-3.0f64..3.0, 3),
            tau in 0.05f64..4.0,
        ) {
            for h in catalogue(3) {
                let d = norm(&sub(&h.prox(tau, &v1).unwrap(), &h.prox(tau, &v2).unwrap()));
                prop_assert!(d <= norm(&sub(&v1, &v2)) + 1e-12);
            }
        }

        #[test]
        fn projection_is_idempotent(v in proptest::collection::vec(-3.0f64..3.0, 3), tau in 0.05f64..4.0) {
            for h in catalogue(3) {
                let x = h.prox(tau, &v).unwrap();
                let once = h.project_subdiff(&x, &v).unwrap();
                let twice = h.project_subdiff(&x, &once).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn moreau_identity(t in proptest::collection::vec(-3.0f64..3.0, 3), tau in 0.05f64..4.0) {
            // prox_{h*}^τ(t) = t − τ · prox_h^{1/τ}(t / τ)
            for h in conjugable(3) {
                let hc = h.conjugate().unwrap();
                let lhs = hc.prox(tau, &t).unwrap();
                let inner = h.prox(1.0 / tau, &t.iter().map(|x| x / tau).collect::<Vec<_>>()).unwrap();
                for i in 0..3 {
                    let rhs = t[i] - tau * inner[i];
                    prop_assert!((lhs[i] - rhs).abs() <= 1e-10, "{:?}", h.kind());
                }
            }
        }

        #[test]
        fn conjugate_round_trip(_x in 0u8..1) {
            for h in conjugable(3) {
                let back = h.conjugate().unwrap().conjugate().unwrap();
                let probe = [0.3, 0.0, 1.2];
                let (a, b) = (h.value(&probe).unwrap(), back.value(&probe).unwrap());
                prop_assert!((a - b).abs() <= 1e-12 || (a.is_infinite() && b.is_infinite()));
            }
        }
    }
}
