//! Rate fits on `ln IDS` and AGD iteration statistics.

use crate::error::{Error, Result};
use crate::problem::Provenance;
use crate::trace::SolverTrace;

/// Rows with IDS at or below this are excluded from fits.
pub const FIT_FLOOR: f64 = 1e-14;
pub const MIN_FIT_ROWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub window: (usize, usize),
    /// Least-squares slope of `ln IDS` against `k`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rows: usize,
}

impl RateFit {
    /// Per-iteration contraction factor `e^slope`.
    pub fn factor(&self) -> f64 {
        self.slope.exp()
    }
}

/// Ordinary least squares on `(k, ln ids)` for rows with `k_lo ≤ k ≤ k_hi`.
pub fn fit_rate(trace: &SolverTrace, window: (usize, usize)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(hi > lo && lo >= 1) {
        return Err(Error::InvalidArgument(format!("window needs k_hi > k_lo ≥ 1 (got {lo}:{hi})")));
    }
    let pts: Vec<(f64, f64)> = trace
        .ids_series()
        .filter(|&(k, v)| k >= lo && k <= hi && v > FIT_FLOOR)
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    fit_points(&pts, window)
}

/// Whole-trace window `[1, last k]`.
pub fn default_window(trace: &SolverTrace) -> (usize, usize) {
    (1, trace.rows.last().map_or(1, |r| r.k))
}

fn fit_points(pts: &[(f64, f64)], window: (usize, usize)) -> Result<RateFit> {
    if pts.len() < MIN_FIT_ROWS {
        return Err(Error::InvalidArgument(format!(
            "{} usable rows in window {}:{} (need {MIN_FIT_ROWS} with ids > {FIT_FLOOR:e})",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit {
        window,
        slope,
        intercept,
        r_squared,
        rows: pts.len(),
    })
}

/// Reference slopes derived from the sub-regularity constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReference {
    /// `−1/⌈e/α²⌉`, the per-iteration slope of the restart-free linear bound.
    pub theoretical: f64,
    /// `ln(1 − 4α²) = ln(1 − s²σ⁺²)` for bilinear problems under PDHG.
    pub spectral: Option<f64>,
}

pub fn linear_rate_horizon(alpha: f64) -> usize {
    (std::f64::consts::E / (alpha * alpha)).ceil() as usize
}

pub fn rate_reference(trace: &SolverTrace) -> Option<RateReference> {
    let alpha = trace.header.alpha?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return None;
    }
    let spectral = (trace.header.provenance == Some(Provenance::Bilinear)).then(|| (1.0 - 4.0 * alpha * alpha).ln());
    Some(RateReference {
        theoretical: -1.0 / linear_rate_horizon(alpha) as f64,
        spectral,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgdStats {
    pub evaluations: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

pub fn agd_stats(trace: &SolverTrace) -> Result<AgdStats> {
    let mut iters: Vec<usize> = trace.rows.iter().filter_map(|r| r.agd_iters).collect();
    if iters.is_empty() {
        return Err(Error::InvalidArgument("trace has no agd_iters values".into()));
    }
    iters.sort_unstable();
    let n = iters.len();
    let median = if n % 2 == 1 {
        iters[n / 2] as f64
    } else {
        0.5 * (iters[n / 2 - 1] + iters[n / 2]) as f64
    };
    Ok(AgdStats {
        evaluations: n,
        mean: iters.iter().sum::<usize>() as f64 / n as f64,
        median,
        max: iters[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MetricKind;
    use crate::trace::{Algorithm, TraceHeader, TraceRow};
    use approx::assert_relative_eq;

    fn trace_of(values: impl Iterator<Item = (usize, f64)>) -> SolverTrace {
        SolverTrace {
            header: TraceHeader {
                instance: String::new(),
                algorithm: Algorithm::Pdhg,
                metric: MetricKind::Pdhg { s: 0.25 },
                seed: 0,
                version: String::new(),
                ids_every: 1,
                max_iters: 0,
                alpha: Some(0.125),
                provenance: Some(Provenance::Bilinear),
                dist0_sq: None,
            },
            rows: values
                .map(|(k, v)| TraceRow {
                    k,
                    ids: Some(v),
                    ids_certificate: None,
                    kkt_residual_sq: None,
                    gap_bound: None,
                    inclusion_residual: None,
                    agd_iters: Some(k % 3),
                    elapsed_ns: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn geometric_input_is_recovered() {
        let t = trace_of((0..=100).map(|k| (k, 0.9f64.powi(k as i32))));
        let fit = fit_rate(&t, (1, 100)).unwrap();
        assert_relative_eq!(fit.slope, 0.9f64.ln(), epsilon = 1e-6);
        assert!(fit.r_squared >= 0.999999);
        assert_eq!(fit.rows, 100);
    }

    #[test]
    fn harmonic_input_has_flat_slope() {
        let t = trace_of((1..=1000).map(|k| (k, 1.0 / k as f64)));
        let fit = fit_rate(&t, (500, 1000)).unwrap();
        assert!(fit.slope.abs() < 2e-3, "{fit:?}");
        assert!(fit.r_squared < 0.999, "{fit:?}");
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let t = trace_of((0..5).map(|k| (k, 1.0)));
        assert!(fit_rate(&t, (1, 4)).is_err());
        let t = trace_of((0..50).map(|k| (k, 1e-20)));
        assert!(fit_rate(&t, (1, 49)).is_err());
    }

    #[test]
    fn references_from_alpha() {
        let t = trace_of(std::iter::empty());
        let r = rate_reference(&t).unwrap();
        assert_eq!(linear_rate_horizon(0.125), 174);
        assert_relative_eq!(r.theoretical, -1.0 / 174.0);
        assert_relative_eq!(r.spectral.unwrap(), (1.0f64 - 0.0625).ln());
    }

    #[test]
    fn agd_summary() {
        let t = trace_of((0..4).map(|k| (k, 1.0)));
        let s = agd_stats(&t).unwrap();
        assert_eq!(s.evaluations, 4);
        // iterations 0, 1, 2, 0
        assert_relative_eq!(s.mean, 0.75);
        assert_relative_eq!(s.median, 0.5);
        assert_eq!(s.max, 2);
        assert!(agd_stats(&trace_of(std::iter::empty())).is_err());
    }
}
