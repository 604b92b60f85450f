//! Row-by-row checks of the convergence inequalities against a trace.

use std::fmt;

use crate::error::Result;
use crate::functions::ProxKind;
use crate::ids::{ids_evaluate, AgdConfig};
use crate::linalg::{self, MetricKind, MetricMatrix};
use crate::problem::{subregularity_alpha, Region, SaddleProblem};
use crate::trace::{SolverTrace, TraceRow};

use super::rate::linear_rate_horizon;

pub const MONOTONE_SLACK: f64 = 1e-9;
pub const SUBLINEAR_SLACK: f64 = 1e-9;
pub const LINEAR_SLACK: f64 = 1e-12;
pub const LOWER_SLACK: f64 = 1e-12;
pub const LOWER_HORIZON: usize = 500;
pub const GAP_SLACK: f64 = 1e-9;
pub const CERTIFICATE_SLACK: f64 = 1e-9;
pub const INCLUSION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Smallest `bound + slack − value` over checked rows; negative means violated.
    pub worst_margin: Option<f64>,
    pub worst_k: Option<usize>,
    pub rows_checked: usize,
}

impl CheckOutcome {
    fn skipped(name: &'static str, why: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            status: CheckStatus::Skipped(why.into()),
            worst_margin: None,
            worst_k: None,
            rows_checked: 0,
        }
    }

    fn from_margins(name: &'static str, margins: impl Iterator<Item = (usize, f64)>) -> Self {
        let mut worst: Option<(usize, f64)> = None;
        let mut count = 0;
        for (k, m) in margins {
            count += 1;
            if worst.is_none_or(|(_, w)| m < w || m.is_nan()) {
                worst = Some((k, m));
            }
        }
        let Some((k, m)) = worst else {
            return CheckOutcome::skipped(name, "no applicable rows");
        };
        CheckOutcome {
            name,
            status: if m >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
            worst_margin: Some(m),
            worst_k: Some(k),
            rows_checked: count,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<CheckOutcome>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.status {
                CheckStatus::Skipped(why) => writeln!(f, "{:<22} skipped  {why}", c.name)?,
                s => writeln!(
                    f,
                    "{:<22} {}     rows={} worst_margin={:.3e} at k={}",
                    c.name,
                    if *s == CheckStatus::Pass { "pass" } else { "FAIL" },
                    c.rows_checked,
                    c.worst_margin.unwrap_or(f64::NAN),
                    c.worst_k.unwrap_or(0),
                )?,
            }
        }
        Ok(())
    }
}

fn ids_rows(trace: &SolverTrace) -> Vec<(usize, f64)> {
    trace.ids_series().collect()
}

fn monotone(trace: &SolverTrace) -> CheckOutcome {
    let rows = ids_rows(trace);
    let Some(&(_, ids0)) = rows.first() else {
        return CheckOutcome::skipped("monotone_decay", "no IDS values");
    };
    let eps = MONOTONE_SLACK * (1.0 + ids0);
    CheckOutcome::from_margins(
        "monotone_decay",
        rows.windows(2).map(|w| (w[1].0, w[0].1 + eps - w[1].1)),
    )
}

fn sublinear(trace: &SolverTrace, dist0_sq: Option<f64>) -> CheckOutcome {
    let Some(d) = dist0_sq else {
        return CheckOutcome::skipped("sublinear_rate", "z_star unknown");
    };
    CheckOutcome::from_margins(
        "sublinear_rate",
        ids_rows(trace)
            .into_iter()
            .filter(|&(k, _)| k >= 1)
            .map(|(k, v)| (k, d / k as f64 + SUBLINEAR_SLACK - v)),
    )
}

fn linear(trace: &SolverTrace, problem: &SaddleProblem) -> CheckOutcome {
    const NAME: &str = "linear_rate";
    let MetricKind::Pdhg { s } = trace.header.metric else {
        return CheckOutcome::skipped(NAME, "sub-regularity constant only known for PDHG");
    };
    let cert = subregularity_alpha(problem, s);
    let alpha = match (cert.alpha, &cert.region) {
        (Some(a), Region::WholeSpace) => a,
        _ => return CheckOutcome::skipped(NAME, format!("alpha unavailable ({})", cert.provenance.name())),
    };
    let rows = ids_rows(trace);
    let Some(&(0, ids0)) = rows.first() else {
        return CheckOutcome::skipped(NAME, "no IDS at k = 0");
    };
    let horizon = linear_rate_horizon(alpha);
    let out = CheckOutcome::from_margins(
        NAME,
        rows.into_iter()
            .filter(|&(k, _)| k >= horizon)
            .map(|(k, v)| (k, ((1.0 - k as f64 / horizon as f64).exp() + LINEAR_SLACK) * ids0 - v)),
    );
    if out.rows_checked == 0 {
        return CheckOutcome::skipped(NAME, format!("trace ends before k = {horizon}"));
    }
    out
}

/// The diagonal construction: `f = g = 0`, `A = diag(σ)` sorted positive, `z₀ = e₁`.
fn lower_envelope_alpha(trace: &SolverTrace, problem: &SaddleProblem, start: Option<&[f64]>) -> Option<f64> {
    let MetricKind::Pdhg { s } = trace.header.metric else {
        return None;
    };
    if !matches!(problem.f().kind(), ProxKind::Zero) || !matches!(problem.g().kind(), ProxKind::Zero) {
        return None;
    }
    let sigma = problem.a().as_diagonal()?;
    if sigma.is_empty() || sigma[0] <= 0.0 || sigma.windows(2).any(|w| w[0] > w[1]) {
        return None;
    }
    if 2.0 * s * sigma[sigma.len() - 1] > 1.0 + 1e-15 {
        return None;
    }
    let start = start?;
    let e1 = start.first() == Some(&1.0) && start[1..].iter().all(|&v| v == 0.0);
    e1.then_some(0.5 * s * sigma[0])
}

fn lower_linear(trace: &SolverTrace, problem: &SaddleProblem, start: Option<&[f64]>) -> CheckOutcome {
    const NAME: &str = "linear_lower_bound";
    let Some(alpha) = lower_envelope_alpha(trace, problem, start) else {
        return CheckOutcome::skipped(NAME, "not the diagonal construction started at e1");
    };
    let rows = ids_rows(trace);
    let Some(&(0, ids0)) = rows.first() else {
        return CheckOutcome::skipped(NAME, "no IDS at k = 0");
    };
    let q = 1.0 - 4.0 * alpha * alpha;
    CheckOutcome::from_margins(
        NAME,
        rows.into_iter()
            .filter(|&(k, _)| k <= LOWER_HORIZON)
            .map(|(k, v)| (k, v - q.powf(k as f64) * ids0 / 12.0 + LOWER_SLACK)),
    )
}

fn gap(trace: &SolverTrace, dist0_sq: Option<f64>) -> CheckOutcome {
    let Some(d) = dist0_sq else {
        return CheckOutcome::skipped("gap_certificate", "z_star unknown");
    };
    CheckOutcome::from_margins(
        "gap_certificate",
        trace
            .rows
            .iter()
            .filter(|r| r.k >= 1)
            .filter_map(|r| r.gap_bound.map(|g| (r.k, d / (r.k as f64).sqrt() + GAP_SLACK - g))),
    )
}

fn certificate(trace: &SolverTrace) -> CheckOutcome {
    CheckOutcome::from_margins(
        "certificate_bound",
        trace.rows.iter().filter_map(|r: &TraceRow| match (r.ids, r.ids_certificate) {
            (Some(v), Some(c)) => Some((r.k, c + CERTIFICATE_SLACK - v)),
            _ => None,
        }),
    )
}

fn inclusion(trace: &SolverTrace) -> CheckOutcome {
    CheckOutcome::from_margins(
        "inclusion",
        trace
            .rows
            .iter()
            .filter_map(|r| r.inclusion_residual.map(|v| (r.k, INCLUSION_TOL - v))),
    )
}

/// `‖z₀ − z_star‖²_P` from the trace header, else from the start point.
fn initial_distance(trace: &SolverTrace, problem: &SaddleProblem, start: Option<&[f64]>) -> Result<Option<f64>> {
    let Some(zs) = problem.z_star() else {
        return Ok(None);
    };
    if trace.header.dist0_sq.is_some() {
        return Ok(trace.header.dist0_sq);
    }
    match start {
        Some(z0) => {
            problem.check_dim(z0)?;
            let metric = MetricMatrix::new(trace.header.metric, problem.a_shared())?;
            Ok(Some(metric.norm_sq(&linalg::sub(z0, zs))?))
        }
        None => Ok(None),
    }
}

/// Whether row 0 of the trace carries the IDS of `start`.
fn starts_at(trace: &SolverTrace, problem: &SaddleProblem, start: &[f64]) -> Result<bool> {
    let Some(ids0) = trace.rows.first().filter(|r| r.k == 0).and_then(|r| r.ids) else {
        return Ok(false);
    };
    problem.check_dim(start)?;
    let metric = MetricMatrix::new(trace.header.metric, problem.a_shared())?;
    let v = ids_evaluate(problem, &metric, start, &AgdConfig::default())?.value;
    Ok((v - ids0).abs() <= 1e-9 * (1.0 + ids0))
}

/// Evaluates monotone decay, the sublinear and linear upper bounds, the
/// linear lower bound, the gap certificate, certificate dominance and the
/// inclusion residual. Checks lacking data are reported as skipped.
pub fn audit_theorems(trace: &SolverTrace, problem: &SaddleProblem, start: Option<&[f64]>) -> Result<AuditReport> {
    let dist0_sq = initial_distance(trace, problem, start)?;
    let start = match start {
        Some(z0) if starts_at(trace, problem, z0)? => Some(z0),
        _ => None,
    };
    Ok(AuditReport {
        checks: vec![
            monotone(trace),
            sublinear(trace, dist0_sq),
            linear(trace, problem),
            lower_linear(trace, problem, start),
            gap(trace, dist0_sq),
            certificate(trace),
            inclusion(trace),
        ],
    })
}
