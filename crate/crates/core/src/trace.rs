//! Per-iteration solver logs.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::linalg::MetricKind;
use crate::problem::Provenance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Pdhg,
    Ppm,
    Ladmm,
    Admm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Pdhg, Algorithm::Ppm, Algorithm::Ladmm, Algorithm::Admm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pdhg => "pdhg",
            Algorithm::Ppm => "ppm",
            Algorithm::Ladmm => "ladmm",
            Algorithm::Admm => "admm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}' (pdhg, ppm, ladmm, admm)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceHeader {
    /// Free-form instance description.
    pub instance: String,
    pub algorithm: Algorithm,
    /// Metric with the resolved step sizes.
    pub metric: MetricKind,
    pub seed: u64,
    pub version: String,
    pub ids_every: usize,
    pub max_iters: usize,
    /// Sub-regularity constant for the metric, when known.
    pub alpha: Option<f64>,
    /// Where `alpha` comes from.
    pub provenance: Option<Provenance>,
    /// `‖z₀ − z_star‖²_P`, when the optimum is known.
    pub dist0_sq: Option<f64>,
}

/// One instrumented iteration. Absent values are empty CSV cells.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub ids: Option<f64>,
    /// `‖z_{k−1} − z_k‖²_P`, absent at `k = 0`.
    pub ids_certificate: Option<f64>,
    pub kkt_residual_sq: Option<f64>,
    /// `√IDS · ‖z_k − z_star‖_P`, when the optimum is known.
    pub gap_bound: Option<f64>,
    /// Largest certificate membership residual over the steps since the previous row.
    pub inclusion_residual: Option<f64>,
    pub agd_iters: Option<usize>,
    pub elapsed_ns: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub header: TraceHeader,
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    /// `(k, ids)` for rows that carry an IDS value.
    pub fn ids_series(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.ids.map(|v| (r.k, v)))
    }
}
