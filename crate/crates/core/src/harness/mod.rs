//! Experiment driver: configs, trace files, theorem audits and rate diagnostics.

pub mod audit;
pub mod config;
pub mod rate;
pub mod tracefile;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use audit::{audit_theorems, AuditReport, CheckOutcome, CheckStatus};
pub use config::{ExperimentConfig, InstanceConfig, Overrides};
pub use rate::{agd_stats, default_window, fit_rate, rate_reference, AgdStats, RateFit, RateReference};
pub use tracefile::{format_trace, parse_trace, read_trace, write_trace, TraceWriter};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::solvers::run_with;
use crate::trace::SolverTrace;

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub trace: SolverTrace,
    pub output_path: PathBuf,
    pub final_iterate: Vector,
}

/// Loads `config_path`, runs the solver and streams the trace to CSV.
pub fn run_experiment(config_path: impl AsRef<Path>, overrides: &Overrides) -> Result<ExperimentOutput> {
    let config_path = config_path.as_ref();
    let (mut cfg, base) = ExperimentConfig::load(config_path)?;
    cfg.apply(overrides);
    let solver_cfg = cfg.solver_config()?;
    let spec = cfg.instance(&base)?;
    let output_path = cfg.output_path(config_path, &base);

    let file = File::create(&output_path).map_err(|e| Error::io(&output_path, e))?;
    let mut file = Some(BufWriter::new(file));
    let mut writer: Option<TraceWriter<BufWriter<File>>> = None;
    let out = run_with(&spec.problem, &solver_cfg, &spec.z0, &spec.description(), |header, row, _| {
        if writer.is_none() {
            writer = Some(TraceWriter::new(file.take().expect("opened above"), header)?);
        }
        writer.as_mut().expect("created above").write_row(row)
    })?;
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(ExperimentOutput {
        trace: out.trace,
        output_path,
        final_iterate: out.final_state.z,
    })
}
