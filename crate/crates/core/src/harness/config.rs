//! Experiment configuration files (TOML).
//!
//! ```toml
//! [instance]
//! kind = "random_lp"          # bilinear | tightness_linear | tightness_sublinear
//! n = 50                      # | strongly_convex | random_lp | native | mps
//! m = 25
//! density = 0.2
//! seed = 7
//!
//! [solver]
//! algorithm = "pdhg"          # pdhg | ppm | ladmm | admm
//! step_size = 0.05            # s, or τ for the ADMM variants
//! max_iters = 2000
//! ids_every = 1
//!
//! [ids]
//! tolerance = 1e-10
//!
//! [output]
//! path = "trace.csv"
//! ```
//!
//! Relative paths are taken from the directory holding the config file.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ids::AgdConfig;
use crate::instances::{self, InstanceSpec};
use crate::linalg::{SparseMatrix, Vector};
use crate::problem::{lp_to_saddle, read_mps, read_native};
use crate::solvers::SolverConfig;
use crate::trace::Algorithm;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub ids: IdsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// `a` is given as dense rows; `c` and `b` default to zero.
    Bilinear {
        a: Vec<Vec<f64>>,
        c: Option<Vec<f64>>,
        b: Option<Vec<f64>>,
    },
    TightnessLinear {
        sigma: Vec<f64>,
        s: f64,
    },
    TightnessSublinear {
        k_target: usize,
        #[serde(default = "default_c_factor")]
        c_factor: f64,
        #[serde(default = "default_l_a")]
        l_a: f64,
        #[serde(default = "default_blocks")]
        m: usize,
    },
    StronglyConvex {
        mu: f64,
        a: Vec<Vec<f64>>,
    },
    RandomLp {
        n: usize,
        m: usize,
        density: f64,
        seed: u64,
    },
    Native {
        path: PathBuf,
    },
    Mps {
        path: PathBuf,
    },
}

fn default_c_factor() -> f64 {
    2.0
}

fn default_l_a() -> f64 {
    1.0
}

fn default_blocks() -> usize {
    2
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: String,
    pub step_size: Option<f64>,
    pub lambda: Option<f64>,
    pub max_iters: usize,
    pub ids_every: usize,
    pub inclusion_audit: bool,
    pub seed: u64,
    /// Overrides the instance's starting point.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            algorithm: d.algorithm.name().to_string(),
            step_size: None,
            lambda: None,
            max_iters: d.max_iters,
            ids_every: d.ids_every,
            inclusion_audit: d.inclusion_audit,
            seed: d.seed,
            start: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IdsSection {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for IdsSection {
    fn default() -> Self {
        let d = AgdConfig::default();
        IdsSection {
            tolerance: d.tolerance,
            max_iters: d.max_iters,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

/// Command-line overrides, applied on top of the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub algorithm: Option<Algorithm>,
    pub step_size: Option<f64>,
    pub max_iters: Option<usize>,
    pub ids_every: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.algorithm {
            self.solver.algorithm = a.name().to_string();
        }
        if o.step_size.is_some() {
            self.solver.step_size = o.step_size;
        }
        if let Some(v) = o.max_iters {
            self.solver.max_iters = v;
        }
        if let Some(v) = o.ids_every {
            self.solver.ids_every = v;
        }
        if let Some(v) = o.tolerance {
            self.ids.tolerance = v;
        }
        if let Some(v) = o.seed {
            self.solver.seed = v;
        }
        if o.output.is_some() {
            self.output.path.clone_from(&o.output);
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let agd = AgdConfig {
            tolerance: self.ids.tolerance,
            max_iters: self.ids.max_iters,
            ..AgdConfig::default()
        };
        agd.validate()?;
        Ok(SolverConfig {
            algorithm: self.solver.algorithm.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            step_size: self.solver.step_size,
            lambda: self.solver.lambda,
            max_iters: self.solver.max_iters,
            ids_every: self.solver.ids_every,
            inclusion_audit: self.solver.inclusion_audit,
            seed: self.solver.seed,
            agd,
        })
    }

    /// Builds the instance; file paths are resolved against `base`.
    pub fn instance(&self, base: &Path) -> Result<InstanceSpec> {
        let mut spec = match &self.instance {
            InstanceConfig::Bilinear { a, c, b } => {
                let a = SparseMatrix::from_dense_rows(a)?;
                let c = c.clone().unwrap_or_else(|| vec![0.0; a.cols()]);
                let b = b.clone().unwrap_or_else(|| vec![0.0; a.rows()]);
                instances::gen_bilinear(c, b, a)?
            }
            InstanceConfig::TightnessLinear { sigma, s } => instances::gen_tightness_linear(sigma, *s)?,
            InstanceConfig::TightnessSublinear {
                k_target,
                c_factor,
                l_a,
                m,
            } => instances::gen_tightness_sublinear(*k_target, *c_factor, *l_a, *m)?,
            InstanceConfig::StronglyConvex { mu, a } => {
                instances::gen_strongly_convex(*mu, SparseMatrix::from_dense_rows(a)?)?
            }
            InstanceConfig::RandomLp { n, m, density, seed } => instances::gen_random_lp(*n, *m, *density, *seed)?,
            InstanceConfig::Native { path } => {
                let path = base.join(path);
                let file = read_native(&path)?;
                InstanceSpec::loaded(file.problem, file.start, &path.display().to_string())?
            }
            InstanceConfig::Mps { path } => {
                let path = base.join(path);
                let lp = read_mps(&path)?;
                InstanceSpec::loaded(lp_to_saddle(&lp)?, None, &path.display().to_string())?
            }
        };
        if let Some(z0) = &self.solver.start {
            spec.problem.check_dim(z0)?;
            spec.z0 = Vector::from(z0.as_slice());
        }
        Ok(spec)
    }

    /// `output.path`, or the config name with a `.csv` extension.
    pub fn output_path(&self, config_path: &Path, base: &Path) -> PathBuf {
        match &self.output.path {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => base.join(p),
            None => config_path.with_extension("csv"),
        }
    }
}
