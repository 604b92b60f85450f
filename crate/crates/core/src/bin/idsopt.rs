use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use idsopt::harness::{
    agd_stats, audit_theorems, default_window, fit_rate, rate_reference, read_trace, run_experiment, Overrides,
};
use idsopt::instances::{gen_random_lp, gen_tightness_linear, gen_tightness_sublinear, InstanceKind, InstanceSpec};
use idsopt::problem::{lp_to_saddle, read_mps, read_native, write_mps, write_native, NativeFile};
use idsopt::trace::Algorithm;
use idsopt::{Error, Result};

#[derive(Parser)]
#[command(name = "idsopt", version, about = "Primal-dual solvers with IDS diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from config files and write CSV traces.
    Solve {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        flags: SolveFlags,
        /// Experiments run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Random LP with a planted optimum; writes `<out>` and `<out>.mps`.
    GenLp {
        n: usize,
        m: usize,
        density: f64,
        seed: u64,
        out: PathBuf,
    },
    /// Lower-bound constructions written as problem files.
    Tightness {
        #[command(subcommand)]
        kind: Tightness,
    },
    /// Check a trace against the convergence inequalities.
    Audit { trace: PathBuf, instance: PathBuf },
    /// Fit the linear rate of ln IDS.
    Rate {
        trace: PathBuf,
        /// Iteration window `a:b`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
    },
    /// AGD iteration counts per IDS evaluation.
    AgdStats { trace: PathBuf },
}

#[derive(Subcommand)]
enum Tightness {
    /// `A = diag(σ)` with σ given comma separated, step `s`.
    Linear {
        #[arg(value_parser = parse_list)]
        sigma: Sigma,
        s: f64,
        out: PathBuf,
    },
    Sublinear {
        k_target: usize,
        c_factor: f64,
        l_a: f64,
        m: usize,
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveFlags {
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    ids_every: Option<usize>,
    /// AGD tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trace path; only with a single config.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone)]
struct Sigma(Vec<f64>);

fn parse_list(s: &str) -> std::result::Result<Sigma, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'")))
        .collect::<std::result::Result<_, _>>()
        .map(Sigma)
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a = a.trim().parse().map_err(|_| format!("bad window start '{a}'"))?;
    let b = b.trim().parse().map_err(|_| format!("bad window end '{b}'"))?;
    Ok((a, b))
}

fn solve(configs: &[PathBuf], flags: SolveFlags, jobs: usize) -> Result<()> {
    if flags.output.is_some() && configs.len() > 1 {
        return Err(Error::InvalidArgument("--output needs a single config".into()));
    }
    if jobs == 0 {
        return Err(Error::InvalidArgument("--jobs must be ≥ 1".into()));
    }
    let overrides = Overrides {
        algorithm: flags.algorithm,
        step_size: flags.step_size,
        max_iters: flags.max_iters,
        ids_every: flags.ids_every,
        tolerance: flags.tol,
        seed: flags.seed,
        output: flags.output,
    };
    let next = AtomicUsize::new(0);
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = configs.get(i) else { break };
                match run_experiment(path, &overrides) {
                    Ok(out) => {
                        let last = out.trace.rows.last();
                        println!(
                            "{}: {} rows -> {} (final ids {})",
                            path.display(),
                            out.trace.rows.len(),
                            out.output_path.display(),
                            last.and_then(|r| r.ids).map_or("n/a".into(), |v| format!("{v:.6e}")),
                        );
                    }
                    Err(e) => {
                        if configs.len() > 1 {
                            eprintln!("{}: {e}", path.display());
                        }
                        first_error.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    match first_error.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn describe(spec: &InstanceSpec) {
    println!("{}", spec.description());
    println!("step size {:e}", spec.step_size);
    match &spec.kind {
        InstanceKind::TightnessLinear { envelope, .. } => {
            println!("alpha {:e}, IDS(z0) {:e}", envelope.alpha, envelope.ids0);
            println!("envelope IDS(z_k) >= (1/12)(1 - 4 alpha^2)^k IDS(z0)");
        }
        InstanceKind::TightnessSublinear { envelope, .. } => {
            println!(
                "envelope at k = {}: {:e} (constant {:e}, ||z0 - z*||^2_P = {:e})",
                envelope.k_target,
                envelope.at(envelope.k_target),
                envelope.constant,
                envelope.dist0_sq
            );
        }
        _ => {}
    }
}

fn write_spec(spec: &InstanceSpec, out: &Path) -> Result<()> {
    write_native(out, &spec.problem, Some(&spec.z0))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn load_instance(path: &Path) -> Result<NativeFile> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps")) {
        let lp = read_mps(path)?;
        return Ok(NativeFile {
            problem: lp_to_saddle(&lp)?,
            start: None,
        });
    }
    read_native(path)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { configs, flags, jobs } => solve(&configs, flags, jobs)?,
        Command::GenLp {
            n,
            m,
            density,
            seed,
            out,
        } => {
            let spec = gen_random_lp(n, m, density, seed)?;
            describe(&spec);
            write_spec(&spec, &out)?;
            let InstanceKind::RandomLp { lp, .. } = &spec.kind else {
                unreachable!("gen_random_lp builds an LP")
            };
            let mut mps = out.clone().into_os_string();
            mps.push(".mps");
            let mps = PathBuf::from(mps);
            write_mps(&mps, lp, &format!("lp_{n}_{m}_{seed}"))?;
            println!("wrote {}", mps.display());
        }
        Command::Tightness { kind } => {
            let (spec, out) = match kind {
                Tightness::Linear { sigma, s, out } => (gen_tightness_linear(&sigma.0, s)?, out),
                Tightness::Sublinear {
                    k_target,
                    c_factor,
                    l_a,
                    m,
                    out,
                } => (gen_tightness_sublinear(k_target, c_factor, l_a, m)?, out),
            };
            describe(&spec);
            write_spec(&spec, &out)?;
        }
        Command::Audit { trace, instance } => {
            let trace = read_trace(&trace)?;
            let file = load_instance(&instance)?;
            let report = audit_theorems(&trace, &file.problem, file.start.as_deref())?;
            print!("{report}");
            return Ok(report.passed());
        }
        Command::Rate { trace, window } => {
            let trace = read_trace(&trace)?;
            let window = window.unwrap_or_else(|| default_window(&trace));
            let fit = fit_rate(&trace, window)?;
            println!(
                "window {}:{}  rows {}  slope {:.6e}  factor {:.6}  intercept {:.4}  r^2 {:.6}",
                fit.window.0,
                fit.window.1,
                fit.rows,
                fit.slope,
                fit.factor(),
                fit.intercept,
                fit.r_squared
            );
            if let Some(r) = rate_reference(&trace) {
                println!("theoretical slope -1/ceil(e/alpha^2) = {:.6e}", r.theoretical);
                if let Some(sp) = r.spectral {
                    println!(
                        "spectral slope ln(1 - s^2 sigma^2) = {sp:.6e}  (fit/spectral = {:.4})",
                        fit.slope / sp
                    );
                }
            }
        }
        Command::AgdStats { trace } => {
            let stats = agd_stats(&read_trace(&trace)?)?;
            println!(
                "evaluations {}  mean {:.3}  median {}  max {}",
                stats.evaluations, stats.mean, stats.median, stats.max
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
