//! Command-line front end: `run`, `verify` and `rates`.
//!
//! Exit codes: 0 ok, 1 invariant failure, 2 usage or configuration error,
//! 3 numeric failure during a run.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::diagnostics::{default_window, fit_rate, RateFit, RateModel, ROW_COLUMNS};
use crate::engine::{run, RunOutcome, Trace};
use crate::problems;
use crate::schedules::{default_c_alpha, default_constant_steps, theta_tilde, RegimeSpec};
use crate::verify;
use crate::{Error, SaddleProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const CATALOG_HELP: &str = "\
Problems:
  bilinear        f(x,y) = xy                      (default regime: constant, tau = sigma = 0.2)
  csc             f(x,y) = xy - y^2/2              (default regime: accelerated, tau0 = sigma0 = 0.5)
  scsc            f(x,y) = x^2/2 + xy - y^2/2      (default regime: linear, theta = 0.6, alpha = 1)
  counterexample  f(x,y) = xy, start (1,1)         (default regime: adversarial, epsilon = 0.1)

Regimes:
  constant     theta_k = 1, constant tau and sigma        [--tau --sigma --c-alpha]
  accelerated  theta_{k+1} = 1/sqrt(1 + nu sigma_k)       [--tau0 --sigma0 --c-alpha], needs nu > 0
  linear       constant theta in (theta~, 1)              [--theta --alpha], needs mu, nu > 0
  adversarial  sigma_k = theta_k = epsilon, tau_k from y  [--epsilon], scalar problems only

Exit codes: 0 ok, 1 invariant failure, 2 usage/config error, 3 numeric failure.";

#[derive(Debug, Parser)]
#[command(name = "ogaprox", version, about = "OGAProx saddle-point solver and diagnostics", after_help = CATALOG_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeKind {
    Constant,
    Accelerated,
    Linear,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Power,
    Geometric,
}

impl From<ModelArg> for RateModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Power => RateModel::Power,
            ModelArg::Geometric => RateModel::Geometric,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Catalog problem.
    #[arg(long, default_value = "bilinear")]
    pub problem: String,
    /// Parameter regime (defaults to the problem's catalog regime).
    #[arg(long, value_enum)]
    pub regime: Option<RegimeKind>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub c_alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Primal start as comma-separated values (default: all ones).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Dual start as comma-separated values (default: all ones).
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<String>,
    /// Probe seed, recorded in the summary.
    #[arg(long, default_value_t = verify::PROBE_SEED)]
    pub seed: u64,
    /// Trace CSV output path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON output path (printed to stdout when omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Column used for the summary rate fit.
    #[arg(long, default_value = "value_error")]
    pub rate_column: String,
    /// Rate model (default: geometric for the linear regime, power otherwise).
    #[arg(long, value_enum)]
    pub rate_model: Option<ModelArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run OGAProx and write a trace and a summary.
    Run(Box<RunArgs>),
    /// Run invariant suites and print one line per check.
    Verify {
        /// Suite to run (problem, schedules, engine, counterexample, certificates, ergodic, sandwich, rates, all).
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Fit an empirical rate to a trace column.
    Rates {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "power")]
        model: ModelArg,
        #[arg(long, default_value = "value_error")]
        column: String,
        /// First k of the window (default: drop the first 10% of rows).
        #[arg(long)]
        from: Option<usize>,
        /// Last k of the window (default: last row).
        #[arg(long)]
        to: Option<usize>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run(args) => cmd_run(&args, &mut out),
        Command::Verify { suite } => cmd_verify(&suite, &mut out),
        Command::Rates {
            trace,
            model,
            column,
            from,
            to,
        } => cmd_rates(&trace, model.into(), &column, from, to, &mut out),
    }
}

fn config_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

fn parse_point(text: &str, dim: usize) -> Result<DVector<f64>, String> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| format!("cannot parse point '{text}': {e}"))?;
    if values.len() != dim {
        return Err(format!(
            "point '{text}' has {} entries, expected {dim}",
            values.len()
        ));
    }
    Ok(DVector::from_vec(values))
}

/// The regime selected by the flags, starting from the catalog default.
pub fn regime_from_args(
    args: &RunArgs,
    problem: &SaddleProblem,
    default: RegimeSpec,
) -> RegimeSpec {
    let c = problem.constants();
    let kind = args.regime.unwrap_or(match default {
        RegimeSpec::ConstantUnit { .. } => RegimeKind::Constant,
        RegimeSpec::Accelerated { .. } => RegimeKind::Accelerated,
        RegimeSpec::LinearRate { .. } => RegimeKind::Linear,
        RegimeSpec::Adversarial { .. } => RegimeKind::Adversarial,
    });
    let c_alpha = args.c_alpha.unwrap_or(match default {
        RegimeSpec::ConstantUnit { c_alpha, .. } | RegimeSpec::Accelerated { c_alpha, .. } => {
            c_alpha
        }
        _ => default_c_alpha(c.l_yx),
    });
    let fallback_step = default_constant_steps(c_alpha, c.l_yx, c.l_yy);
    match kind {
        RegimeKind::Constant => {
            let (tau, sigma) = match default {
                RegimeSpec::ConstantUnit { tau, sigma, .. } => (tau, sigma),
                _ => (fallback_step, fallback_step),
            };
            RegimeSpec::ConstantUnit {
                tau: args.tau.unwrap_or(tau),
                sigma: args.sigma.unwrap_or(sigma),
                c_alpha,
            }
        }
        RegimeKind::Accelerated => {
            let (tau0, sigma0) = match default {
                RegimeSpec::Accelerated { tau0, sigma0, .. } => (tau0, sigma0),
                _ => (fallback_step, fallback_step),
            };
            RegimeSpec::Accelerated {
                tau0: args.tau0.or(args.tau).unwrap_or(tau0),
                sigma0: args.sigma0.or(args.sigma).unwrap_or(sigma0),
                c_alpha,
            }
        }
        RegimeKind::Linear => {
            let (theta, alpha) = match default {
                RegimeSpec::LinearRate { theta, alpha } => (theta, alpha),
                _ => {
                    let tt = theta_tilde(1.0, c.mu, c.nu, c.l_yx, c.l_yy);
                    ((1.0 + tt) / 2.0, 1.0)
                }
            };
            RegimeSpec::LinearRate {
                theta: args.theta.unwrap_or(theta),
                alpha: args.alpha.unwrap_or(alpha),
            }
        }
        RegimeKind::Adversarial => {
            let epsilon = match default {
                RegimeSpec::Adversarial { epsilon } => epsilon,
                _ => 0.1,
            };
            RegimeSpec::Adversarial {
                epsilon: args.epsilon.unwrap_or(epsilon),
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub problem: String,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub outcome: String,
}

#[derive(Debug, Serialize)]
pub struct Floors {
    pub min_x: f64,
    pub min_y: f64,
    pub min_f_ergodic: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub run: RunInfo,
    pub regime: RegimeSpec,
    pub iters: usize,
    pub final_value_error: f64,
    pub fitted_rate: Option<RateFit>,
    pub floors: Floors,
    pub max_abs_gap: f64,
    pub violations: usize,
}

/// Builds the summary of a finished run.
pub fn summarize(trace: &Trace, seed: u64, column: &str, model: RateModel) -> Summary {
    let rows = &trace.rows;
    let (lo, hi) = default_window(rows.len());
    let mut ks = Vec::new();
    let mut es = Vec::new();
    for r in rows.iter().filter(|r| r.k >= lo && r.k <= hi) {
        if let Some(v) = r.column(column) {
            ks.push(r.k as f64);
            es.push(v);
        }
    }
    let fitted_rate = fit_rate(&ks, &es, model).ok();
    let iterates = &trace.iterates[1..];
    let outcome = match &trace.outcome {
        RunOutcome::Completed => "completed".to_string(),
        RunOutcome::StoppedByObserver(r) => format!("stopped: {r}"),
        RunOutcome::Failed(e) => format!("failed: {e}"),
    };
    Summary {
        run: RunInfo {
            problem: trace.problem_label.clone(),
            seed,
            x0: trace.x0().iter().copied().collect(),
            y0: trace.y0().iter().copied().collect(),
            outcome,
        },
        regime: trace.regime,
        iters: rows.len(),
        final_value_error: rows.last().map_or(f64::NAN, |r| r.value_error),
        fitted_rate,
        floors: Floors {
            min_x: iterates
                .iter()
                .map(|(x, _)| x.min())
                .fold(f64::INFINITY, f64::min),
            min_y: iterates
                .iter()
                .map(|(_, y)| y.min())
                .fold(f64::INFINITY, f64::min),
            min_f_ergodic: rows
                .iter()
                .map(|r| r.f_ergodic)
                .fold(f64::INFINITY, f64::min),
        },
        max_abs_gap: rows.iter().map(|r| r.gap_ergodic.abs()).fold(0.0, f64::max),
        violations: rows.iter().map(|r| r.violations).sum(),
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the trace as CSV; dimensions up to 3 also get per-coordinate columns.
pub fn write_trace_csv<W: Write>(trace: &Trace, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let (nx, ny) = (trace.x0().len(), trace.y0().len());
    let coords = nx <= 3 && ny <= 3;
    let mut header: Vec<String> = ROW_COLUMNS.iter().map(|s| s.to_string()).collect();
    if coords {
        header.extend((0..nx).map(|i| format!("x_{i}")));
        header.extend((0..ny).map(|i| format!("y_{i}")));
    }
    w.write_record(&header)?;
    for row in &trace.rows {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        rec.push(row.k.to_string());
        for name in &ROW_COLUMNS[1..] {
            rec.push(fmt_num(row.column(name).expect("known column")));
        }
        if coords {
            let (x, y) = &trace.iterates[row.k];
            rec.extend(x.iter().chain(y.iter()).map(|v| fmt_num(*v)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A trace file read back as named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_trace_csv(path: &Path) -> Result<TraceTable, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(vals.map_err(|e| format!("{}: row {}: {e}", path.display(), i + 1))?);
    }
    Ok(TraceTable { headers, rows })
}

fn write_file(path: &Path, f: impl FnOnce(File) -> Result<(), String>) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    f(file)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> i32 {
    let entry = match problems::lookup(&args.problem) {
        Ok(e) => e,
        Err(e) => return config_error(e),
    };
    let problem = match entry.build() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let regime = regime_from_args(args, &problem, entry.default_regime);
    if matches!(regime, RegimeSpec::Adversarial { .. })
        && (problem.dim_x() != 1 || problem.dim_y() != 1)
    {
        return config_error("the adversarial regime needs a scalar problem");
    }
    let start = |text: &Option<String>, dim: usize| match text {
        Some(t) => parse_point(t, dim),
        None => Ok(DVector::from_element(dim, 1.0)),
    };
    let (x0, y0) = match (
        start(&args.x0, problem.dim_x()),
        start(&args.y0, problem.dim_y()),
    ) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return config_error(e),
    };
    let trace = match run(&problem, regime, x0, y0, args.iters, &mut []) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let trace = Trace {
        problem_label: entry.label.to_string(),
        ..trace
    };
    if let Some(path) = &args.trace {
        let written = write_file(path, |f| {
            write_trace_csv(&trace, io::BufWriter::new(f)).map_err(|e| e.to_string())
        });
        if let Err(e) = written {
            return config_error(e);
        }
    }
    let model = args
        .rate_model
        .map(RateModel::from)
        .unwrap_or(match regime {
            RegimeSpec::LinearRate { .. } => RateModel::Geometric,
            _ => RateModel::Power,
        });
    if !crate::diagnostics::ROW_COLUMNS.contains(&args.rate_column.as_str()) {
        return config_error(format!("unknown rate column '{}'", args.rate_column));
    }
    let summary = summarize(&trace, args.seed, &args.rate_column, model);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &args.summary {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                return config_error(format!("{}: {e}", path.display()));
            }
        }
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    match &trace.outcome {
        RunOutcome::Failed(e) => {
            eprintln!("error: {e}");
            EXIT_NUMERIC
        }
        _ if summary.violations > 0 => {
            eprintln!("error: {} invariant violations", summary.violations);
            EXIT_INVARIANT
        }
        _ => EXIT_OK,
    }
}

pub fn cmd_verify(suite: &str, out: &mut dyn Write) -> i32 {
    let results = if suite == "all" {
        verify::run_all()
    } else {
        verify::run_suite(suite)
    };
    let results = match results {
        Ok(r) => r,
        Err(Error::InvalidArgument(msg)) => return config_error(msg),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NUMERIC;
        }
    };
    for r in &results {
        let _ = writeln!(out, "{r}");
    }
    let failed = verify::failures(&results);
    let _ = writeln!(out, "{} checks, {} failed", results.len(), failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

pub fn cmd_rates(
    trace: &Path,
    model: RateModel,
    column: &str,
    from: Option<usize>,
    to: Option<usize>,
    out: &mut dyn Write,
) -> i32 {
    let table = match read_trace_csv(trace) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let (ks, values) = match (table.column("k"), table.column(column)) {
        (Some(k), Some(v)) => (k, v),
        _ => return config_error(format!("trace lacks column 'k' or '{column}'")),
    };
    let (lo, _) = default_window(ks.len());
    let (lo, hi) = (
        from.unwrap_or(lo) as f64,
        to.map_or(f64::INFINITY, |t| t as f64),
    );
    let (ks, values): (Vec<f64>, Vec<f64>) = ks
        .into_iter()
        .zip(values)
        .filter(|(k, _)| *k >= lo && *k <= hi)
        .unzip();
    match fit_rate(&ks, &values, model) {
        Ok(fit) => {
            let _ = writeln!(
                out,
                "column={column} model={} value={:.16e} residual={:.6e} points={}",
                model.name(),
                fit.value,
                fit.residual,
                fit.points
            );
            EXIT_OK
        }
        Err(e) => config_error(e),
    }
}
