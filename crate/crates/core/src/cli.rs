//! Command-line interface. [`run`] parses arguments, dispatches and returns
//! the exit code: 0 on success, 1 on data or validation errors, 2 on usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::em::{fit, EmConfig, InitStrategy, Xi};
use crate::experiments::{
    fit_slope_with, read_records_csv, run_experiment, write_records_csv, ExperimentConfig,
    ModelCWeights, ModelName, ModelSpec, Scale, SlopeFilter, SlopeFit,
};
use crate::io::{read_data_file, read_measure, write_data_csv, write_measure};
use crate::losses::{loss_d, loss_dbar, loss_wtilde, RBarTable};
use crate::measure::{sample, MetricKind, ScaleMode};
use crate::transport::wasserstein;

#[derive(Debug, Parser)]
#[command(
    name = "mixrates",
    version,
    about = "Penalized MLE and refined losses for Gaussian mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a k-component mixture to a data CSV with modified EM.
    Fit(FitArgs),
    /// Evaluate a loss between two measure files.
    Loss(LossArgs),
    /// Sample a data CSV from one of the simulation models.
    Simulate(SimulateArgs),
    /// Log-log slope of mean loss against n for an experiment CSV.
    Slope(SlopeArgs),
    /// Run a rate experiment and write its CSV and slope summary.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleModeArg {
    Fixed,
    Free,
}

#[derive(Debug, clap::Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    /// Penalty weight, a number or `logn`.
    #[arg(long, default_value = "logn", value_parser = parse_xi)]
    xi: Xi,
    #[arg(long, value_enum, default_value = "free")]
    scale_mode: ScaleModeArg,
    /// Known isotropic variance used with `--scale-mode fixed`.
    #[arg(long, default_value_t = crate::experiments::KNOWN_VARIANCE)]
    sigma2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Where to write the fitted measure (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    D,
    Dbar,
    Wtilde,
    Wasserstein,
}

#[derive(Debug, clap::Args)]
struct LossArgs {
    #[arg(long, value_enum)]
    loss: LossArg,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    g0: PathBuf,
    /// Measure generating the cells of `wtilde`.
    #[arg(long)]
    gstar: Option<PathBuf>,
    /// Order of the Wasserstein distance.
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CWeightsArg {
    Balanced,
    Uniform,
}

impl From<CWeightsArg> for ModelCWeights {
    fn from(w: CWeightsArg) -> Self {
        match w {
            CWeightsArg::Balanced => ModelCWeights::CellBalanced,
            CWeightsArg::Uniform => ModelCWeights::Uniform,
        }
    }
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model C weights.
    #[arg(long, value_enum, default_value = "balanced")]
    c_weights: CWeightsArg,
    /// Data CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the true measure (JSON).
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SlopeArgs {
    /// Experiment CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Average only records that met the EM tolerance.
    #[arg(long)]
    converged_only: bool,
    /// Where to write the summary (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Debug, clap::Args)]
struct ReproduceArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Model C weights.
    #[arg(long, value_enum, default_value = "balanced")]
    c_weights: CWeightsArg,
    /// Worker threads (default: MIXRATES_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall times (output is then not byte-reproducible).
    #[arg(long)]
    timing: bool,
}

fn parse_xi(s: &str) -> std::result::Result<Xi, String> {
    if s == "logn" {
        return Ok(Xi::LogN);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Xi::Value(v)),
        _ => Err(format!(
            "expected a non-negative number or `logn`, got {s:?}"
        )),
    }
}

fn parse_model(s: &str) -> std::result::Result<ModelName, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Usage error detected after parsing.
struct Usage(String);

/// Summary written by `slope` and `reproduce`.
#[derive(Debug, Serialize)]
struct Summary<'a> {
    source: String,
    records: usize,
    filter: &'static str,
    #[serde(flatten)]
    fit: &'a SlopeFit,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().ansi().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(&a, out).map(Ok),
        Command::Loss(a) => cmd_loss(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out).map(Ok),
        Command::Slope(a) => cmd_slope(&a, out).map(Ok),
        Command::Reproduce(a) => cmd_reproduce(&a, out).map(Ok),
    };
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(Usage(msg))) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_data_file(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let d = data.ncols();
    let mut cfg = EmConfig::new(a.k, InitStrategy::RandomBox)
        .with_xi(a.xi)
        .with_max_iters(a.max_iters)
        .with_tol(a.tol);
    cfg = match a.scale_mode {
        ScaleModeArg::Fixed => cfg.with_fixed_covariance(DMatrix::identity(d, d) * a.sigma2),
        ScaleModeArg::Free => cfg.with_scale_mode(ScaleMode::Free),
    };
    let res = fit(&data, &cfg, a.seed)?;
    writeln!(out, "n = {}, d = {d}, k = {}", data.nrows(), a.k)?;
    writeln!(
        out,
        "iterations = {}, converged = {}",
        res.iterations, res.converged
    )?;
    writeln!(
        out,
        "penalized objective = {}",
        res.objective_trace.last().copied().unwrap_or(f64::NAN)
    )?;
    for (j, (w, atom)) in res.measure.iter().enumerate() {
        writeln!(
            out,
            "component {j}: weight = {w}, mean = {:?}",
            atom.mean().as_slice()
        )?;
    }
    if let Some(path) = &a.out {
        write_measure(path, &res.measure).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<crate::measure::MixingMeasure> {
    read_measure(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_loss(a: &LossArgs, out: &mut dyn Write) -> Result<std::result::Result<(), Usage>> {
    match a.loss {
        LossArg::Wtilde if a.gstar.is_none() => {
            return Ok(Err(Usage("--loss wtilde requires --gstar <path>".into())))
        }
        LossArg::Wasserstein if a.r.is_none() => {
            return Ok(Err(Usage("--loss wasserstein requires --r <real>".into())))
        }
        _ => {}
    }
    let g = load(&a.g)?;
    let g0 = load(&a.g0)?;
    let value = match a.loss {
        LossArg::D => loss_d(&g, &g0)?,
        LossArg::Dbar => loss_dbar(&g, &g0, &RBarTable::default())?,
        LossArg::Wtilde => loss_wtilde(&g, &g0, &load(a.gstar.as_deref().expect("checked"))?)?,
        LossArg::Wasserstein => {
            let metric = if g.has_atom_covariances() && g0.has_atom_covariances() {
                MetricKind::Composite
            } else {
                MetricKind::MeanOnly
            };
            wasserstein(&g, &g0, a.r.expect("checked"), metric)?
        }
    };
    writeln!(out, "{value}")?;
    Ok(Ok(()))
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let k0 = a.k0.unwrap_or(match a.model {
        ModelName::A => 2,
        ModelName::B | ModelName::C => 3,
    });
    let k = match a.model {
        ModelName::A => 3,
        ModelName::B => 4,
        ModelName::C => k0,
    };
    let spec = ModelSpec::new(a.model, Some(k0), k)?.with_c_weights(a.c_weights.into());
    let truth = spec.true_measure(a.n)?;
    let data = sample(&truth, a.n, a.seed)?;
    let file =
        std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_data_csv(std::io::BufWriter::new(file), &data)?;
    if let Some(path) = &a.truth_out {
        write_measure(path, &truth).with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(
        out,
        "wrote {} samples from model {} (k0 = {k0}) to {}",
        a.n,
        a.model,
        a.out.display()
    )?;
    Ok(())
}

fn write_summary(out: &mut dyn Write, summary: &Summary) -> Result<()> {
    let fit = summary.fit;
    writeln!(out, "records = {}", summary.records)?;
    writeln!(out, "slope = {}", fit.slope)?;
    writeln!(out, "slope_se = {}", fit.slope_se)?;
    writeln!(out, "intercept = {}", fit.intercept)?;
    writeln!(out, "n,mean,std,error_bar,count,not_converged,excluded")?;
    for p in &fit.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.n, p.mean, p.std, p.error_bar, p.count, p.not_converged, p.excluded
        )?;
    }
    Ok(())
}

fn save_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn filter_name(filter: SlopeFilter) -> &'static str {
    match filter {
        SlopeFilter::Finite => "finite",
        SlopeFilter::ConvergedOnly => "converged",
    }
}

fn cmd_slope(a: &SlopeArgs, out: &mut dyn Write) -> Result<()> {
    let file =
        std::fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let records =
        read_records_csv(file).with_context(|| format!("reading {}", a.input.display()))?;
    let filter = if a.converged_only {
        SlopeFilter::ConvergedOnly
    } else {
        SlopeFilter::Finite
    };
    let fit = fit_slope_with(&records, filter)?;
    let summary = Summary {
        source: a.input.display().to_string(),
        records: records.len(),
        filter: filter_name(filter),
        fit: &fit,
    };
    write_summary(out, &summary)?;
    if let Some(path) = &a.out {
        save_summary(path, &summary)?;
    }
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let spec = ModelSpec::new(a.model, a.k0, a.k)?.with_c_weights(a.c_weights.into());
    let scale = match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let stem = format!("model_{}_k{}_k0{}", spec.name, spec.k, spec.k0);
    let mut cfg = ExperimentConfig::at_scale(spec, scale, a.seed);
    cfg.threads = a.threads;
    cfg.timing = a.timing;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let records = run_experiment(&cfg)?;

    let csv_path = a.out_dir.join(format!("{stem}.csv"));
    let file = std::fs::File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    write_records_csv(std::io::BufWriter::new(file), &records)?;

    let fit = fit_slope_with(&records, SlopeFilter::Finite)?;
    let summary = Summary {
        source: csv_path.display().to_string(),
        records: records.len(),
        filter: filter_name(SlopeFilter::Finite),
        fit: &fit,
    };
    write_summary(out, &summary)?;
    save_summary(&a.out_dir.join(format!("{stem}_summary.json")), &summary)?;
    Ok(())
}
