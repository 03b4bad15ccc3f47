//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 sampling failure (or diagnostic warnings under `--strict`).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::numerator_bounds;
use crate::data::{
    aggregate, parse_dataset, render_summary_table, summarize, write_dataset, TrialCounts,
};
use crate::error::{Error, Result};
use crate::estimands::{Interval, WeightMode};
use crate::model::{MonotonicityMode, Stratum};
use crate::pipeline::{fit_sensitivity, fit_trial, FitOptions};
use crate::report::{
    emit_results, render_bounds, render_estimand_summary, write_atomic, ConfigEcho, FitReport,
    ResultDocument, RunConfig,
};
use crate::sbc::{run_sbc, SbcConfig};
use crate::simulate::{gen_dataset, gen_matching, reference_summary, GroundTruth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SAMPLING: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pstrata",
    version,
    about = "Principal-stratum risk ratios for randomized trials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Hard,
    Weak,
    None,
}

impl From<ModeArg> for MonotonicityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hard => MonotonicityMode::Hard,
            ModeArg::Weak => MonotonicityMode::Weak,
            ModeArg::None => MonotonicityMode::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightsArg {
    Available,
    Randomized,
}

impl From<WeightsArg> for WeightMode {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::Available => WeightMode::Available,
            WeightsArg::Randomized => WeightMode::Randomized,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the sampler seed from the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the JSON result
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the Bayesian model and summarize the immune-stratum risk ratio
    Fit {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Fit under hard, weak and no monotonicity
        #[arg(long)]
        sensitivity: bool,
        #[arg(long, value_enum)]
        weights: Option<WeightsArg>,
        /// Fail with exit code 3 on R-hat > 1.01 or > 1% divergences
        #[arg(long)]
        strict: bool,
        /// Label of the analysis horizon
        #[arg(long)]
        horizon: Option<String>,
    },
    /// Nonparametric bounds on the immune-stratum risk ratio
    Bounds {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Restrict P[Y(1)=1 | benefiter] to at most the doomed-stratum risk
        #[arg(long)]
        pb_below_doomed: bool,
    },
    /// Simulate a subject-level dataset
    Simulate {
        /// Ground-truth JSON; defaults to a four-cell 2:1 trial
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Reproduce the built-in month-12 summary table exactly
        #[arg(long)]
        matched: bool,
        /// Output CSV (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulation-based calibration of the sampler
    Sbc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Subjects per simulated trial
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Per-cell, per-arm summary table of a dataset
    Summarize { data: PathBuf },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SamplerStuck { .. } => EXIT_SAMPLING,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn load_counts(path: &PathBuf, cfg: &RunConfig) -> Result<TrialCounts> {
    let records = parse_dataset(path, &cfg.schema)?;
    if records.is_empty() {
        return Err(Error::Data(format!("{}: no records", path.display())));
    }
    Ok(aggregate(&records))
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Fit {
            data,
            common,
            mode,
            sensitivity,
            weights,
            strict,
            horizon,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = mode {
                cfg.prior.mode = m.into();
            }
            if let Some(w) = weights {
                cfg.weights = w.into();
            }
            if horizon.is_some() {
                cfg.horizon = horizon;
            }
            cfg.validate()?;
            cmd_fit(&data, &cfg, sensitivity, strict, out, err)
        }
        Command::Bounds {
            data,
            common,
            pb_below_doomed,
        } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            cmd_bounds(&data, &cfg, pb_below_doomed, out)
        }
        Command::Simulate {
            truth,
            n,
            seed,
            matched,
            out: path,
        } => {
            let truth = match truth {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => GroundTruth::reference_trial(),
            };
            let csv = cmd_simulate(&truth, n, seed, matched)?;
            match path {
                Some(p) => write_atomic(&p, &csv)?,
                None => out.write_all(&csv).map_err(|e| Error::io("<stdout>", e))?,
            }
            Ok(EXIT_OK)
        }
        Command::Sbc {
            common,
            reps,
            n,
            mode,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = mode {
                cfg.prior.mode = m.into();
            }
            cfg.validate()?;
            let sbc = SbcConfig {
                n_reps: reps,
                n_subjects: n,
                prior: cfg.prior.to_prior(),
                sampler: cfg.sampler,
                seed: cfg.sampler.seed,
                ..Default::default()
            };
            let report = run_sbc(&sbc)?;
            for p in &report.parameters {
                let _ = writeln!(
                    out,
                    "{:<18} chi2 {:>7.2}  p {:.4}  {:?}",
                    p.parameter, p.chi2, p.p_value, p.histogram
                );
            }
            let _ = writeln!(
                out,
                "{} of {} parameters uniform at p > 0.01",
                report.n_uniform(0.01),
                report.parameters.len()
            );
            if let Some(p) = &cfg.output {
                write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Command::Summarize { data } => {
            let counts = load_counts(&data, &RunConfig::default())?;
            let _ = write!(out, "{}", render_summary_table(&summarize(&counts)));
            Ok(EXIT_OK)
        }
    }
}

fn echo(data: &std::path::Path, cfg: &RunConfig) -> ConfigEcho {
    ConfigEcho {
        input: Some(data.display().to_string()),
        sampler: cfg.sampler,
        weights: cfg.weights,
        pb_grid: cfg.pb_grid,
        horizon: cfg.horizon.clone(),
    }
}

pub fn cmd_fit(
    data: &std::path::Path,
    cfg: &RunConfig,
    sensitivity: bool,
    strict: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let counts = load_counts(&data.to_path_buf(), cfg)?;
    let opts = FitOptions {
        prior: cfg.prior.to_prior(),
        sampler: cfg.sampler,
        weights: cfg.weights,
        horizon: cfg.horizon.clone(),
    };
    let fits = if sensitivity {
        fit_sensitivity(&counts, &opts)?
    } else {
        vec![fit_trial(&counts, &opts)?]
    };

    let mut doc = ResultDocument::new(echo(data, cfg), summarize(&counts));
    doc.covariate_weights = Some(fits[0].covariates.clone());
    doc.fits = fits.iter().map(FitReport::from_fit).collect();
    match numerator_bounds(&counts.pooled(), &cfg.pb_grid) {
        Ok(b) => doc.bounds = Some(b),
        Err(e) => doc.warnings.push(format!("bounds unavailable: {e}")),
    }
    let diag: Vec<String> = doc.fits.iter().flat_map(|f| f.warnings()).collect();
    doc.warnings.extend(diag.iter().cloned());

    for f in &doc.fits {
        let _ = writeln!(out, "{}", render_estimand_summary(&f.summary));
    }
    if doc.fits.len() > 1 {
        let _ = writeln!(out, "{}", render_overlap(&doc.fits));
    }
    if let Some(b) = &doc.bounds {
        let _ = write!(out, "{}", render_bounds(b));
    }
    for w in &doc.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if let Some(p) = &cfg.output {
        emit_results(&doc, p)?;
    }
    Ok(if strict && !diag.is_empty() {
        EXIT_SAMPLING
    } else {
        EXIT_OK
    })
}

fn render_overlap(fits: &[FitReport]) -> String {
    let ci: Vec<(MonotonicityMode, Interval)> = fits
        .iter()
        .map(|f| (f.summary.mode, f.summary.risk_ratio.ci95))
        .collect();
    let mut s = String::from("95% risk-ratio interval overlap:");
    for i in 0..ci.len() {
        for j in i + 1..ci.len() {
            s.push_str(&format!(
                " {}/{}={}",
                ci[i].0,
                ci[j].0,
                if ci[i].1.overlaps(&ci[j].1) {
                    "yes"
                } else {
                    "no"
                }
            ));
        }
    }
    let pi = fits
        .iter()
        .map(|f| {
            format!(
                "{}: {:.3}",
                f.summary.mode,
                f.summary.stratum(Stratum::Immune).median
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    s.push_str(&format!("\nmedian pi_immune by mode: {pi}"));
    s
}

pub fn cmd_bounds(
    data: &std::path::Path,
    cfg: &RunConfig,
    pb_below_doomed: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let counts = load_counts(&data.to_path_buf(), cfg)?;
    let pooled = counts.pooled();
    let mut bounds = numerator_bounds(&pooled, &cfg.pb_grid)?;
    if pb_below_doomed {
        let doomed_events = pooled.with_event(1, 1);
        if doomed_events == 0 {
            return Err(Error::Data(
                "no active-arm subjects with the event; doomed risk undefined".into(),
            ));
        }
        bounds.restrict_pb(pooled.complete(1, 1, 1) as f64 / doomed_events as f64);
    }
    let _ = write!(out, "{}", render_bounds(&bounds));
    if let Some(p) = &cfg.output {
        let mut doc = ResultDocument::new(echo(data, cfg), summarize(&counts));
        doc.warnings = bounds.warnings.clone();
        doc.bounds = Some(bounds);
        emit_results(&doc, p)?;
    }
    Ok(EXIT_OK)
}

/// CSV bytes of a simulated dataset.
pub fn cmd_simulate(truth: &GroundTruth, n: usize, seed: u64, matched: bool) -> Result<Vec<u8>> {
    let records = if matched {
        gen_matching(&reference_summary(), truth, seed)?
    } else {
        gen_dataset(truth, n, seed)?.records
    };
    let mut buf = Vec::new();
    write_dataset(&records, &mut buf)?;
    Ok(buf)
}
