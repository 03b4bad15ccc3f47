//! Run configuration file and the versioned JSON result document.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundsResult, PbGrid};
use crate::data::{SchemaConfig, SummaryRow};
use crate::error::{Error, Result};
use crate::estimands::{CovariateDistribution, EstimandSummary, Summary, WeightMode};
use crate::model::{MonotonicityMode, NormalPrior, PriorConfig, Stratum, PARAM_NAMES};
use crate::pipeline::TrialFit;
use crate::sampler::{SamplerConfig, SamplerWarning};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Major component of the tool version.
pub fn schema_version() -> u32 {
    TOOL_VERSION
        .split('.')
        .next()
        .and_then(|s| s.parse().ok())
        .expect("crate version has a numeric major")
}

/// Prior settings as written in a config file. The harmed-stratum prior
/// follows from `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    pub mode: MonotonicityMode,
    pub alpha: NormalPrior,
    pub theta0: NormalPrior,
    pub delta: NormalPrior,
}

impl Default for PriorSpec {
    fn default() -> Self {
        let p = PriorConfig::default();
        PriorSpec {
            mode: p.mode,
            alpha: p.alpha,
            theta0: p.theta0,
            delta: p.delta,
        }
    }
}

impl PriorSpec {
    pub fn to_prior(&self) -> PriorConfig {
        let mut p = PriorConfig::new(self.mode).with_alpha(self.alpha);
        p.theta0 = self.theta0;
        p.delta = self.delta;
        p
    }
}

/// Contents of the `--config` JSON file; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub weights: WeightMode,
    pub pb_grid: PbGrid,
    pub output: Option<PathBuf>,
    /// Free-form label of the analysis horizon, e.g. `"12"` for month 12.
    pub horizon: Option<String>,
    pub schema: SchemaConfig,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.to_prior().validate()?;
        self.sampler.validate()?;
        self.pb_grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub cell: String,
    pub seed: u64,
    pub parameters: Vec<String>,
    pub rhat: Vec<f64>,
    pub ess_bulk: Vec<f64>,
    pub divergences: Vec<usize>,
    pub step_size: Vec<f64>,
    pub mean_accept: Vec<f64>,
    pub warnings: Vec<SamplerWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub prior: PriorConfig,
    pub summary: EstimandSummary,
    pub cells: Vec<CellDiagnostics>,
}

impl FitReport {
    pub fn from_fit(fit: &TrialFit) -> Self {
        FitReport {
            prior: fit.prior,
            summary: fit.summary.clone(),
            cells: fit
                .cells
                .iter()
                .map(|c| CellDiagnostics {
                    cell: c.label.clone(),
                    seed: c.seed,
                    parameters: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
                    rhat: c.draws.rhat.clone(),
                    ess_bulk: c.draws.ess_bulk.clone(),
                    divergences: c.draws.chains.iter().map(|ch| ch.divergences).collect(),
                    step_size: c.draws.chains.iter().map(|ch| ch.step_size).collect(),
                    mean_accept: c.draws.chains.iter().map(|ch| ch.mean_accept).collect(),
                    warnings: c.draws.warnings.clone(),
                })
                .collect(),
        }
    }

    pub fn warnings(&self) -> impl Iterator<Item = String> + '_ {
        self.cells.iter().flat_map(move |c| {
            c.warnings
                .iter()
                .map(move |w| format!("[{}] cell {}: {w}", self.prior.mode, c.cell))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: Option<String>,
    pub sampler: SamplerConfig,
    pub weights: WeightMode,
    pub pb_grid: PbGrid,
    pub horizon: Option<String>,
}

/// Everything needed to redraw strata-proportion and risk-ratio plots
/// without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub data_summary: Vec<SummaryRow>,
    pub covariate_weights: Option<CovariateDistribution>,
    pub fits: Vec<FitReport>,
    pub bounds: Option<BoundsResult>,
    pub warnings: Vec<String>,
}

impl ResultDocument {
    pub fn new(config: ConfigEcho, data_summary: Vec<SummaryRow>) -> Self {
        ResultDocument {
            schema_version: schema_version(),
            tool_version: TOOL_VERSION.to_string(),
            config,
            data_summary,
            covariate_weights: None,
            fits: Vec::new(),
            bounds: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents)
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.flush().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn emit_results(doc: &ResultDocument, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, doc.to_json()?.as_bytes())
}

fn fmt_summary(s: &Summary) -> String {
    format!(
        "{:>7.4}  [{:.4}, {:.4}]  [{:.4}, {:.4}]",
        s.median, s.ci50.lo, s.ci50.hi, s.ci95.lo, s.ci95.hi
    )
}

pub fn render_estimand_summary(s: &EstimandSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "monotonicity: {}{}  ({} draws)",
        s.mode,
        s.horizon
            .as_deref()
            .map(|h| format!(", horizon t* = {h}"))
            .unwrap_or_default(),
        s.n_draws
    );
    let _ = writeln!(
        out,
        "{:<22}{:>7}  {:<18}  {:<18}",
        "quantity", "median", "50% CI", "95% CI"
    );
    for g in Stratum::ALL {
        let _ = writeln!(
            out,
            "{:<22}{}",
            format!("pi_{g}"),
            fmt_summary(s.stratum(g))
        );
    }
    let _ = writeln!(
        out,
        "{:<22}{}",
        "immune risk, control",
        fmt_summary(&s.immune_risk[0])
    );
    let _ = writeln!(
        out,
        "{:<22}{}",
        "immune risk, active",
        fmt_summary(&s.immune_risk[1])
    );
    let _ = writeln!(out, "{:<22}{}", "risk ratio", fmt_summary(&s.risk_ratio));
    let _ = writeln!(out, "P(RR < 1) = {:.3}", s.prob_rr_below_one);
    out
}

pub fn render_bounds(b: &BoundsResult) -> String {
    let mut out = String::new();
    let p = &b.proportions;
    let _ = writeln!(
        out,
        "identified proportions: doomed {:.4}, immune {:.4}, benefiter {:.4}",
        p.doomed, p.immune, p.benefiter
    );
    if p.monotonicity_violated {
        let _ = writeln!(out, "MONOTONICITY VIOLATED: P(S=0|Z=0) > P(S=0|Z=1)");
    }
    let _ = writeln!(
        out,
        "control immune risk (identified): {:.4}",
        b.denominator
    );
    let _ = writeln!(
        out,
        "active immune risk bounds: [{:.4}, {:.4}]",
        b.numerator.lo, b.numerator.hi
    );
    let hi = if b.risk_ratio.hi.is_finite() {
        format!("{:.4}", b.risk_ratio.hi)
    } else {
        "inf".to_string()
    };
    let _ = writeln!(out, "risk ratio bounds: [{:.4}, {hi}]", b.risk_ratio.lo);
    for w in &b.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
