//! Gradient-based posterior sampling with windowed warmup adaptation,
//! plus a random-walk Metropolis reference sampler for cross-checks.

pub mod adapt;
pub mod diagnostics;
pub mod nuts;
pub mod rwm;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::CellCounts;
use crate::error::{Error, Result};
use crate::model::{CellPosterior, PriorConfig};

use adapt::{DualAverage, DualAverageSettings, VarianceEstimator};
use nuts::{Metric, Point};

pub use rwm::{rwm_reference, rwm_sample, RwmConfig};

/// A differentiable log density. Implementations must be pure so one
/// instance can serve several chains at once.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density.
    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.log_density_and_grad(x, &mut g)
    }
}

/// Independent standard normals; handy as a known target.
#[derive(Debug, Clone, Copy)]
pub struct StdNormalTarget {
    pub dim: usize,
}

impl LogDensity for StdNormalTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        for (g, v) in grad.iter_mut().zip(x) {
            *g = -v;
        }
        -0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_sampling: usize,
    pub seed: u64,
    pub target_accept: f64,
    /// Cap on leapfrog steps per iteration; rounded down to a power of two.
    pub max_tree_or_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 4,
            n_warmup: 1000,
            n_sampling: 1000,
            seed: 20_190_503,
            target_accept: 0.8,
            max_tree_or_steps: 1024,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_sampling == 0 || self.max_tree_or_steps == 0 {
            return Err(Error::Config(
                "n_chains, n_sampling and max_tree_or_steps must be positive".into(),
            ));
        }
        if self.n_warmup < 100 {
            return Err(Error::Config(format!(
                "n_warmup must be at least 100, got {}",
                self.n_warmup
            )));
        }
        if !(self.target_accept > 0.5 && self.target_accept < 0.99) {
            return Err(Error::Config(format!(
                "target_accept must lie in (0.5, 0.99), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }

    pub fn max_depth(&self) -> u32 {
        self.max_tree_or_steps.max(1).ilog2()
    }
}

/// Per-chain RNG: one ChaCha stream per chain index under a shared seed.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    /// `n_sampling x dim` saved draws.
    pub draws: Array2<f64>,
    pub divergences: usize,
    pub mean_accept: f64,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub n_leapfrog: u64,
    /// Energy error of every saved transition.
    pub energy_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerWarning {
    Divergences { count: usize, fraction: f64 },
    HighRhat { parameter: usize, rhat: f64 },
}

impl std::fmt::Display for SamplerWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerWarning::Divergences { count, fraction } => write!(
                f,
                "{count} divergent transitions ({:.2}% of sampling iterations)",
                100.0 * fraction
            ),
            SamplerWarning::HighRhat { parameter, rhat } => {
                write!(f, "R-hat {rhat:.4} for parameter {parameter} exceeds 1.01")
            }
        }
    }
}

/// Saved draws from several chains plus cross-chain diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub chains: Vec<ChainResult>,
    pub rhat: Vec<f64>,
    pub ess_bulk: Vec<f64>,
    pub warnings: Vec<SamplerWarning>,
}

impl PosteriorDraws {
    pub fn from_chains(chains: Vec<ChainResult>) -> Self {
        let dim = chains[0].draws.ncols();
        let mut out = PosteriorDraws {
            chains,
            rhat: Vec::with_capacity(dim),
            ess_bulk: Vec::with_capacity(dim),
            warnings: Vec::new(),
        };
        let enough = out.n_chains() >= 2 && out.n_draws() >= 4;
        for j in 0..dim {
            let cols = out.param_chains(j);
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            if enough {
                out.rhat.push(diagnostics::rhat(&refs));
                out.ess_bulk.push(diagnostics::bulk_ess(&refs));
            } else {
                out.rhat.push(f64::NAN);
                out.ess_bulk.push(f64::NAN);
            }
        }
        let div = out.total_divergences();
        let total = out.n_chains() * out.n_draws();
        let fraction = div as f64 / total as f64;
        if fraction > 0.01 {
            out.warnings.push(SamplerWarning::Divergences {
                count: div,
                fraction,
            });
        }
        for (j, &r) in out.rhat.iter().enumerate() {
            if !(r <= 1.01) && !r.is_nan() {
                out.warnings.push(SamplerWarning::HighRhat {
                    parameter: j,
                    rhat: r,
                });
            }
        }
        out
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Draws per chain.
    pub fn n_draws(&self) -> usize {
        self.chains[0].draws.nrows()
    }

    pub fn dim(&self) -> usize {
        self.chains[0].draws.ncols()
    }

    pub fn total_divergences(&self) -> usize {
        self.chains.iter().map(|c| c.divergences).sum()
    }

    /// Parameter `j` as one vector per chain.
    pub fn param_chains(&self, j: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.column(j).to_vec())
            .collect()
    }

    /// Parameter `j` pooled in chain-major order.
    pub fn flat(&self, j: usize) -> Vec<f64> {
        self.chains
            .iter()
            .flat_map(|c| c.draws.column(j).to_vec())
            .collect()
    }

    /// Draw `m` in chain-major order.
    pub fn row(&self, m: usize) -> Vec<f64> {
        let n = self.n_draws();
        self.chains[m / n].draws.row(m % n).to_vec()
    }

    pub fn mean(&self, j: usize) -> f64 {
        let v = self.flat(j);
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn sd(&self, j: usize) -> f64 {
        let v = self.flat(j);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
    }

    /// Monte-Carlo standard error of the posterior mean of parameter `j`.
    pub fn mcse_mean(&self, j: usize) -> f64 {
        let cols = self.param_chains(j);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        self.sd(j) / diagnostics::ess(&refs).sqrt()
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Warmup phase boundaries: settle, two mass-estimation halves, final tune.
fn warmup_schedule(n_warmup: usize) -> (usize, usize, usize) {
    let settle = (0.15 * n_warmup as f64).round() as usize;
    let fin = (0.10 * n_warmup as f64).round() as usize;
    let estimate = n_warmup - settle - fin;
    let first_end = settle + estimate / 2;
    (settle, first_end, settle + estimate)
}

fn run_one_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: Vec<f64>,
    cfg: &SamplerConfig,
    chain: usize,
    mut rng: ChaCha8Rng,
) -> Result<ChainResult> {
    let dim = target.dim();
    let max_depth = cfg.max_depth();
    let settings = DualAverageSettings {
        target: cfg.target_accept,
        ..Default::default()
    };
    let mut metric = Metric::unit(dim);
    let mut z = Point::new(target, init);
    let mut eps = nuts::initial_step_size(target, &metric, &z, 0.1, &mut rng);
    let mut da = DualAverage::new(settings, eps);
    let (settle, first_end, est_end) = warmup_schedule(cfg.n_warmup);
    let mut var_est = VarianceEstimator::new(dim);
    let mut moved = false;

    for i in 0..cfg.n_warmup {
        let t = nuts::transition(
            target,
            &metric,
            &z,
            da.current_step_size(),
            max_depth,
            &mut rng,
        );
        if t.point.q != z.q {
            moved = true;
        }
        da.advance(t.accept_stat);
        z = t.point;
        if i >= settle && i < est_end {
            var_est.add(&z.q);
        }
        if i + 1 == first_end || i + 1 == est_end {
            if let Some(v) = var_est.regularized() {
                metric.inv_mass = v;
            }
            var_est = VarianceEstimator::new(dim);
            eps = nuts::initial_step_size(target, &metric, &z, da.current_step_size(), &mut rng);
            da = DualAverage::new(settings, eps);
        }
    }
    if !moved {
        return Err(Error::SamplerStuck { chain });
    }
    let step_size = da.adapted_step_size();

    let mut draws = Array2::zeros((cfg.n_sampling, dim));
    let mut divergences = 0;
    let mut accept_sum = 0.0;
    let mut n_leapfrog = 0;
    let mut energy_errors = Vec::with_capacity(cfg.n_sampling);
    for i in 0..cfg.n_sampling {
        let t = nuts::transition(target, &metric, &z, step_size, max_depth, &mut rng);
        divergences += t.divergent as usize;
        accept_sum += t.accept_stat;
        n_leapfrog += t.n_leapfrog;
        energy_errors.push(t.energy_error);
        z = t.point;
        draws.row_mut(i).assign(&ndarray::ArrayView1::from(&z.q));
    }
    Ok(ChainResult {
        draws,
        divergences,
        mean_accept: accept_sum / cfg.n_sampling as f64,
        step_size,
        inv_mass: metric.inv_mass,
        n_leapfrog,
        energy_errors,
    })
}

/// Runs `cfg.n_chains` independent chains (in parallel) on any target.
/// Each chain's initial point comes from `init` applied to its own RNG
/// stream, so results do not depend on scheduling.
pub fn sample<T, F>(target: &T, init: F, cfg: &SamplerConfig) -> Result<PosteriorDraws>
where
    T: LogDensity + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(cfg.seed, c);
            let x0 = init(&mut rng);
            run_one_chain(target, x0, cfg, c, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws::from_chains(chains))
}

/// Prior draw truncated to within two prior sds of the mean, with the
/// harmed log-odds pinned at its prior mean.
pub fn initial_point<R: Rng + ?Sized>(prior: &PriorConfig, rng: &mut R) -> Vec<f64> {
    prior
        .marginals()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i == 2 {
                return p.mean;
            }
            let d = Normal::new(p.mean, p.sd).expect("validated prior");
            loop {
                let v: f64 = d.sample(rng);
                if (v - p.mean).abs() <= 2.0 * p.sd {
                    return v;
                }
            }
        })
        .collect()
}

/// Posterior draws of one covariate cell's parameters.
pub fn run_chains(
    counts: &CellCounts,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws> {
    prior.validate()?;
    let target = CellPosterior::new(*counts, *prior);
    sample(&target, |rng| initial_point(prior, rng), cfg)
}
