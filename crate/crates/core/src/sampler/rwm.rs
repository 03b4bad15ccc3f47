//! Adaptive random-walk Metropolis. Slow but simple, it serves only as an
//! independent reference for the gradient-based sampler.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{chain_rng, initial_point, ChainResult, LogDensity, PosteriorDraws};
use crate::data::CellCounts;
use crate::error::{Error, Result};
use crate::model::{CellPosterior, PriorConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwmConfig {
    pub n_chains: usize,
    /// Iterations per chain; the first half adapts the proposal and is discarded.
    pub n_iters: usize,
    /// Keep every `thin`-th post-warmup state.
    pub thin: usize,
    pub seed: u64,
    /// Initial proposal sd for every coordinate.
    pub initial_scale: f64,
}

impl Default for RwmConfig {
    fn default() -> Self {
        RwmConfig {
            n_chains: 4,
            n_iters: 200_000,
            thin: 10,
            seed: 7,
            initial_scale: 0.05,
        }
    }
}

struct Welford {
    n: f64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Welford {
            n: 0.0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    fn add(&mut self, x: &DVector<f64>) {
        self.n += 1.0;
        let d = x - &self.mean;
        self.mean += &d / self.n;
        let d2 = x - &self.mean;
        self.m2 += &d * d2.transpose();
    }

    fn cov(&self) -> DMatrix<f64> {
        &self.m2 / (self.n - 1.0)
    }
}

fn chain<T: LogDensity + ?Sized>(
    target: &T,
    x0: Vec<f64>,
    cfg: &RwmConfig,
    chain: usize,
    rng: &mut impl Rng,
) -> Result<ChainResult> {
    let dim = target.dim();
    let warmup = cfg.n_iters / 2;
    let n_keep = (cfg.n_iters - warmup) / cfg.thin.max(1);
    let base = 2.38 * 2.38 / dim as f64;

    let mut x = DVector::from_vec(x0);
    let mut logp = target.log_density(x.as_slice());
    let mut chol = DMatrix::from_diagonal_element(dim, dim, cfg.initial_scale);
    let mut log_scale = 0.0f64;
    let mut stats = Welford::new(dim);
    let mut accepted_warmup = 0usize;
    let mut accepted = 0usize;

    let mut draws = Array2::zeros((n_keep, dim));
    let mut kept = 0;

    for i in 0..cfg.n_iters {
        let noise = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let prop = &x + (&chol * noise) * log_scale.exp();
        let lp = target.log_density(prop.as_slice());
        let log_alpha = if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp - logp
        };
        let accept = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
        if accept {
            x = prop;
            logp = lp;
        }

        if i < warmup {
            accepted_warmup += accept as usize;
            let a = log_alpha.min(0.0).exp();
            log_scale += (a - 0.234) / ((i + 1) as f64).powf(0.6);
            log_scale = log_scale.clamp(-10.0, 5.0);
            stats.add(&x);
            if i >= 1000 && i % 500 == 0 {
                let cov = stats.cov() * base + DMatrix::identity(dim, dim) * 1e-10;
                if let Some(c) = cov.cholesky() {
                    chol = c.l();
                    log_scale = 0.0;
                }
            }
        } else {
            accepted += accept as usize;
            if (i - warmup).is_multiple_of(cfg.thin.max(1)) && kept < n_keep {
                draws
                    .row_mut(kept)
                    .assign(&ndarray::ArrayView1::from(x.as_slice()));
                kept += 1;
            }
        }
    }
    if accepted_warmup == 0 {
        return Err(Error::SamplerStuck { chain });
    }
    let post = (cfg.n_iters - warmup).max(1);
    Ok(ChainResult {
        draws,
        divergences: 0,
        mean_accept: accepted as f64 / post as f64,
        step_size: log_scale.exp(),
        inv_mass: (0..dim)
            .map(|j| (0..=j).map(|k| chol[(j, k)].powi(2)).sum())
            .collect(),
        n_leapfrog: 0,
        energy_errors: Vec::new(),
    })
}

/// Adaptive random-walk Metropolis on any target (gradients unused).
pub fn rwm_sample<T, F>(target: &T, init: F, cfg: &RwmConfig) -> Result<PosteriorDraws>
where
    T: LogDensity + ?Sized,
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<f64> + Sync,
{
    if cfg.n_chains == 0 || cfg.n_iters < 4 * cfg.thin.max(1) {
        return Err(Error::Config(
            "random-walk reference needs chains and iterations".into(),
        ));
    }
    // Offset the stream so reference chains never share randomness with HMC chains.
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(cfg.seed, 1_000_000 + c);
            let x0 = init(&mut rng);
            chain(target, x0, cfg, c, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws::from_chains(chains))
}

/// Reference posterior for one covariate cell: four chains of `n_iters`.
pub fn rwm_reference(
    counts: &CellCounts,
    prior: &PriorConfig,
    n_iters: usize,
    seed: u64,
) -> Result<PosteriorDraws> {
    prior.validate()?;
    let target = CellPosterior::new(*counts, *prior);
    let cfg = RwmConfig {
        n_iters,
        seed,
        ..Default::default()
    };
    rwm_sample(&target, |rng| initial_point(prior, rng), &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::StdNormalTarget;

    #[test]
    fn recovers_std_normal() {
        let target = StdNormalTarget { dim: 4 };
        let cfg = RwmConfig {
            n_iters: 40_000,
            ..Default::default()
        };
        let d = rwm_sample(&target, |_| vec![1.0; 4], &cfg).unwrap();
        for j in 0..4 {
            assert!(d.mean(j).abs() < 4.0 * d.mcse_mean(j));
            assert!((d.sd(j) - 1.0).abs() < 0.1, "sd {}", d.sd(j));
        }
        assert_eq!(d.n_draws(), 2000);
    }

    #[test]
    fn degenerate_arm_still_finite() {
        let mut counts = CellCounts::default();
        counts.add_complete(1, 0, 1, 12);
        counts.add_complete(1, 0, 0, 60);
        counts.add_complete(1, 1, 0, 9);
        let d = rwm_reference(&counts, &PriorConfig::default(), 20_000, 3).unwrap();
        for c in &d.chains {
            assert!(c.draws.iter().all(|v| v.is_finite()));
        }
    }
}
