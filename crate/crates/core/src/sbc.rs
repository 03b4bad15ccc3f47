//! Simulation-based calibration: draw parameters from the prior, simulate
//! a trial, fit it, and record where the truth ranks among thinned
//! posterior draws. A calibrated sampler yields uniform ranks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::aggregate;
use crate::error::Result;
use crate::model::{PriorConfig, DIM, PARAM_NAMES};
use crate::pipeline::derive_seed;
use crate::sampler::{run_chains, SamplerConfig};
use crate::simulate::{gen_dataset, CellTruth, GroundTruth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbcConfig {
    pub n_reps: usize,
    pub n_subjects: usize,
    pub prior: PriorConfig,
    pub sampler: SamplerConfig,
    /// Thinned posterior draws per rank; ranks take `n_rank_draws + 1` values.
    pub n_rank_draws: usize,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for SbcConfig {
    fn default() -> Self {
        SbcConfig {
            n_reps: 200,
            n_subjects: 500,
            prior: PriorConfig::default(),
            sampler: SamplerConfig::default(),
            n_rank_draws: 99,
            n_bins: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCalibration {
    pub parameter: String,
    pub histogram: Vec<usize>,
    pub chi2: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcReport {
    pub config: SbcConfig,
    /// `ranks[rep][param]`
    pub ranks: Vec<Vec<usize>>,
    pub parameters: Vec<ParamCalibration>,
}

impl SbcReport {
    /// Parameters whose rank histogram passes the chi-square test at `alpha`.
    pub fn n_uniform(&self, alpha: f64) -> usize {
        self.parameters.iter().filter(|p| p.p_value > alpha).count()
    }
}

/// Pearson chi-square statistic and p-value against equal bin counts.
pub fn uniformity_test(histogram: &[usize]) -> (f64, f64) {
    let total: usize = histogram.iter().sum();
    let expected = total as f64 / histogram.len() as f64;
    let chi2: f64 = histogram
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let dof = (histogram.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(chi2);
    (chi2, p)
}

fn one_replication(cfg: &SbcConfig, rep: usize) -> Result<Vec<usize>> {
    let rep_seed = derive_seed(cfg.seed, rep as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    let truth = cfg.prior.sample(&mut rng);
    let gt = GroundTruth::single_cell(CellTruth::from_params("cell", &truth));
    let sim = gen_dataset(&gt, cfg.n_subjects, derive_seed(rep_seed, 1))?;
    let counts = aggregate(&sim.records).pooled();
    let sampler = SamplerConfig {
        seed: derive_seed(rep_seed, 2),
        ..cfg.sampler
    };
    let draws = run_chains(&counts, &cfg.prior, &sampler)?;

    let total = draws.n_chains() * draws.n_draws();
    let stride = (total / cfg.n_rank_draws).max(1);
    let truth = truth.to_array();
    Ok((0..DIM)
        .map(|j| {
            let flat = draws.flat(j);
            flat.iter()
                .step_by(stride)
                .take(cfg.n_rank_draws)
                .filter(|&&v| v < truth[j])
                .count()
        })
        .collect())
}

pub fn run_sbc(cfg: &SbcConfig) -> Result<SbcReport> {
    cfg.prior.validate()?;
    cfg.sampler.validate()?;
    let ranks = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| one_replication(cfg, rep))
        .collect::<Result<Vec<_>>>()?;

    let n_values = cfg.n_rank_draws + 1;
    let parameters = (0..DIM)
        .map(|j| {
            let mut histogram = vec![0; cfg.n_bins];
            for r in &ranks {
                histogram[r[j] * cfg.n_bins / n_values] += 1;
            }
            let (chi2, p_value) = uniformity_test(&histogram);
            ParamCalibration {
                parameter: PARAM_NAMES[j].to_string(),
                histogram,
                chi2,
                p_value,
            }
        })
        .collect();
    Ok(SbcReport {
        config: cfg.clone(),
        ranks,
        parameters,
    })
}
