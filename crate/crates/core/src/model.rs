//! Principal stratification model for a single covariate cell.
//!
//! A subject belongs to one of four latent strata defined by the pair of
//! potential intercurrent-event outcomes `(S(0), S(1))`. Strata
//! probabilities are a softmax of log-odds `alpha` with the benefiter
//! log-odds fixed at zero. Outcome risks are `expit(theta0_g)` on control
//! and `expit(theta0_g + delta_g)` on active treatment.
//!
//! The free parameter vector has [`DIM`] entries laid out as
//! `[alpha_I, alpha_D, alpha_H, theta0_I, theta0_D, theta0_B, theta0_H,
//! delta_I, delta_D, delta_B, delta_H]`.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::CellCounts;
use crate::error::{Error, Result};

/// Number of free parameters per covariate cell.
pub const DIM: usize = 11;

/// Human-readable parameter names in vector order.
pub const PARAM_NAMES: [&str; DIM] = [
    "alpha_immune",
    "alpha_doomed",
    "alpha_harmed",
    "theta0_immune",
    "theta0_doomed",
    "theta0_benefiter",
    "theta0_harmed",
    "delta_immune",
    "delta_doomed",
    "delta_benefiter",
    "delta_harmed",
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    /// `S(0) = S(1) = 0`
    Immune,
    /// `S(0) = S(1) = 1`
    Doomed,
    /// `S(0) = 1, S(1) = 0`
    Benefiter,
    /// `S(0) = 0, S(1) = 1`
    Harmed,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [
        Stratum::Immune,
        Stratum::Doomed,
        Stratum::Benefiter,
        Stratum::Harmed,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Intercurrent-event outcome this stratum has under arm `z`.
    pub fn event_under(self, z: u8) -> u8 {
        let (s0, s1) = match self {
            Stratum::Immune => (0, 0),
            Stratum::Doomed => (1, 1),
            Stratum::Benefiter => (1, 0),
            Stratum::Harmed => (0, 1),
        };
        if z == 0 {
            s0
        } else {
            s1
        }
    }

    /// The two strata compatible with observing event `s` on arm `z`.
    pub fn compatible(s: u8, z: u8) -> [Stratum; 2] {
        match (s, z) {
            (0, 0) => [Stratum::Immune, Stratum::Harmed],
            (0, _) => [Stratum::Immune, Stratum::Benefiter],
            (_, 0) => [Stratum::Doomed, Stratum::Benefiter],
            _ => [Stratum::Doomed, Stratum::Harmed],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stratum::Immune => "immune",
            Stratum::Doomed => "doomed",
            Stratum::Benefiter => "benefiter",
            Stratum::Harmed => "harmed",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("logit requires 0 < p < 1, got {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}

/// `ln(expit(x))`, stable in both tails.
pub fn log_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_softmax_unchecked(alpha_immune: f64, alpha_doomed: f64, alpha_harmed: f64) -> [f64; 4] {
    let a = [alpha_immune, alpha_doomed, 0.0, alpha_harmed];
    let lse = log_sum_exp(&a);
    a.map(|v| v - lse)
}

/// Strata probabilities `(pi_I, pi_D, pi_B, pi_H)` from the three free
/// log-odds; the benefiter log-odds is fixed at 0.
pub fn softmax(alpha_immune: f64, alpha_doomed: f64, alpha_harmed: f64) -> Result<[f64; 4]> {
    if !(alpha_immune.is_finite() && alpha_doomed.is_finite() && alpha_harmed.is_finite()) {
        return Err(Error::Domain(format!(
            "softmax inputs must be finite, got ({alpha_immune}, {alpha_doomed}, {alpha_harmed})"
        )));
    }
    Ok(log_softmax_unchecked(alpha_immune, alpha_doomed, alpha_harmed).map(f64::exp))
}

/// Unconstrained parameters of one covariate cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub alpha_immune: f64,
    pub alpha_doomed: f64,
    pub alpha_harmed: f64,
    /// Control-arm outcome log-odds, indexed by [`Stratum::index`].
    pub theta0: [f64; 4],
    /// Treatment log-odds ratio, indexed by [`Stratum::index`].
    pub delta: [f64; 4],
}

impl CellParams {
    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), DIM, "parameter vector must have length {DIM}");
        CellParams {
            alpha_immune: x[0],
            alpha_doomed: x[1],
            alpha_harmed: x[2],
            theta0: [x[3], x[4], x[5], x[6]],
            delta: [x[7], x[8], x[9], x[10]],
        }
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.alpha_immune,
            self.alpha_doomed,
            self.alpha_harmed,
            self.theta0[0],
            self.theta0[1],
            self.theta0[2],
            self.theta0[3],
            self.delta[0],
            self.delta[1],
            self.delta[2],
            self.delta[3],
        ]
    }

    pub fn strata_probs(&self) -> [f64; 4] {
        log_softmax_unchecked(self.alpha_immune, self.alpha_doomed, self.alpha_harmed).map(f64::exp)
    }

    fn log_strata_probs(&self) -> [f64; 4] {
        log_softmax_unchecked(self.alpha_immune, self.alpha_doomed, self.alpha_harmed)
    }

    /// Outcome log-odds for stratum `g` under arm `z`.
    pub fn theta(&self, g: Stratum, z: u8) -> f64 {
        let i = g.index();
        if z == 0 {
            self.theta0[i]
        } else {
            self.theta0[i] + self.delta[i]
        }
    }

    pub fn risk(&self, g: Stratum, z: u8) -> f64 {
        expit(self.theta(g, z))
    }
}

/// The two-component Bernoulli mixture governing `Y` given `(S, Z) = (s, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMixture {
    pub strata: [Stratum; 2],
    pub weights: [f64; 2],
    pub success: [f64; 2],
}

pub fn cell_mixture(s: u8, z: u8, params: &CellParams) -> CellMixture {
    let strata = Stratum::compatible(s, z);
    let lp = params.log_strata_probs();
    let a = [lp[strata[0].index()], lp[strata[1].index()]];
    let lse = log_sum_exp(&a);
    CellMixture {
        strata,
        weights: a.map(|v| (v - lse).exp()),
        success: strata.map(|g| params.risk(g, z)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub const fn new(mean: f64, sd: f64) -> Self {
        NormalPrior { mean, sd }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - LN_SQRT_2PI
    }

    pub fn grad_log_density(&self, x: f64) -> f64 {
        -(x - self.mean) / (self.sd * self.sd)
    }
}

/// How strongly the prior rules out the harmed stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotonicityMode {
    Hard,
    Weak,
    None,
}

impl MonotonicityMode {
    pub const ALL: [MonotonicityMode; 3] = [
        MonotonicityMode::Hard,
        MonotonicityMode::Weak,
        MonotonicityMode::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonotonicityMode::Hard => "hard",
            MonotonicityMode::Weak => "weak",
            MonotonicityMode::None => "none",
        }
    }
}

impl fmt::Display for MonotonicityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MonotonicityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(MonotonicityMode::Hard),
            "weak" => Ok(MonotonicityMode::Weak),
            "none" => Ok(MonotonicityMode::None),
            other => Err(Error::Config(format!(
                "unknown monotonicity mode `{other}` (expected hard, weak or none)"
            ))),
        }
    }
}

/// Independent normal priors on the eleven free parameters.
///
/// `harmed` is always derived from `mode` (and `alpha` for
/// [`MonotonicityMode::None`]); change it through [`PriorConfig::with_mode`]
/// or [`PriorConfig::with_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub alpha: NormalPrior,
    pub harmed: NormalPrior,
    pub theta0: NormalPrior,
    pub delta: NormalPrior,
    pub mode: MonotonicityMode,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig::new(MonotonicityMode::Hard)
    }
}

impl PriorConfig {
    /// Per-cell defaults for a four-cell analysis: `N(0, 2^2)` on the
    /// free strata log-odds, `N(logit 0.3, 2^2)` on control log-odds and
    /// `N(0, 2^2)` on treatment log-odds ratios.
    pub fn new(mode: MonotonicityMode) -> Self {
        let alpha = NormalPrior::new(0.0, 2.0);
        PriorConfig {
            alpha,
            harmed: Self::harmed_for(mode, alpha),
            theta0: NormalPrior::new((0.3f64 / 0.7).ln(), 2.0),
            delta: NormalPrior::new(0.0, 2.0),
            mode,
        }
    }

    fn harmed_for(mode: MonotonicityMode, alpha: NormalPrior) -> NormalPrior {
        match mode {
            MonotonicityMode::Hard => NormalPrior::new(-50.0, 0.1),
            MonotonicityMode::Weak => NormalPrior::new(-2.0, 0.5),
            MonotonicityMode::None => alpha,
        }
    }

    pub fn with_mode(mut self, mode: MonotonicityMode) -> Self {
        self.mode = mode;
        self.harmed = Self::harmed_for(mode, self.alpha);
        self
    }

    pub fn with_alpha(mut self, alpha: NormalPrior) -> Self {
        self.alpha = alpha;
        self.harmed = Self::harmed_for(self.mode, alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("alpha", self.alpha),
            ("harmed", self.harmed),
            ("theta0", self.theta0),
            ("delta", self.delta),
        ] {
            if !(p.sd > 0.0 && p.sd.is_finite() && p.mean.is_finite()) {
                return Err(Error::Config(format!(
                    "prior `{name}` needs a finite mean and positive sd, got N({}, {})",
                    p.mean, p.sd
                )));
            }
        }
        Ok(())
    }

    /// Prior of each free parameter, in vector order.
    pub fn marginals(&self) -> [NormalPrior; DIM] {
        [
            self.alpha,
            self.alpha,
            self.harmed,
            self.theta0,
            self.theta0,
            self.theta0,
            self.theta0,
            self.delta,
            self.delta,
            self.delta,
            self.delta,
        ]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CellParams {
        let x = self.marginals().map(|p| {
            Normal::new(p.mean, p.sd)
                .expect("validated prior")
                .sample(rng)
        });
        CellParams::from_slice(&x)
    }
}

/// Log joint density of the complete-case counts of one cell.
pub fn log_likelihood(params: &CellParams, counts: &CellCounts) -> f64 {
    let lp = params.log_strata_probs();
    let mut total = 0.0;
    for z in 0..2u8 {
        for s in 0..2u8 {
            let strata = Stratum::compatible(s, z);
            for y in 0..2u8 {
                let n = counts.complete(z, s, y);
                if n == 0 {
                    continue;
                }
                let terms = strata.map(|g| lp[g.index()] + log_bernoulli(y, params.theta(g, z)));
                total += n as f64 * log_sum_exp(&terms);
            }
        }
    }
    total
}

fn log_bernoulli(y: u8, theta: f64) -> f64 {
    if y == 1 {
        log_expit(theta)
    } else {
        log_expit(-theta)
    }
}

pub fn log_prior(params: &CellParams, prior: &PriorConfig) -> f64 {
    params
        .to_array()
        .iter()
        .zip(prior.marginals())
        .map(|(&x, p)| p.log_density(x))
        .sum()
}

/// Log posterior (up to the evidence) and its exact gradient.
pub fn log_posterior_and_gradient(
    params: &CellParams,
    counts: &CellCounts,
    prior: &PriorConfig,
) -> (f64, [f64; DIM]) {
    let x = params.to_array();
    let mut grad = [0.0; DIM];
    let mut value = 0.0;
    for (i, p) in prior.marginals().iter().enumerate() {
        value += p.log_density(x[i]);
        grad[i] = p.grad_log_density(x[i]);
    }

    let lp = params.log_strata_probs();
    let pi = lp.map(f64::exp);
    // Free log-odds map to strata I, D, H; B is the fixed reference.
    const ALPHA_SLOTS: [(usize, Stratum); 3] = [
        (0, Stratum::Immune),
        (1, Stratum::Doomed),
        (2, Stratum::Harmed),
    ];
    for z in 0..2u8 {
        for s in 0..2u8 {
            let strata = Stratum::compatible(s, z);
            for y in 0..2u8 {
                let n = counts.complete(z, s, y);
                if n == 0 {
                    continue;
                }
                let n = n as f64;
                let thetas = strata.map(|g| params.theta(g, z));
                let terms = [
                    lp[strata[0].index()] + log_bernoulli(y, thetas[0]),
                    lp[strata[1].index()] + log_bernoulli(y, thetas[1]),
                ];
                let lse = log_sum_exp(&terms);
                value += n * lse;
                let resp = terms.map(|t| (t - lse).exp());

                for (slot, g) in ALPHA_SLOTS {
                    let r = strata
                        .iter()
                        .zip(resp)
                        .filter(|(h, _)| **h == g)
                        .map(|(_, r)| r)
                        .sum::<f64>();
                    grad[slot] += n * (r - pi[g.index()]);
                }
                for k in 0..2 {
                    let gi = strata[k].index();
                    let d = n * resp[k] * (y as f64 - expit(thetas[k]));
                    grad[3 + gi] += d;
                    if z == 1 {
                        grad[7 + gi] += d;
                    }
                }
            }
        }
    }
    (value, grad)
}

/// Log posterior of one cell, packaged as a sampler target.
#[derive(Debug, Clone)]
pub struct CellPosterior {
    pub counts: CellCounts,
    pub prior: PriorConfig,
}

impl CellPosterior {
    pub fn new(counts: CellCounts, prior: PriorConfig) -> Self {
        CellPosterior { counts, prior }
    }
}

impl crate::sampler::LogDensity for CellPosterior {
    fn dim(&self) -> usize {
        DIM
    }

    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (v, g) =
            log_posterior_and_gradient(&CellParams::from_slice(x), &self.counts, &self.prior);
        grad.copy_from_slice(&g);
        v
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let p = CellParams::from_slice(x);
        log_likelihood(&p, &self.counts) + log_prior(&p, &self.prior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn counts_from(entries: &[((u8, u8, u8), u64)]) -> CellCounts {
        let mut c = CellCounts::default();
        for &((z, s, y), n) in entries {
            c.add_complete(z, s, y, n);
        }
        c
    }

    #[test]
    fn expit_logit_examples() {
        assert_eq!(expit(0.0), 0.5);
        assert_relative_eq!(
            logit(0.3).unwrap(),
            -0.847_297_860_387_203_6,
            epsilon = 1e-14
        );
        assert!((expit(logit(0.9).unwrap()) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn expit_saturates_without_overflow() {
        for x in [700.0, 710.0, 1e4, -700.0, -745.0, -1e4] {
            let p = expit(x);
            assert!(
                p.is_finite() && (0.0..=1.0).contains(&p),
                "expit({x}) = {p}"
            );
        }
        assert_eq!(expit(800.0), 1.0);
        assert!(log_expit(-800.0).is_finite());
    }

    #[test]
    fn logit_rejects_boundary() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(logit(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(0.0, 0.0, 0.0).unwrap();
        for v in p {
            assert_relative_eq!(v, 0.25, epsilon = 1e-15);
        }
        let p = softmax(-50.0, 0.0, 0.0).unwrap();
        assert!(p[0] < 1e-21);
        for v in &p[1..] {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
        }
        // 40-digit reference values.
        let p = softmax(1.0, -1.0, -50.0).unwrap();
        assert_relative_eq!(p[0], 0.665_240_955_774_821_9, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.090_030_573_170_380_46, epsilon = 1e-15);
        assert_relative_eq!(p[2], 0.244_728_471_054_797_65, epsilon = 1e-15);
        assert_relative_eq!(p[3], 4.720_200_013_393_830e-23, max_relative = 1e-12);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax(f64::NAN, 0.0, 0.0).is_err());
        assert!(softmax(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn mixture_rows_match_strata_table() {
        let p =
            CellParams::from_slice(&[0.3, -0.2, -1.0, 0.1, 0.2, 0.3, 0.4, -0.5, 0.6, -0.7, 0.8]);
        let pi = p.strata_probs();
        let m = cell_mixture(0, 0, &p);
        assert_eq!(m.strata, [Stratum::Immune, Stratum::Harmed]);
        assert_relative_eq!(m.weights[0], pi[0] / (pi[0] + pi[3]), epsilon = 1e-15);
        let m = cell_mixture(0, 1, &p);
        assert_eq!(m.strata, [Stratum::Immune, Stratum::Benefiter]);
        assert_relative_eq!(m.weights[1], pi[2] / (pi[0] + pi[2]), epsilon = 1e-15);
        assert_relative_eq!(m.success[0], expit(0.1 - 0.5), epsilon = 1e-15);
        assert_relative_eq!(m.success[1], expit(0.3 - 0.7), epsilon = 1e-15);
        let m = cell_mixture(1, 0, &p);
        assert_eq!(m.strata, [Stratum::Doomed, Stratum::Benefiter]);
        assert_relative_eq!(m.success[0], expit(0.2), epsilon = 1e-15);
        let m = cell_mixture(1, 1, &p);
        assert_eq!(m.strata, [Stratum::Doomed, Stratum::Harmed]);
        assert_relative_eq!(m.success[1], expit(0.4 + 0.8), epsilon = 1e-15);
    }

    #[test]
    fn mixture_limits() {
        let eq = CellParams::from_slice(&[0.0; DIM]);
        let m = cell_mixture(1, 0, &eq);
        assert_eq!(m.weights, [0.5, 0.5]);

        let mut hard = eq;
        hard.alpha_harmed = -50.0;
        let m = cell_mixture(0, 0, &hard);
        assert!((m.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn likelihood_hand_values() {
        let zero = CellParams::from_slice(&[0.0; DIM]);
        assert_eq!(log_likelihood(&zero, &CellCounts::default()), 0.0);
        let one = counts_from(&[((1, 1, 0), 1)]);
        assert_relative_eq!(log_likelihood(&zero, &one), 0.25f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn prior_at_mode_and_one_sd() {
        let prior = PriorConfig::default();
        let mean = CellParams::from_slice(&prior.marginals().map(|p| p.mean));
        let expected: f64 = prior
            .marginals()
            .iter()
            .map(|p| -(p.sd * (2.0 * std::f64::consts::PI).sqrt()).ln())
            .sum();
        assert_relative_eq!(log_prior(&mean, &prior), expected, epsilon = 1e-12);

        let mut shifted = mean;
        shifted.alpha_immune += prior.alpha.sd;
        assert_relative_eq!(
            log_prior(&mean, &prior) - log_prior(&shifted, &prior),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hard_vs_none_prior_difference() {
        let x = CellParams::from_slice(&[0.0; DIM]);
        let hard = PriorConfig::new(MonotonicityMode::Hard);
        let none = PriorConfig::new(MonotonicityMode::None);
        // Reference values evaluated at 40 digits.
        assert_relative_eq!(
            hard.harmed.log_density(0.0),
            -124_998.616_353_440_21,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_prior(&x, &hard) - log_prior(&x, &none),
            -124_997.004_267_726_45,
            max_relative = 1e-13
        );
    }

    #[test]
    fn mode_sets_harmed_prior() {
        let p = PriorConfig::new(MonotonicityMode::Hard);
        assert_eq!(p.harmed, NormalPrior::new(-50.0, 0.1));
        let p = p.with_mode(MonotonicityMode::Weak);
        assert_eq!(p.harmed, NormalPrior::new(-2.0, 0.5));
        let p = p.with_mode(MonotonicityMode::None);
        assert_eq!(p.harmed, p.alpha);
        let p = p.with_alpha(NormalPrior::new(0.0, 1.0));
        assert_eq!(p.harmed, NormalPrior::new(0.0, 1.0));
    }

    #[test]
    fn invalid_prior_rejected() {
        let mut p = PriorConfig::default();
        p.delta.sd = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_counts_gradient_is_prior_gradient() {
        let prior = PriorConfig::new(MonotonicityMode::Weak);
        let x =
            CellParams::from_slice(&[0.4, -1.2, -2.5, 0.3, -0.2, 1.0, 0.0, 0.2, -0.3, 0.9, 1.1]);
        let (_, g) = log_posterior_and_gradient(&x, &CellCounts::default(), &prior);
        for (i, p) in prior.marginals().iter().enumerate() {
            assert_relative_eq!(
                g[i],
                -(x.to_array()[i] - p.mean) / (p.sd * p.sd),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn harmed_delta_gradient_is_prior_only_without_harmed_cells() {
        let prior = PriorConfig::new(MonotonicityMode::Hard);
        // Only (s=0, z=1) and (s=1, z=0) cells, neither of which involves Harmed.
        let counts = counts_from(&[((1, 0, 1), 7), ((1, 0, 0), 20), ((0, 1, 1), 3)]);
        let x =
            CellParams::from_slice(&[1.0, 0.5, -50.0, 0.3, -0.2, 1.0, 0.7, 0.2, -0.3, 0.9, 1.1]);
        let (_, g) = log_posterior_and_gradient(&x, &counts, &prior);
        assert_eq!(g[10], prior.delta.grad_log_density(1.1));
        assert_eq!(g[6], prior.theta0.grad_log_density(0.7));
    }
}
