//! Posterior standardization over covariate cells and summaries of the
//! immune-stratum risk ratio.

use serde::{Deserialize, Serialize};

use crate::data::TrialCounts;
use crate::error::{Error, Result};
use crate::model::{expit, CellParams, MonotonicityMode, Stratum};
use crate::sampler::PosteriorDraws;

/// Which per-cell totals define the covariate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Complete cases per cell.
    #[default]
    Available,
    /// Randomized subjects per cell.
    Randomized,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "available" => Ok(WeightMode::Available),
            "randomized" => Ok(WeightMode::Randomized),
            other => Err(Error::Config(format!(
                "unknown weight mode `{other}` (expected available or randomized)"
            ))),
        }
    }
}

/// Empirical covariate distribution over cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDistribution {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
}

impl CovariateDistribution {
    pub fn new(labels: Vec<String>, raw: Vec<f64>) -> Result<Self> {
        if labels.len() != raw.len() || raw.is_empty() {
            return Err(Error::Data(
                "covariate weights need one entry per cell".into(),
            ));
        }
        if raw.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Data(
                "covariate weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Data("covariate weights sum to zero".into()));
        }
        Ok(CovariateDistribution {
            labels,
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn from_counts(counts: &TrialCounts, mode: WeightMode) -> Result<Self> {
        let labels = counts.cells.keys().cloned().collect();
        let raw = counts
            .cells
            .values()
            .map(|c| match mode {
                WeightMode::Available => c.total_complete() as f64,
                WeightMode::Randomized => (c.n_randomized[0] + c.n_randomized[1]) as f64,
            })
            .collect();
        Self::new(labels, raw)
    }
}

/// Marginal quantities, one entry per joint posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDraws {
    /// `pi[g][m]`
    pub pi: [Vec<f64>; 4],
    /// `risk[g][z][m]`
    pub risk: [[Vec<f64>; 2]; 4],
}

impl MarginalDraws {
    pub fn len(&self) -> usize {
        self.pi[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn risk_ratio(&self) -> Vec<f64> {
        let i = Stratum::Immune.index();
        self.risk[i][1]
            .iter()
            .zip(&self.risk[i][0])
            .map(|(a, b)| a / b)
            .collect()
    }
}

/// Standardizes cell-level draws over `covdist`. Draw `m` of every cell
/// is paired into joint draw `m`; cells are fitted independently, so the
/// pairing is a valid joint posterior draw.
pub fn marginalize(
    cells: &[&PosteriorDraws],
    covdist: &CovariateDistribution,
) -> Result<MarginalDraws> {
    if cells.len() != covdist.weights.len() || cells.is_empty() {
        return Err(Error::Data(format!(
            "{} cell fits but {} covariate weights",
            cells.len(),
            covdist.weights.len()
        )));
    }
    let n = cells[0].n_chains() * cells[0].n_draws();
    for c in cells {
        let found = c.n_chains() * c.n_draws();
        if found != n {
            return Err(Error::DrawCountMismatch { expected: n, found });
        }
    }

    let mut pi: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
    // Accumulates sum_x w_x pi_{g,x} expit(theta_{g,x}(z)).
    let mut weighted: [[Vec<f64>; 2]; 4] = std::array::from_fn(|_| [vec![0.0; n], vec![0.0; n]]);
    for (draws, &w) in cells.iter().zip(&covdist.weights) {
        for m in 0..n {
            let p = CellParams::from_slice(&draws.row(m));
            let probs = p.strata_probs();
            for g in Stratum::ALL {
                let gi = g.index();
                pi[gi][m] += w * probs[gi];
                for z in 0..2u8 {
                    weighted[gi][z as usize][m] += w * probs[gi] * expit(p.theta(g, z));
                }
            }
        }
    }
    let risk = std::array::from_fn(|g| {
        std::array::from_fn(|z| {
            weighted[g][z]
                .iter()
                .zip(&pi[g])
                .map(|(num, den)| if *den > 0.0 { num / den } else { f64::NAN })
                .collect()
        })
    });
    Ok(MarginalDraws { pi, risk })
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Median with equal-tailed 50% and 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub ci50: Interval,
    pub ci95: Interval,
}

impl Summary {
    pub fn of(draws: &[f64]) -> Self {
        let mut v: Vec<f64> = draws.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&v, p);
        Summary {
            median: q(0.5),
            ci50: Interval {
                lo: q(0.25),
                hi: q(0.75),
            },
            ci95: Interval {
                lo: q(0.025),
                hi: q(0.975),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: Stratum,
    pub proportion: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandSummary {
    pub mode: MonotonicityMode,
    pub horizon: Option<String>,
    pub n_draws: usize,
    pub strata: Vec<StratumSummary>,
    /// Immune-stratum outcome risk on control, then active.
    pub immune_risk: [Summary; 2],
    pub risk_ratio: Summary,
    pub prob_rr_below_one: f64,
}

impl EstimandSummary {
    pub fn stratum(&self, g: Stratum) -> &Summary {
        &self.strata[g.index()].proportion
    }
}

/// Summaries of the per-draw risk ratio and strata proportions.
pub fn risk_ratio_summary(
    marginal: &MarginalDraws,
    mode: MonotonicityMode,
    horizon: Option<String>,
) -> EstimandSummary {
    let rr = marginal.risk_ratio();
    let below = rr.iter().filter(|&&r| r < 1.0).count();
    let i = Stratum::Immune.index();
    EstimandSummary {
        mode,
        horizon,
        n_draws: rr.len(),
        strata: Stratum::ALL
            .iter()
            .map(|&g| StratumSummary {
                stratum: g,
                proportion: Summary::of(&marginal.pi[g.index()]),
            })
            .collect(),
        immune_risk: [
            Summary::of(&marginal.risk[i][0]),
            Summary::of(&marginal.risk[i][1]),
        ],
        risk_ratio: Summary::of(&rr),
        prob_rr_below_one: below as f64 / rr.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DIM;
    use crate::sampler::ChainResult;
    use ndarray::Array2;

    fn fake_draws(rows: &[[f64; DIM]]) -> PosteriorDraws {
        let mut a = Array2::zeros((rows.len(), DIM));
        for (i, r) in rows.iter().enumerate() {
            for j in 0..DIM {
                a[(i, j)] = r[j];
            }
        }
        let chain = ChainResult {
            draws: a,
            divergences: 0,
            mean_accept: 1.0,
            step_size: 1.0,
            inv_mass: vec![1.0; DIM],
            n_leapfrog: 0,
            energy_errors: vec![],
        };
        PosteriorDraws {
            chains: vec![chain],
            rhat: vec![1.0; DIM],
            ess_bulk: vec![1.0; DIM],
            warnings: vec![],
        }
    }

    fn row(seed: f64) -> [f64; DIM] {
        std::array::from_fn(|j| ((j as f64 + 1.0) * seed).sin())
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn single_cell_is_identity() {
        let d = fake_draws(&[row(0.3), row(1.1), row(-0.7)]);
        let cov = CovariateDistribution::new(vec!["a".into()], vec![5.0]).unwrap();
        let m = marginalize(&[&d], &cov).unwrap();
        for k in 0..3 {
            let p = CellParams::from_slice(&d.row(k));
            let probs = p.strata_probs();
            for g in Stratum::ALL {
                assert!((m.pi[g.index()][k] - probs[g.index()]).abs() < 1e-15);
                for z in 0..2u8 {
                    assert!((m.risk[g.index()][z as usize][k] - p.risk(g, z)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn equal_strata_probs_average_risks() {
        let a = row(0.3);
        let mut b = row(0.9);
        b[..3].copy_from_slice(&a[..3]);
        let da = fake_draws(&[a]);
        let db = fake_draws(&[b]);
        let cov = CovariateDistribution::new(vec!["a".into(), "b".into()], vec![1.0, 1.0]).unwrap();
        let m = marginalize(&[&da, &db], &cov).unwrap();
        let (pa, pb) = (CellParams::from_slice(&a), CellParams::from_slice(&b));
        for g in Stratum::ALL {
            for z in 0..2u8 {
                let avg = 0.5 * (pa.risk(g, z) + pb.risk(g, z));
                assert!((m.risk[g.index()][z as usize][0] - avg).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_draws_rejected() {
        let da = fake_draws(&[row(0.1), row(0.2)]);
        let db = fake_draws(&[row(0.1)]);
        let cov = CovariateDistribution::new(vec!["a".into(), "b".into()], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            marginalize(&[&da, &db], &cov),
            Err(Error::DrawCountMismatch { .. })
        ));
    }

    #[test]
    fn identical_arms_give_unit_ratio() {
        let rows: Vec<[f64; DIM]> = (0..101)
            .map(|k| {
                let mut r = row(k as f64 * 0.37);
                r[7] = 0.0;
                r
            })
            .collect();
        let d = fake_draws(&rows);
        let cov = CovariateDistribution::new(vec!["a".into()], vec![1.0]).unwrap();
        let m = marginalize(&[&d], &cov).unwrap();
        let s = risk_ratio_summary(&m, MonotonicityMode::Hard, None);
        assert!((s.risk_ratio.median - 1.0).abs() < 1e-12);
        // Exact ties are not counted as below one.
        assert!(s.prob_rr_below_one <= 0.5);
    }

    #[test]
    fn exchangeable_arms_split_evenly() {
        // Treatment effect draws symmetric about zero.
        let rows: Vec<[f64; DIM]> = (0..2000)
            .map(|k| {
                let mut r = row(0.5);
                let d = ((k / 2) as f64 * 0.013 + 0.001).sin();
                r[7] = if k % 2 == 0 { d } else { -d };
                r
            })
            .collect();
        let d = fake_draws(&rows);
        let cov = CovariateDistribution::new(vec!["a".into()], vec![1.0]).unwrap();
        let s = risk_ratio_summary(
            &marginalize(&[&d], &cov).unwrap(),
            MonotonicityMode::Hard,
            None,
        );
        assert!(
            (s.risk_ratio.median - 1.0).abs() < 1e-3,
            "{}",
            s.risk_ratio.median
        );
        assert!((s.prob_rr_below_one - 0.5).abs() < 0.01);
    }

    #[test]
    fn covariate_weights_validated() {
        assert!(CovariateDistribution::new(vec!["a".into()], vec![0.0]).is_err());
        assert!(CovariateDistribution::new(vec!["a".into()], vec![-1.0]).is_err());
        let c = CovariateDistribution::new(vec!["a".into(), "b".into()], vec![1.0, 3.0]).unwrap();
        assert_eq!(c.weights, vec![0.25, 0.75]);
    }
}
