//! Synthetic randomized trials generated from known strata and risks.
//!
//! Every subject draws a covariate cell, a latent stratum, an arm, and a
//! pair of potential outcomes. The intercurrent event is a deterministic
//! function of stratum and arm; the observed outcome is the potential
//! outcome under the assigned arm. `(S, Y)` are masked jointly with a
//! probability that depends only on cell and arm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::data::{SubjectRecord, SummaryRow};
use crate::error::{Error, Result};
use crate::model::{CellParams, PriorConfig, Stratum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTruth {
    pub label: String,
    /// Relative frequency of the cell; normalized across cells.
    pub weight: f64,
    /// `(pi_I, pi_D, pi_B, pi_H)`.
    pub strata: [f64; 4],
    /// `risk[g][z] = P[Y(z) = 1 | G = g]`.
    pub risk: [[f64; 2]; 4],
    /// Probability that `(S, Y)` is unobserved, per arm.
    #[serde(default)]
    pub missing: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cells: Vec<CellTruth>,
    /// Probability of assignment to the active arm.
    #[serde(default = "default_active_fraction")]
    pub active_fraction: f64,
}

fn default_active_fraction() -> f64 {
    2.0 / 3.0
}

impl CellTruth {
    pub fn from_params(label: impl Into<String>, params: &CellParams) -> Self {
        CellTruth {
            label: label.into(),
            weight: 1.0,
            strata: params.strata_probs(),
            risk: Stratum::ALL.map(|g| [params.risk(g, 0), params.risk(g, 1)]),
            missing: [0.0, 0.0],
        }
    }

    /// `P(Y=1 | S=s, Z=z)` implied by this cell.
    pub fn observed_risk(&self, s: u8, z: u8) -> f64 {
        let pair = Stratum::compatible(s, z);
        let mass: f64 = pair.iter().map(|g| self.strata[g.index()]).sum();
        if mass <= 0.0 {
            return f64::NAN;
        }
        pair.iter()
            .map(|g| self.strata[g.index()] * self.risk[g.index()][z as usize])
            .sum::<f64>()
            / mass
    }
}

impl GroundTruth {
    pub fn single_cell(cell: CellTruth) -> Self {
        GroundTruth {
            cells: vec![cell],
            active_fraction: default_active_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.cells.is_empty() {
            return bad("ground truth needs at least one cell".into());
        }
        if !(self.active_fraction > 0.0 && self.active_fraction < 1.0) {
            return bad(format!(
                "active fraction {} not in (0, 1)",
                self.active_fraction
            ));
        }
        for c in &self.cells {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return bad(format!("cell {}: weight must be non-negative", c.label));
            }
            if c.strata.iter().any(|p| !(0.0..=1.0).contains(p))
                || (c.strata.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return bad(format!(
                    "cell {}: strata probabilities must form a simplex",
                    c.label
                ));
            }
            if c.risk.iter().flatten().any(|p| !(*p > 0.0 && *p < 1.0)) {
                return bad(format!("cell {}: risks must lie in (0, 1)", c.label));
            }
            if c.missing.iter().any(|p| !(0.0..1.0).contains(p)) {
                return bad(format!("cell {}: missingness must lie in [0, 1)", c.label));
            }
        }
        if self.cells.iter().map(|c| c.weight).sum::<f64>() <= 0.0 {
            return bad("cell weights sum to zero".into());
        }
        Ok(())
    }

    fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.cells.iter().map(|c| c.weight).sum();
        self.cells.iter().map(|c| c.weight / total).collect()
    }

    pub fn marginal_strata(&self) -> [f64; 4] {
        let w = self.normalized_weights();
        std::array::from_fn(|g| {
            self.cells
                .iter()
                .zip(&w)
                .map(|(c, w)| w * c.strata[g])
                .sum()
        })
    }

    pub fn marginal_risk(&self, g: Stratum, z: u8) -> f64 {
        let w = self.normalized_weights();
        let gi = g.index();
        let num: f64 = self
            .cells
            .iter()
            .zip(&w)
            .map(|(c, w)| w * c.strata[gi] * c.risk[gi][z as usize])
            .sum();
        num / self.marginal_strata()[gi]
    }

    /// True immune-stratum risk ratio.
    pub fn risk_ratio(&self) -> f64 {
        self.marginal_risk(Stratum::Immune, 1) / self.marginal_risk(Stratum::Immune, 0)
    }

    /// Four cells shaped like a 2:1 trial with a 12-month horizon: strata
    /// proportions follow each cell's observed event rates and immune
    /// risks give a true risk ratio of 0.8.
    pub fn reference_trial() -> Self {
        let rows = reference_summary();
        let cells = rows
            .chunks(2)
            .map(|pair| {
                let (act, ctl) = (&pair[0], &pair[1]);
                let doomed = act.events as f64 / act.available as f64;
                let immune = 1.0 - ctl.events as f64 / ctl.available as f64;
                let benefiter = (1.0 - immune - doomed).max(0.005);
                let immune = 1.0 - doomed - benefiter;
                CellTruth {
                    label: act.cell.clone(),
                    weight: (act.available + ctl.available) as f64,
                    strata: [immune, doomed, benefiter, 0.0],
                    risk: [[0.25, 0.20], [0.35, 0.30], [0.30, 0.25], [0.30, 0.30]],
                    missing: [
                        1.0 - ctl.available as f64 / ctl.randomized as f64,
                        1.0 - act.available as f64 / act.randomized as f64,
                    ],
                }
            })
            .collect();
        GroundTruth {
            cells,
            active_fraction: default_active_fraction(),
        }
    }
}

/// Latent quantities of a simulated subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentRecord {
    pub stratum: Stratum,
    pub s0: u8,
    pub s1: u8,
    pub y0: u8,
    pub y1: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedTrial {
    pub records: Vec<SubjectRecord>,
    pub latent: Vec<LatentRecord>,
}

fn categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding slack: last category with positive mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Prior draws of the strata proportions, `[pi_immune, pi_doomed,
/// pi_benefiter, pi_harmed]` per draw.
pub fn prior_strata_draws(prior: &PriorConfig, n: usize, seed: u64) -> Result<Vec<[f64; 4]>> {
    prior.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| prior.sample(&mut rng).strata_probs())
        .collect())
}

pub fn gen_dataset(truth: &GroundTruth, n: usize, seed: u64) -> Result<SimulatedTrial> {
    truth.validate()?;
    let weights = truth.normalized_weights();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = &truth.cells[categorical(&mut rng, &weights)];
        let g = Stratum::ALL[categorical(&mut rng, &cell.strata)];
        let z = u8::from(rng.random::<f64>() < truth.active_fraction);
        let gi = g.index();
        let y0 = u8::from(rng.random::<f64>() < cell.risk[gi][0]);
        let y1 = u8::from(rng.random::<f64>() < cell.risk[gi][1]);
        let masked = rng.random::<f64>() < cell.missing[z as usize];
        let lat = LatentRecord {
            stratum: g,
            s0: g.event_under(0),
            s1: g.event_under(1),
            y0,
            y1,
        };
        let (s, y) = if z == 0 { (lat.s0, y0) } else { (lat.s1, y1) };
        records.push(if masked {
            SubjectRecord::missing(z, cell.label.clone())
        } else {
            SubjectRecord::complete(z, s, y, cell.label.clone())
        });
        latent.push(lat);
    }
    Ok(SimulatedTrial { records, latent })
}

/// Draws `k`, the count of subjects with both the event and the outcome,
/// from Fisher's noncentral hypergeometric distribution with the given
/// margins and odds ratio.
fn draw_joint_count<R: Rng + ?Sized>(
    total: u64,
    events: u64,
    outcomes: u64,
    odds_ratio: f64,
    rng: &mut R,
) -> u64 {
    let lo = (events + outcomes).saturating_sub(total);
    let hi = events.min(outcomes);
    let log_w: Vec<f64> = (lo..=hi)
        .map(|k| {
            ln_binomial(events, k)
                + ln_binomial(total - events, outcomes - k)
                + k as f64 * odds_ratio.ln()
        })
        .collect();
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - m).exp()).collect();
    lo + categorical(rng, &w) as u64
}

/// Subject-level records whose per-cell, per-arm summary equals `rows`
/// exactly. The split of outcomes between subjects with and without the
/// event is drawn from the truth's implied association; records are
/// shuffled.
pub fn gen_matching(
    rows: &[SummaryRow],
    truth: &GroundTruth,
    seed: u64,
) -> Result<Vec<SubjectRecord>> {
    truth.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for r in rows {
        if r.available > r.randomized || r.events > r.available || r.outcomes > r.available {
            return Err(Error::Data(format!(
                "inconsistent summary row for cell {} arm {}",
                r.cell, r.arm
            )));
        }
        let cell = truth
            .cells
            .iter()
            .find(|c| c.label == r.cell)
            .or(if truth.cells.len() == 1 {
                truth.cells.first()
            } else {
                None
            })
            .ok_or_else(|| Error::Config(format!("no ground truth for cell {}", r.cell)))?;
        let odds = |p: f64| p / (1.0 - p);
        let p1 = cell.observed_risk(1, r.arm);
        let p0 = cell.observed_risk(0, r.arm);
        let or = if p1.is_finite() && p0.is_finite() {
            odds(p1) / odds(p0)
        } else {
            1.0
        };
        let k = draw_joint_count(r.available, r.events, r.outcomes, or, &mut rng);

        let z = r.arm;
        let push = |out: &mut Vec<SubjectRecord>, s: u8, y: u8, n: u64| {
            for _ in 0..n {
                out.push(SubjectRecord::complete(z, s, y, r.cell.clone()));
            }
        };
        push(&mut out, 1, 1, k);
        push(&mut out, 1, 0, r.events - k);
        push(&mut out, 0, 1, r.outcomes - k);
        push(&mut out, 0, 0, r.available - r.events - r.outcomes + k);
        for _ in 0..(r.randomized - r.available) {
            out.push(SubjectRecord::missing(z, r.cell.clone()));
        }
    }
    // Fisher-Yates with the same stream.
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    Ok(out)
}

/// Published month-12 summary of a 2:1 placebo-controlled trial in four
/// covariate cells: randomized, available, relapses (event) and
/// disability progressions (outcome). Active arm first.
pub fn reference_summary() -> Vec<SummaryRow> {
    const ROWS: [(&str, u8, u64, u64, u64, u64); 8] = [
        ("cell_1", 1, 208, 167, 22, 30),
        ("cell_1", 0, 107, 81, 13, 22),
        ("cell_2", 1, 300, 236, 15, 51),
        ("cell_2", 0, 155, 126, 17, 35),
        ("cell_3", 1, 180, 145, 20, 20),
        ("cell_3", 0, 95, 74, 11, 18),
        ("cell_4", 1, 408, 317, 13, 61),
        ("cell_4", 0, 188, 137, 7, 20),
    ];
    ROWS.iter()
        .map(
            |&(cell, arm, randomized, available, events, outcomes)| SummaryRow {
                cell: cell.to_string(),
                arm,
                randomized,
                available,
                events,
                outcomes,
            },
        )
        .collect()
}
