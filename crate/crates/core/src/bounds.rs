//! Nonparametric identification under monotonicity: strata proportions,
//! the control-arm immune risk, and the feasible range of the active-arm
//! immune risk.

use serde::{Deserialize, Serialize};

use crate::data::CellCounts;
use crate::error::{Error, Result};
use crate::estimands::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedProportions {
    pub doomed: f64,
    pub immune: f64,
    /// `1 - immune - doomed`; negative values are reported as observed.
    pub benefiter: f64,
    /// Set when `P(S=0 | Z=0) > P(S=0 | Z=1)`, which contradicts monotonicity.
    pub monotonicity_violated: bool,
}

/// Plug-in strata proportions from pooled complete cases.
pub fn strata_proportions_identified(counts: &CellCounts) -> Result<IdentifiedProportions> {
    for z in [0u8, 1] {
        if counts.available(z) == 0 {
            return Err(Error::EmptyArm { arm: z });
        }
    }
    let doomed = counts.with_event(1, 1) as f64 / counts.available(1) as f64;
    let immune = counts.with_event(0, 0) as f64 / counts.available(0) as f64;
    let benefiter = 1.0 - immune - doomed;
    Ok(IdentifiedProportions {
        doomed,
        immune,
        benefiter,
        monotonicity_violated: benefiter < 0.0,
    })
}

/// Range of `P[Y(1)=1 | benefiter]` to scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PbGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for PbGrid {
    fn default() -> Self {
        PbGrid {
            lo: 0.0,
            hi: 1.0,
            n: 101,
        }
    }
}

impl PbGrid {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lo && self.lo <= self.hi && self.hi <= 1.0) || self.n < 2 {
            return Err(Error::Config(format!(
                "p_B grid needs 0 <= lo <= hi <= 1 and at least two points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// A ratio interval whose upper end may be unbounded (`null` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioInterval {
    pub lo: f64,
    #[serde(with = "inf_as_null")]
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub proportions: IdentifiedProportions,
    /// `P[Y(0)=1 | immune] = P(Y=1 | S=0, Z=0)`.
    pub denominator: f64,
    /// `P[Y(1)=1 | immune or benefiter] = P(Y=1 | S=0, Z=1)`.
    pub mixed_risk: f64,
    /// Feasible range of `P[Y(1)=1 | immune]`, clipped to `[0, 1]`.
    pub numerator: Interval,
    pub risk_ratio: RatioInterval,
    pub grid: PbGrid,
    /// `(p_B, numerator)` pairs over the grid, clipped to `[0, 1]`.
    pub sensitivity: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// `P[Y(1)=1 | I] = q / w_I - (w_B / w_I) p_B` with `w_g = pi_g / (pi_I + pi_B)`.
pub fn numerator_at(mixed_risk: f64, immune: f64, benefiter: f64, p_b: f64) -> f64 {
    let w_i = immune / (immune + benefiter);
    let w_b = benefiter / (immune + benefiter);
    mixed_risk / w_i - (w_b / w_i) * p_b
}

pub fn numerator_bounds(counts: &CellCounts, grid: &PbGrid) -> Result<BoundsResult> {
    grid.validate()?;
    let props = strata_proportions_identified(counts)?;
    let mut warnings = Vec::new();
    if props.immune <= 0.0 {
        return Err(Error::Data(
            "no control-arm subject is free of the intercurrent event; the immune stratum is empty"
                .into(),
        ));
    }
    let active_free = counts.with_event(1, 0);
    if active_free == 0 {
        return Err(Error::Data(
            "no active-arm subject is free of the intercurrent event".into(),
        ));
    }
    let benefiter = if props.monotonicity_violated {
        warnings.push(format!(
            "monotonicity is contradicted by the data (benefiter proportion {:.4}); bounds use 0",
            props.benefiter
        ));
        0.0
    } else {
        props.benefiter
    };

    let control_free = counts.with_event(0, 0);
    let denominator = counts.complete(0, 0, 1) as f64 / control_free as f64;
    let mixed_risk = counts.complete(1, 0, 1) as f64 / active_free as f64;
    for (label, z, s) in [
        ("control, no event", 0u8, 0u8),
        ("control, event", 0, 1),
        ("active, no event", 1, 0),
        ("active, event", 1, 1),
    ] {
        if counts.with_event(z, s) == 0 {
            warnings.push(format!("zero complete cases in group ({label})"));
        }
    }

    let clip = |v: f64| v.clamp(0.0, 1.0);
    let lo = clip(numerator_at(mixed_risk, props.immune, benefiter, 1.0));
    let hi = clip(numerator_at(mixed_risk, props.immune, benefiter, 0.0));
    let risk_ratio = if denominator > 0.0 {
        RatioInterval {
            lo: lo / denominator,
            hi: hi / denominator,
        }
    } else {
        warnings.push(
            "no outcomes among control subjects free of the event; risk-ratio bounds are [0, inf)"
                .into(),
        );
        RatioInterval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    };
    let sensitivity = grid
        .points()
        .into_iter()
        .map(|p| {
            (
                p,
                clip(numerator_at(mixed_risk, props.immune, benefiter, p)),
            )
        })
        .collect();

    Ok(BoundsResult {
        proportions: props,
        denominator,
        mixed_risk,
        numerator: Interval { lo, hi },
        risk_ratio,
        grid: *grid,
        sensitivity,
        warnings,
    })
}

impl BoundsResult {
    /// Narrows the range of `p_B` to `[0, pb_max]`, which raises the lower
    /// numerator bound. Used when benefiters are assumed no more at risk than
    /// the doomed.
    pub fn restrict_pb(&mut self, pb_max: f64) {
        let pb_max = pb_max.clamp(0.0, 1.0);
        let p = &self.proportions;
        let benefiter = if p.monotonicity_violated {
            0.0
        } else {
            p.benefiter
        };
        let lo = numerator_at(self.mixed_risk, p.immune, benefiter, pb_max).clamp(0.0, 1.0);
        self.numerator.lo = lo;
        if self.denominator > 0.0 {
            self.risk_ratio.lo = lo / self.denominator;
        }
        self.sensitivity.retain(|&(pb, _)| pb <= pb_max);
        self.warnings
            .push(format!("p_B restricted to [0, {pb_max:.4}]"));
    }
}
