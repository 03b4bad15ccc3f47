//! Bayesian principal stratification for randomized trials with a binary
//! intercurrent event and a binary outcome.
//!
//! The target is the risk ratio of the outcome within the immune stratum,
//! the subjects who would not experience the intercurrent event under
//! either arm. See the `examples/` directory for end-to-end usage.

pub mod bounds;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimands;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod sampler;
pub mod sbc;
pub mod simulate;

pub use bounds::{numerator_bounds, strata_proportions_identified, BoundsResult, PbGrid};
pub use data::{aggregate, parse_dataset, summarize, CellCounts, SubjectRecord, TrialCounts};
pub use error::{Error, Result};
pub use estimands::{
    marginalize, risk_ratio_summary, CovariateDistribution, EstimandSummary, WeightMode,
};
pub use model::{CellParams, MonotonicityMode, NormalPrior, PriorConfig, Stratum};
pub use pipeline::{fit_sensitivity, fit_trial, FitOptions, TrialFit};
pub use sampler::{run_chains, PosteriorDraws, SamplerConfig};
pub use simulate::{gen_dataset, gen_matching, GroundTruth};
