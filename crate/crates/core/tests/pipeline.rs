use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use pstrata::bounds::{numerator_bounds, PbGrid};
use pstrata::data::{aggregate, parse_reader, summarize, CellCounts, SchemaConfig, SummaryRow};
use pstrata::estimands::{marginalize, CovariateDistribution, WeightMode};
use pstrata::model::{expit, CellParams, PriorConfig, DIM};
use pstrata::pipeline::{derive_seed, fit_trial, FitOptions};
use pstrata::report::{schema_version, ConfigEcho, FitReport, ResultDocument, RunConfig};
use pstrata::sampler::{run_chains, rwm_reference, SamplerConfig};
use pstrata::simulate::{gen_dataset, gen_matching, reference_summary, CellTruth, GroundTruth};
use pstrata::{Error, Stratum};

fn truth(strata: [f64; 4], risk_immune: [f64; 2], missing: [f64; 2]) -> GroundTruth {
    GroundTruth::single_cell(CellTruth {
        label: "cell".into(),
        weight: 1.0,
        strata,
        risk: [risk_immune, [0.35, 0.30], [0.30, 0.25], [0.30, 0.30]],
        missing,
    })
}

fn matched() -> pstrata::TrialCounts {
    aggregate(&gen_matching(&reference_summary(), &GroundTruth::reference_trial(), 2024).unwrap())
}

#[test]
fn zero_counts_recover_the_prior() {
    let prior = PriorConfig::default();
    let zero = CellCounts::default();
    let hmc = run_chains(
        &zero,
        &prior,
        &SamplerConfig {
            seed: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let rwm = rwm_reference(&zero, &prior, 100_000, 4).unwrap();
    let m = prior.marginals();
    for j in 0..DIM {
        for d in [&hmc, &rwm] {
            let z = (d.mean(j) - m[j].mean).abs() / d.mcse_mean(j);
            assert!(
                z < 3.0,
                "parameter {j}: mean {} vs {} ({z:.2} mcse)",
                d.mean(j),
                m[j].mean
            );
        }
    }
    let errs: Vec<f64> = hmc
        .chains
        .iter()
        .flat_map(|c| c.energy_errors.iter().copied())
        .collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    assert!(mean.abs() < 0.1, "mean energy error {mean}");
}

#[test]
fn first_cell_converges() {
    let counts = matched();
    let cell = &counts.cells["cell_1"];
    let d = run_chains(cell, &PriorConfig::default(), &SamplerConfig::default()).unwrap();
    assert!(d.max_rhat() < 1.01, "max rhat {}", d.max_rhat());
    assert!(d
        .chains
        .iter()
        .all(|c| c.draws.nrows() == 1000 && c.draws.ncols() == DIM));
}

#[test]
fn run_chains_is_deterministic() {
    let counts = matched().pooled();
    let cfg = SamplerConfig {
        n_warmup: 200,
        n_sampling: 100,
        seed: 8,
        ..Default::default()
    };
    let a = run_chains(&counts, &PriorConfig::default(), &cfg).unwrap();
    let b = run_chains(&counts, &PriorConfig::default(), &cfg).unwrap();
    for (x, y) in a.chains.iter().zip(&b.chains) {
        assert_eq!(x.draws, y.draws);
    }
}

#[test]
fn immune_only_population_never_has_the_event() {
    let sim = gen_dataset(
        &truth([1.0, 0.0, 0.0, 0.0], [0.25, 0.2], [0.0, 0.0]),
        2000,
        1,
    )
    .unwrap();
    assert!(sim.records.iter().all(|r| r.s == Some(0)));
    assert!(sim.latent.iter().all(|l| l.s0 == 0 && l.s1 == 0));
}

#[test]
fn large_sample_identification() {
    let t = truth([0.85, 0.08, 0.07, 0.0], [0.25, 0.20], [0.0, 0.0]);
    let sim = gen_dataset(&t, 100_000, 5).unwrap();
    let c = aggregate(&sim.records).pooled();
    let b = numerator_bounds(&c, &PbGrid::default()).unwrap();
    assert!(b.numerator.contains(0.20), "{:?}", b.numerator);
    assert!((b.denominator - 0.25).abs() < 0.01);
    assert!((b.proportions.immune - 0.85).abs() < 0.01);
    assert!((b.proportions.doomed - 0.08).abs() < 0.01);
}

#[test]
fn simulated_strata_match_truth() {
    let t = truth([0.6, 0.2, 0.15, 0.05], [0.25, 0.2], [0.0, 0.0]);
    let chi = ChiSquared::new(3.0).unwrap();
    for seed in 0..20 {
        let sim = gen_dataset(&t, 10_000, seed).unwrap();
        let mut n = [0.0; 4];
        for l in &sim.latent {
            n[l.stratum.index()] += 1.0;
        }
        let stat: f64 = (0..4)
            .map(|g| {
                let e = 10_000.0 * t.cells[0].strata[g];
                (n[g] - e).powi(2) / e
            })
            .sum();
        assert!(1.0 - chi.cdf(stat) > 0.001, "seed {seed}: chi2 {stat}");
    }
}

#[test]
fn halved_risk_is_recovered() {
    let t = truth([0.8, 0.1, 0.1, 0.0], [0.3, 0.15], [0.0, 0.0]);
    let medians: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let sim = gen_dataset(&t, 5000, 600 + k).unwrap();
            let opts = FitOptions {
                sampler: SamplerConfig {
                    seed: derive_seed(700, k),
                    ..Default::default()
                },
                ..Default::default()
            };
            fit_trial(&aggregate(&sim.records), &opts)
                .unwrap()
                .summary
                .risk_ratio
                .median
        })
        .collect();
    let inside = medians.iter().filter(|m| (0.4..=0.6).contains(*m)).count();
    assert!(inside >= 48, "{inside}/50 medians in [0.4, 0.6]");
}

#[test]
fn available_case_weights() {
    let cov = CovariateDistribution::from_counts(&matched(), WeightMode::Available).unwrap();
    let expected = [248.0, 362.0, 219.0, 454.0].map(|v| v / 1283.0);
    for (w, e) in cov.weights.iter().zip(expected) {
        assert!((w - e).abs() < 1e-15);
    }
    let cov = CovariateDistribution::from_counts(&matched(), WeightMode::Randomized).unwrap();
    assert!((cov.weights[0] - 315.0 / 1641.0).abs() < 1e-15);
}

#[test]
fn standardization_matches_direct_evaluation() {
    let counts = matched();
    let cfg = SamplerConfig {
        n_warmup: 200,
        n_sampling: 50,
        n_chains: 2,
        ..Default::default()
    };
    let draws: Vec<_> = counts
        .cells
        .values()
        .enumerate()
        .map(|(i, c)| {
            run_chains(
                c,
                &PriorConfig::default(),
                &SamplerConfig {
                    seed: i as u64,
                    ..cfg
                },
            )
            .unwrap()
        })
        .collect();
    let refs: Vec<_> = draws.iter().collect();
    let w = [248.0, 362.0, 219.0, 454.0].map(|v| v / 1283.0);
    let cov = CovariateDistribution::from_counts(&counts, WeightMode::Available).unwrap();
    let m = marginalize(&refs, &cov).unwrap();
    for k in 0..m.len() {
        let cells: Vec<CellParams> = draws
            .iter()
            .map(|d| CellParams::from_slice(&d.row(k)))
            .collect();
        let g = Stratum::Immune.index();
        let pi: f64 = (0..4).map(|x| w[x] * cells[x].strata_probs()[g]).sum();
        let risk1: f64 = (0..4)
            .map(|x| {
                w[x] * cells[x].strata_probs()[g] * expit(cells[x].theta0[g] + cells[x].delta[g])
            })
            .sum::<f64>()
            / pi;
        assert!((m.pi[g][k] - pi).abs() < 1e-14);
        assert!((m.risk[g][1][k] - risk1).abs() < 1e-13);
    }
}

#[test]
fn summary_reproduces_first_row() {
    let rows = summarize(&matched());
    assert_eq!(
        rows[0],
        SummaryRow {
            cell: "cell_1".into(),
            arm: 1,
            randomized: 208,
            available: 167,
            events: 22,
            outcomes: 30
        }
    );
    assert!(summarize(&aggregate(&[])).is_empty());
}

#[test]
fn parse_examples() {
    let schema = SchemaConfig::default();
    let r = parse_reader(
        "z,s,y,cell\n1,0,1,cell_1\n0,NA,NA,cell_3\n".as_bytes(),
        "t",
        &schema,
    )
    .unwrap();
    assert_eq!(
        (r[0].z, r[0].s, r[0].y, r[0].is_missing()),
        (1, Some(0), Some(1), false)
    );
    assert!(r[1].is_missing());
    let err = parse_reader(
        "z,s,y,cell\n1,0,1,cell_1\n2,0,1,cell_1\n".as_bytes(),
        "t",
        &schema,
    )
    .unwrap_err();
    match err {
        Error::Schema { row, column, .. } => assert_eq!((row, column.as_str()), (3, "z")),
        e => panic!("unexpected {e}"),
    }
    let strict = SchemaConfig {
        allowed_cells: Some(vec!["a".into()]),
        ..Default::default()
    };
    assert!(parse_reader("z,s,y,cell\n1,0,1,b\n".as_bytes(), "t", &strict).is_err());
}

#[test]
fn result_document_round_trip() {
    let counts = matched();
    let opts = FitOptions {
        sampler: SamplerConfig {
            n_warmup: 200,
            n_sampling: 100,
            n_chains: 2,
            ..Default::default()
        },
        horizon: Some("12".into()),
        ..Default::default()
    };
    let fit = fit_trial(&counts, &opts).unwrap();
    let cfg = RunConfig::default();
    let mut doc = ResultDocument::new(
        ConfigEcho {
            input: None,
            sampler: opts.sampler,
            weights: cfg.weights,
            pb_grid: cfg.pb_grid,
            horizon: opts.horizon.clone(),
        },
        summarize(&counts),
    );
    doc.fits.push(FitReport::from_fit(&fit));
    doc.bounds = Some(numerator_bounds(&counts.pooled(), &cfg.pb_grid).unwrap());
    let back = ResultDocument::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.schema_version, schema_version());
    assert_eq!(back.fits[0].cells[0].divergences.len(), 2);
    let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
}
