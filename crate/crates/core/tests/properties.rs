use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pstrata::bounds::{numerator_bounds, PbGrid};
use pstrata::data::{aggregate, CellCounts, SubjectRecord};
use pstrata::estimands::{marginalize, risk_ratio_summary, CovariateDistribution};
use pstrata::model::{
    cell_mixture, log_posterior_and_gradient, softmax, CellParams, MonotonicityMode, PriorConfig,
    DIM,
};
use pstrata::sampler::{run_chains, PosteriorDraws, SamplerConfig};
use pstrata::Stratum;

fn params() -> impl Strategy<Value = [f64; DIM]> {
    prop::array::uniform11(-60.0f64..60.0)
}

fn counts() -> impl Strategy<Value = CellCounts> {
    prop::array::uniform8(0u64..500).prop_map(|n| {
        let mut c = CellCounts::default();
        for (k, v) in n.iter().enumerate() {
            c.add_complete((k >> 2) as u8 & 1, (k >> 1) as u8 & 1, k as u8 & 1, *v);
        }
        c
    })
}

fn mode() -> impl Strategy<Value = MonotonicityMode> {
    prop::sample::select(MonotonicityMode::ALL.to_vec())
}

fn record() -> impl Strategy<Value = SubjectRecord> {
    (0u8..2, prop::option::of((0u8..2, 0u8..2)), 0usize..3).prop_map(|(z, sy, cell)| {
        let cell = format!("c{cell}");
        match sy {
            Some((s, y)) => SubjectRecord::complete(z, s, y, cell),
            None => SubjectRecord::missing(z, cell),
        }
    })
}

proptest! {
    #[test]
    fn softmax_shift_invariant(a in prop::array::uniform3(-30.0f64..30.0), c in -30.0f64..30.0) {
        // Shifting every logit, including the fixed benefiter zero, by c.
        let p = softmax(a[0], a[1], a[2]).unwrap();
        let direct = {
            let l = [a[0] + c, a[1] + c, c, a[2] + c];
            let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = l.iter().map(|v| (v - m).exp()).collect();
            let t: f64 = e.iter().sum();
            e.iter().map(|v| v / t).collect::<Vec<_>>()
        };
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..4 {
            prop_assert!((p[k] - direct[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_weights_form_distribution(x in params(), s in 0u8..2, z in 0u8..2) {
        let m = cell_mixture(s, z, &CellParams::from_slice(&x));
        prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for p in m.success {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn posterior_finite_in_box(x in params(), c in counts(), mode in mode()) {
        let (lp, g) = log_posterior_and_gradient(&CellParams::from_slice(&x), &c, &PriorConfig::new(mode));
        prop_assert!(lp.is_finite());
        prop_assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gradient_matches_difference_quotient(
        u in prop::array::uniform11(-3.0f64..3.0),
        c in counts(),
        mode in mode(),
    ) {
        let prior = PriorConfig::new(mode);
        let m = prior.marginals();
        let x: [f64; DIM] = std::array::from_fn(|j| m[j].mean + m[j].sd * u[j]);
        let (_, g) = log_posterior_and_gradient(&CellParams::from_slice(&x), &c, &prior);
        let h = 1e-5;
        for j in 0..DIM {
            let f = |d: f64| {
                let mut y = x;
                y[j] += d;
                log_posterior_and_gradient(&CellParams::from_slice(&y), &c, &prior).0
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0);
            prop_assert!(rel < 1e-5, "component {j}: {} vs {fd}", g[j]);
        }
    }

    #[test]
    fn aggregate_ignores_order(recs in prop::collection::vec(record(), 0..200), seed in any::<u64>()) {
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = aggregate(&recs);
        prop_assert_eq!(&a, &aggregate(&shuffled));
        prop_assert_eq!(a.n_randomized(), recs.len() as u64);
        for c in a.cells.values() {
            for z in 0..2u8 {
                prop_assert_eq!(c.available(z) + c.n_missing[z as usize], c.n_randomized[z as usize]);
            }
        }
    }

    #[test]
    fn bounds_ordered_and_monotone(c in counts()) {
        if let Ok(b) = numerator_bounds(&c, &PbGrid::default()) {
            prop_assert!(b.numerator.lo <= b.numerator.hi);
            prop_assert!(b.numerator.lo >= 0.0 && b.numerator.hi <= 1.0);
            prop_assert!(b.risk_ratio.lo <= b.risk_ratio.hi);
            for w in b.sensitivity.windows(2) {
                prop_assert!(w[1].1 <= w[0].1);
            }
        }
    }
}

fn small_cfg(seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_chains: 2,
        n_warmup: 200,
        n_sampling: 100,
        seed,
        ..Default::default()
    }
}

fn fit(c: &CellCounts, seed: u64) -> PosteriorDraws {
    run_chains(c, &PriorConfig::default(), &small_cfg(seed)).unwrap()
}

#[test]
fn marginal_strata_sum_to_one_and_relabeling_is_harmless() {
    let mut a = CellCounts::default();
    a.add_complete(0, 0, 0, 40);
    a.add_complete(0, 1, 1, 8);
    a.add_complete(1, 0, 1, 20);
    a.add_complete(1, 1, 0, 9);
    let mut b = a;
    b.add_complete(1, 0, 0, 30);
    let (da, db) = (fit(&a, 1), fit(&b, 2));
    let cov = CovariateDistribution::new(vec!["a".into(), "b".into()], vec![1.0, 3.0]).unwrap();
    let m = marginalize(&[&da, &db], &cov).unwrap();
    for k in 0..m.len() {
        let total: f64 = Stratum::ALL.iter().map(|g| m.pi[g.index()][k]).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Hard monotonicity pins the harmed stratum.
        assert!(m.pi[Stratum::Harmed.index()][k] < 1e-10);
    }
    let swapped = CovariateDistribution::new(vec!["b".into(), "a".into()], vec![3.0, 1.0]).unwrap();
    let m2 = marginalize(&[&db, &da], &swapped).unwrap();
    for g in Stratum::ALL {
        for k in 0..m.len() {
            assert!((m.pi[g.index()][k] - m2.pi[g.index()][k]).abs() < 1e-15);
            for z in 0..2 {
                assert!((m.risk[g.index()][z][k] - m2.risk[g.index()][z][k]).abs() < 1e-14);
            }
        }
    }
    let s = risk_ratio_summary(&m, MonotonicityMode::Hard, None);
    let rr = m.risk_ratio();
    let below = rr.iter().filter(|&&r| r < 1.0).count();
    let above = rr.iter().filter(|&&r| r >= 1.0).count();
    assert_eq!(below + above, rr.len());
    assert_eq!(s.prob_rr_below_one, below as f64 / rr.len() as f64);
}
