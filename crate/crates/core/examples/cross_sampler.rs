// Gradient-based sampler against the random-walk reference on one dataset.
use pstrata::model::PARAM_NAMES;
use pstrata::sampler::rwm_reference;
use pstrata::simulate::{gen_dataset, CellTruth, GroundTruth};
use pstrata::{aggregate, run_chains, PriorConfig, SamplerConfig};

fn main() -> pstrata::Result<()> {
    let truth = GroundTruth::single_cell(CellTruth {
        label: "cell".into(),
        weight: 1.0,
        strata: [0.8, 0.1, 0.1, 0.0],
        risk: [[0.25, 0.20], [0.35, 0.30], [0.30, 0.25], [0.30, 0.30]],
        missing: [0.1, 0.1],
    });
    let counts = aggregate(&gen_dataset(&truth, 2000, 1)?.records).pooled();
    let prior = PriorConfig::default();

    let t = std::time::Instant::now();
    let hmc = run_chains(&counts, &prior, &SamplerConfig::default())?;
    let t_hmc = t.elapsed();
    let t = std::time::Instant::now();
    let rwm = rwm_reference(&counts, &prior, 200_000, 2)?;
    let t_rwm = t.elapsed();

    println!(
        "{:<18}{:>9}{:>9}{:>8}{:>9}{:>8}",
        "parameter", "hmc", "rwm", "z", "ess", "rhat"
    );
    for (j, name) in PARAM_NAMES.iter().enumerate() {
        let se = (hmc.mcse_mean(j).powi(2) + rwm.mcse_mean(j).powi(2)).sqrt();
        println!(
            "{name:<18}{:>9.3}{:>9.3}{:>8.2}{:>9.0}{:>8.4}",
            hmc.mean(j),
            rwm.mean(j),
            (hmc.mean(j) - rwm.mean(j)) / se,
            hmc.ess_bulk[j],
            hmc.rhat[j]
        );
    }
    for (c, ch) in hmc.chains.iter().enumerate() {
        println!(
            "chain {c}: step {:.3}, accept {:.3}, divergences {}, leapfrog steps {}",
            ch.step_size, ch.mean_accept, ch.divergences, ch.n_leapfrog
        );
    }
    println!("hmc {t_hmc:.1?}, rwm {t_rwm:.1?}");
    Ok(())
}
