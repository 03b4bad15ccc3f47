// Prior-implied strata proportions under each monotonicity mode.
use pstrata::estimands::quantile_sorted;
use pstrata::simulate::prior_strata_draws;
use pstrata::{MonotonicityMode, NormalPrior, PriorConfig, Stratum};

fn main() -> pstrata::Result<()> {
    for mode in MonotonicityMode::ALL {
        let prior = PriorConfig::new(mode).with_alpha(NormalPrior::new(0.0, 1.0));
        let draws = prior_strata_draws(&prior, 1_000_000, 1)?;
        println!("{mode}");
        for g in Stratum::ALL {
            let mut v: Vec<f64> = draws.iter().map(|p| p[g.index()]).collect();
            v.sort_by(f64::total_cmp);
            println!(
                "  pi_{g:<10} median {:.3}  95% ({:.3}, {:.3})",
                quantile_sorted(&v, 0.5),
                quantile_sorted(&v, 0.025),
                quantile_sorted(&v, 0.975)
            );
        }
    }
    Ok(())
}
