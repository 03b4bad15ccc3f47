//! Fits a dataset shaped like a four-cell 2:1 trial and prints the
//! immune-stratum risk-ratio summary for every cell-standardized estimand.
//!
//! cargo run --release --example fit_trial [seed]

use pstrata::report::render_estimand_summary;
use pstrata::simulate::reference_summary;
use pstrata::{aggregate, fit_trial, gen_matching, summarize, FitOptions, GroundTruth};

fn main() -> pstrata::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2024);
    let records = gen_matching(&reference_summary(), &GroundTruth::reference_trial(), seed)?;
    let counts = aggregate(&records);
    print!(
        "{}",
        pstrata::data::render_summary_table(&summarize(&counts))
    );

    let start = std::time::Instant::now();
    let fit = fit_trial(&counts, &FitOptions::default())?;
    println!();
    print!("{}", render_estimand_summary(&fit.summary));
    println!(
        "max R-hat {:.4}, warnings: {}",
        fit.max_rhat(),
        fit.has_warnings()
    );
    for c in &fit.cells {
        let d = &c.draws;
        println!(
            "{}: divergences {}, step sizes {:?}",
            c.label,
            d.total_divergences(),
            d.chains
                .iter()
                .map(|ch| format!("{:.3}", ch.step_size))
                .collect::<Vec<_>>()
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
