// Same data, three monotonicity assumptions.
use pstrata::report::render_estimand_summary;
use pstrata::simulate::reference_summary;
use pstrata::{aggregate, fit_sensitivity, gen_matching, FitOptions, GroundTruth};

fn main() -> pstrata::Result<()> {
    let records = gen_matching(&reference_summary(), &GroundTruth::reference_trial(), 2024)?;
    let fits = fit_sensitivity(&aggregate(&records), &FitOptions::default())?;
    for f in &fits {
        println!("{}", render_estimand_summary(&f.summary));
    }
    for f in &fits {
        let ci = f.summary.risk_ratio.ci95;
        println!("{:<5} RR 95% width {:.3}", f.mode().to_string(), ci.width());
    }
    Ok(())
}
