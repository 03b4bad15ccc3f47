// Simulated trial with known truth, written as CSV.
//
// cargo run --example simulate -- out.csv 3000
use pstrata::data::{render_summary_table, write_dataset};
use pstrata::{aggregate, gen_dataset, summarize, GroundTruth};

fn main() -> pstrata::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "simulated.csv".into());
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(3000);

    let truth = GroundTruth::reference_trial();
    let sim = gen_dataset(&truth, n, 11)?;
    write_dataset(
        &sim.records,
        std::fs::File::create(&path).expect("create output"),
    )?;

    print!(
        "{}",
        render_summary_table(&summarize(&aggregate(&sim.records)))
    );
    let pi = truth.marginal_strata();
    println!(
        "truth: pi = {pi:.3?}, immune risk ratio {:.3}",
        truth.risk_ratio()
    );
    println!("wrote {n} subjects to {path}");
    Ok(())
}
