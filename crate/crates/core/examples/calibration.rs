// Simulation-based calibration. Pass the replication count as an argument
// (200 for a full check; the default is a quick look).
use pstrata::sbc::{run_sbc, SbcConfig};

fn main() -> pstrata::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(40);
    let report = run_sbc(&SbcConfig {
        n_reps: reps,
        ..Default::default()
    })?;
    for p in &report.parameters {
        println!("{:<18} p {:.3}  {:?}", p.parameter, p.p_value, p.histogram);
    }
    println!("{}/11 uniform at 0.01", report.n_uniform(0.01));
    Ok(())
}
