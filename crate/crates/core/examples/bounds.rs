// Nonparametric bounds on the immune-stratum risk under the active arm,
// plus the sensitivity curve over P[Y(1)=1 | benefiter].
use pstrata::report::render_bounds;
use pstrata::simulate::reference_summary;
use pstrata::{aggregate, gen_matching, numerator_bounds, GroundTruth, PbGrid};

fn main() -> pstrata::Result<()> {
    let records = gen_matching(&reference_summary(), &GroundTruth::reference_trial(), 2024)?;
    let pooled = aggregate(&records).pooled();
    let grid = PbGrid {
        lo: 0.0,
        hi: 1.0,
        n: 11,
    };
    let b = numerator_bounds(&pooled, &grid)?;
    print!("{}", render_bounds(&b));
    println!("p_B   numerator  risk ratio");
    for (pb, num) in &b.sensitivity {
        println!("{pb:.1}   {num:.4}     {:.4}", num / b.denominator);
    }
    Ok(())
}
