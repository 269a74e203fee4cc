//! Train GAIN on an amputed sample, print its loss curve and draw
//! imputations from the trained generator.

use imputebench::gain::{gain_impute, train_gain, GainConfig};
use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::metrics::{overall_accuracy, overall_rmse};
use imputebench::missingness::apply_mcar;
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let truth = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(1_000, 4))?;
    let amputed = apply_mcar(&truth, 0.3, &mut SeedStream::new(1).rng())?;
    let config = GainConfig { iterations: 1_000, ..GainConfig::default() };
    let mut rng = SeedStream::new(2).rng();
    let (model, trace) = train_gain(&amputed, &config, &mut rng)?;
    println!("{}", trace.columns.join(","));
    for (step, values) in trace.rows.iter().step_by(trace.rows.len().div_ceil(10).max(1)) {
        println!("{step}: {values:.4?}");
    }
    for (l, d) in gain_impute(&model, &amputed, 3, &mut rng)?.iter().enumerate() {
        println!(
            "imputation {l}: rmse {:.3}, accuracy {:.3}",
            overall_rmse(&truth, &amputed, d)?,
            overall_accuracy(&truth, &amputed, d)?
        );
    }
    Ok(())
}
