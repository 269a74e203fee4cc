//! Chained-equation imputation with both tree engines.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::metrics::{overall_accuracy, overall_rmse};
use imputebench::mice::{impute, Engine, MiceParams};
use imputebench::missingness::apply_mcar;
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let truth = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(1_000, 9))?;
    let amputed = apply_mcar(&truth, 0.3, &mut SeedStream::new(1).rng())?;
    for engine in [Engine::Cart, Engine::Forest] {
        let params = MiceParams { engine, n_imputations: 3, ..MiceParams::default() };
        let completed = impute(&amputed, &params, &mut SeedStream::new(2).rng())?;
        for (l, d) in completed.iter().enumerate() {
            println!(
                "{engine:?} imputation {l}: rmse {:.3}, accuracy {:.3}",
                overall_rmse(&truth, &amputed, d)?,
                overall_accuracy(&truth, &amputed, d)?
            );
        }
    }
    Ok(())
}
