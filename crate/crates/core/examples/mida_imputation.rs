//! Multiple imputation with denoising autoencoders: one training run per
//! imputation.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::metrics::{overall_accuracy, overall_rmse};
use imputebench::mida::{mida_impute, MidaConfig};
use imputebench::missingness::apply_mcar;
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let truth = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(1_000, 6))?;
    let amputed = apply_mcar(&truth, 0.3, &mut SeedStream::new(1).rng())?;
    let config = MidaConfig { n_prime: 30, n_tune: 15, ..MidaConfig::default() };
    let (completed, traces) = mida_impute(&amputed, &config, 3, &mut SeedStream::new(2).rng())?;
    for (l, (d, trace)) in completed.iter().zip(&traces).enumerate() {
        let last = trace.rows.last().map(|(_, v)| v.clone()).unwrap_or_default();
        println!(
            "run {l}: final {:?} = {last:.4?}, rmse {:.3}, accuracy {:.3}",
            trace.columns,
            overall_rmse(&truth, &amputed, d)?,
            overall_accuracy(&truth, &amputed, d)?
        );
    }
    Ok(())
}
