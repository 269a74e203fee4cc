//! Pool marginal-share estimates from several CART imputations.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::inference::{enumerate_estimands, estimate, estimate_all, pool, EstimandOptions};
use imputebench::mice::{impute, MiceParams};
use imputebench::missingness::apply_mcar;
use imputebench::tabular::{draw_sample, Binning};
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let population = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(20_000, 8))?;
    let binning = Binning::fit(&population, 5)?;
    let options = EstimandOptions { include_bivariate: false, ..EstimandOptions::default() };
    let estimands = enumerate_estimands(&binning.apply(&population)?, Some(&binning), 1_000, &options)?;

    let root = SeedStream::new(21);
    let sample = draw_sample(&population, 1_000, &mut root.named("sample").rng())?;
    let amputed = apply_mcar(&sample, 0.3, &mut root.named("missingness").rng())?;
    let params = MiceParams { n_imputations: 5, ..MiceParams::default() };
    let completed = impute(&amputed, &params, &mut root.named("method").rng())?;
    let per_imputation = completed
        .iter()
        .map(|d| estimate_all(&binning.apply(d)?, &estimands))
        .collect::<imputebench::Result<Vec<_>>>()?;
    let binned_sample = binning.apply(&sample)?;

    println!("{:<12} {:>7} {:>7} {:>7} {:>17}", "estimand", "Q", "q_hat", "q_bar", "95% interval");
    for (k, e) in estimands.iter().enumerate() {
        let column: Vec<_> = per_imputation.iter().map(|est| est[k]).collect();
        let pooled = pool(&column, 0.95)?;
        let q_hat = estimate(&binned_sample, e)?.q;
        println!(
            "{:<12} {:>7.4} {:>7.4} {:>7.4} [{:.4}, {:.4}]{}",
            e.id(),
            e.population_value,
            q_hat,
            pooled.q_bar,
            pooled.ci_low,
            pooled.ci_high,
            if pooled.covers(e.population_value) { "" } else { " miss" }
        );
    }
    Ok(())
}
