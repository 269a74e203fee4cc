//! The full experiment loop on the smoke profile, written to a temporary
//! directory.

use imputebench::harness::{run_experiment, ExperimentConfig};

fn main() -> imputebench::Result<()> {
    let mut config = ExperimentConfig::smoke();
    config.output = std::env::temp_dir().join("imputebench-smoke-example");
    let outcome = run_experiment(&config)?;
    for summary in &outcome.methods {
        let coverage = summary
            .report
            .as_ref()
            .and_then(|r| r.summaries.iter().find(|q| q.class == "marginal/categorical" && q.metric == "coverage"))
            .map(|q| q.quantiles[2]);
        println!(
            "{:<10} sims {} rmse {:?} accuracy {:?} median marginal coverage {:?} mean {:.2}s",
            summary.method,
            summary.completed_simulations,
            summary.mean_rmse,
            summary.mean_accuracy,
            coverage,
            outcome.mean_seconds(&summary.method).unwrap_or(f64::NAN)
        );
    }
    for failure in &outcome.failures {
        println!("failed: {failure:?}");
    }
    println!("outputs in {}", config.output.display());
    Ok(())
}
