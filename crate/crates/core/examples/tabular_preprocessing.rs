//! Population preprocessing: rare-level merging, quantile binning, sampling
//! and the one-hot encoding the neural imputers train on.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::tabular::{draw_sample, merge_rare_levels_all, Binning, EncodingMap};
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let spec = SyntheticPopulationSpec::desk_default(20_000, 7);
    let population = generate_synthetic_population(&spec)?;
    println!("population: {} rows, variables {:?}", population.n_rows(), population.schema().names());

    let merged = merge_rare_levels_all(&population, 50)?;
    for (before, after) in population.schema().variables.iter().zip(&merged.schema().variables) {
        if before.n_levels() != after.n_levels() {
            println!("{}: {} levels -> {}", before.name, before.n_levels(), after.n_levels());
        }
    }

    let binning = Binning::fit(&merged, 5)?;
    let binned = binning.apply(&merged)?;
    for j in 0..binned.n_cols() {
        if let Some(rule) = binning.rule(j) {
            println!("{}: {} bins, boundaries {:.3?}", rule.variable, rule.n_bins(), rule.boundaries);
        }
    }

    let mut rng = SeedStream::new(1).rng();
    let sample = draw_sample(&merged, 1_000, &mut rng)?;
    let map = EncodingMap::fit(&sample)?;
    let (values, mask) = map.encode(&sample)?;
    println!("encoded sample: {:?}, observed share {:.3}", values.dim(), mask.mean().unwrap_or(0.0));
    Ok(())
}
