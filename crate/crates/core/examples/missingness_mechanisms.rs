//! MCAR and grouped-logistic MAR amputation of one sample.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::missingness::{apply_mar, apply_mcar, MarConfig};
use imputebench::tabular::{draw_sample, Dataset};
use imputebench::SeedStream;

fn missing_shares(data: &Dataset) -> Vec<String> {
    (0..data.n_cols())
        .map(|j| format!("{}={:.2}", data.schema().variables[j].name, data.n_missing_in(j) as f64 / data.n_rows() as f64))
        .collect()
}

fn main() -> imputebench::Result<()> {
    let population = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(20_000, 3))?;
    let root = SeedStream::new(11);
    let sample = draw_sample(&population, 2_000, &mut root.named("sample").rng())?;

    let mcar = apply_mcar(&sample, 0.3, &mut root.named("mcar").rng())?;
    println!("MCAR 30%: {}", missing_shares(&mcar).join(" "));

    let design = MarConfig::random(
        sample.schema(),
        vec!["c1".into(), "z1".into()],
        &[3, 3],
        0.3,
        &mut root.named("design").rng(),
    )?;
    println!("MAR groups: {:?}", design.groups);
    let mar = apply_mar(&sample, &design, &mut root.named("mar").rng())?;
    println!("MAR 30%:  {}", missing_shares(&mar).join(" "));
    assert!(mar.is_completed_by(&sample));
    Ok(())
}
