//! Fit a classification tree and a random forest on one variable and
//! compare their in-sample agreement with the truth.

use imputebench::harness::{generate_synthetic_population, SyntheticPopulationSpec};
use imputebench::tabular::Value;
use imputebench::trees::{fit_cart, fit_forest, Features, ForestParams, Target, TreeParams};
use imputebench::SeedStream;

fn main() -> imputebench::Result<()> {
    let data = generate_synthetic_population(&SyntheticPopulationSpec::desk_default(3_000, 5))?;
    let target_col = data.schema().require("c1")?;
    let predictors: Vec<usize> = (0..data.n_cols()).filter(|&j| j != target_col).collect();
    let features = Features::infer(predictors.iter().map(|&j| data.column(j)).collect())?;
    let n_classes = data.schema().variables[target_col].n_levels();
    let truth = data.column(target_col).as_discrete().expect("c1 is discrete");
    let rows: Vec<usize> = (0..data.n_rows()).collect();

    let params = TreeParams { min_leaf: 5, ..TreeParams::default() };
    let tree = fit_cart(&features, Target::from_column(data.column(target_col), n_classes), &rows, &params)?;
    let forest = fit_forest(
        &features,
        Target::from_column(data.column(target_col), n_classes),
        &rows,
        &ForestParams::default(),
        &mut SeedStream::new(2).rng(),
    )?;

    let accuracy = |predict: &dyn Fn(usize) -> imputebench::Result<Value>| -> imputebench::Result<f64> {
        let mut hits = 0;
        for &r in &rows {
            if predict(r)? == Value::Level(truth[r]) {
                hits += 1;
            }
        }
        Ok(hits as f64 / rows.len() as f64)
    };
    println!("tree: {} leaves, accuracy {:.3}", tree.n_leaves(), accuracy(&|r| tree.predict_row(&features, r))?);
    println!("forest: {} trees, accuracy {:.3}", forest.trees().len(), accuracy(&|r| forest.predict_row(&features, r))?);
    Ok(())
}
