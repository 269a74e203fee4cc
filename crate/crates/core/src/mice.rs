//! Multiple imputation by chained equations with CART or random-forest
//! conditional models.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedStream, SimRng};
use crate::tabular::{Dataset, Schema, Value, VariableKind};
use crate::trees::{fit_cart, fit_forest, Features, ForestParams, Target, TreeParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Leaf-donor draws from a single tree.
    #[default]
    Cart,
    /// Deterministic forest prediction.
    #[serde(alias = "rf")]
    Forest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Uniform draws from the variable's observed values.
    #[default]
    Marginal,
    /// Leaf-donor draws from a tree fit on the variables completed so far.
    Conditional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiceParams {
    pub engine: Engine,
    pub iterations: usize,
    pub n_imputations: usize,
    pub init: Initialization,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

impl Default for MiceParams {
    fn default() -> Self {
        MiceParams {
            engine: Engine::Cart,
            iterations: 5,
            n_imputations: 10,
            init: Initialization::Marginal,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl MiceParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.n_imputations == 0 {
            return Err(Error::Config("MICE needs at least one iteration and one imputation".into()));
        }
        self.tree.validate()?;
        self.forest.tree.validate()
    }
}

fn level_counts(schema: &Schema) -> Vec<usize> {
    schema
        .variables
        .iter()
        .map(|v| match v.kind {
            VariableKind::Continuous => 0,
            _ => v.n_levels(),
        })
        .collect()
}

fn check_imputable(data: &Dataset) -> Result<()> {
    for j in 0..data.n_cols() {
        if data.n_rows() > 0 && data.n_missing_in(j) == data.n_rows() {
            return Err(Error::AllMissing {
                variable: data.schema().variables[j].name.clone(),
            });
        }
    }
    Ok(())
}

/// Fills every missing cell with a starting value.
pub fn initialize<R: Rng + ?Sized>(data: &Dataset, strategy: Initialization, rng: &mut R) -> Result<Dataset> {
    check_imputable(data)?;
    let mut columns = data.columns().to_vec();
    match strategy {
        Initialization::Marginal => {
            for (j, column) in columns.iter_mut().enumerate() {
                let observed = data.observed_rows(j);
                for i in data.missing_rows(j) {
                    let donor = observed[rng.random_range(0..observed.len())];
                    column.set(i, data.column(j).value(donor));
                }
            }
        }
        Initialization::Conditional => {
            let levels = level_counts(data.schema());
            let mut ready: Vec<usize> = (0..data.n_cols()).filter(|&j| data.n_missing_in(j) == 0).collect();
            for j in 0..data.n_cols() {
                let missing = data.missing_rows(j);
                if missing.is_empty() {
                    continue;
                }
                let observed = data.observed_rows(j);
                let draws: Vec<Value> = if ready.is_empty() {
                    missing
                        .iter()
                        .map(|_| data.column(j).value(observed[rng.random_range(0..observed.len())]))
                        .collect()
                } else {
                    let features = Features::new(
                        ready.iter().map(|&k| &columns[k]).collect(),
                        ready.iter().map(|&k| levels[k]).collect(),
                    )?;
                    let tree = fit_cart(&features, Target::from_column(&columns[j], levels[j]), &observed, &TreeParams::default())?;
                    missing
                        .iter()
                        .map(|&i| tree.sample_donor_for_row(&features, i, rng))
                        .collect::<Result<_>>()?
                };
                for (&i, v) in missing.iter().zip(draws) {
                    columns[j].set(i, v);
                }
                ready.push(j);
            }
        }
    }
    Dataset::complete(data.schema_arc().clone(), columns)
}

/// One chain: initialize, then `iterations` sweeps over the incomplete
/// variables in schema order. Returns the state after the last sweep.
pub fn run_chain<R: Rng + ?Sized>(data: &Dataset, params: &MiceParams, rng: &mut R) -> Result<Dataset> {
    params.validate()?;
    let levels = level_counts(data.schema());
    let mut columns = initialize(data, params.init, rng)?.into_columns();
    let incomplete: Vec<usize> = (0..data.n_cols()).filter(|&j| data.n_missing_in(j) > 0).collect();
    for _ in 0..params.iterations {
        for &j in &incomplete {
            let observed = data.observed_rows(j);
            let missing = data.missing_rows(j);
            let others: Vec<usize> = (0..columns.len()).filter(|&k| k != j).collect();
            let draws: Vec<Value> = {
                let features = Features::new(
                    others.iter().map(|&k| &columns[k]).collect(),
                    others.iter().map(|&k| levels[k]).collect(),
                )?;
                let target = Target::from_column(&columns[j], levels[j]);
                match params.engine {
                    Engine::Cart => {
                        let tree = fit_cart(&features, target, &observed, &params.tree)?;
                        missing
                            .iter()
                            .map(|&i| tree.sample_donor_for_row(&features, i, rng))
                            .collect::<Result<_>>()?
                    }
                    Engine::Forest => {
                        let forest = fit_forest(&features, target, &observed, &params.forest, rng)?;
                        missing
                            .iter()
                            .map(|&i| forest.predict_row(&features, i))
                            .collect::<Result<_>>()?
                    }
                }
            };
            for (&i, v) in missing.iter().zip(draws) {
                columns[j].set(i, v);
            }
        }
    }
    Dataset::complete(data.schema_arc().clone(), columns)
}

/// Seeds of the chains `impute` would run for this generator state.
pub fn chain_streams<R: Rng + ?Sized>(n_imputations: usize, rng: &mut R) -> Vec<SeedStream> {
    let base = SeedStream::new(rng.random());
    (0..n_imputations as u64).map(|l| base.child(l)).collect()
}

/// `n_imputations` independent chains, run in parallel.
pub fn impute<R: Rng + ?Sized>(data: &Dataset, params: &MiceParams, rng: &mut R) -> Result<Vec<Dataset>> {
    params.validate()?;
    check_imputable(data)?;
    chain_streams(params.n_imputations, rng)
        .into_par_iter()
        .map(|stream| {
            let mut chain_rng: SimRng = stream.rng();
            run_chain(data, params, &mut chain_rng)
        })
        .collect()
}
