use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{grow, modal_level};
use super::{Features, Target, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::tabular::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Predictors tried per split; `None` means `⌈√p⌉` of the `p` predictors.
    pub mtry: Option<usize>,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 10,
            mtry: None,
            tree: TreeParams {
                complexity_threshold: 0.0,
                ..TreeParams::default()
            },
            bootstrap: true,
        }
    }
}

pub fn default_mtry(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).max(1)
}

#[derive(Clone, Debug)]
pub struct Forest {
    trees: Vec<Tree>,
    /// Level count of a discrete target, `None` for a continuous one.
    n_levels: Option<usize>,
}

/// Fits `n_trees` trees in parallel, each on its own seeded stream, so the
/// result does not depend on the thread count.
pub fn fit_forest<R: Rng + ?Sized>(
    features: &Features,
    target: Target,
    rows: &[usize],
    params: &ForestParams,
    rng: &mut R,
) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    let mtry = params.mtry.unwrap_or_else(|| default_mtry(features.len()));
    if !features.is_empty() && !(1..=features.len()).contains(&mtry) {
        return Err(Error::Config(format!("mtry {mtry} outside 1..={}", features.len())));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("forest training rows"));
    }
    let base = SeedStream::new(rng.random());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut tree_rng = base.child(t as u64).rng();
            let sample: Vec<usize> = if params.bootstrap {
                (0..rows.len()).map(|_| rows[tree_rng.random_range(0..rows.len())]).collect()
            } else {
                rows.to_vec()
            };
            grow(features, target, sample, &params.tree, Some((mtry, &mut tree_rng)))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_levels = match target {
        Target::Discrete { n_levels, .. } => Some(n_levels),
        Target::Continuous(_) => None,
    };
    Ok(Forest { trees, n_levels })
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Aggregates per-tree predictions: modal level (lowest index on ties)
    /// for a discrete target, mean of leaf means for a continuous one.
    pub fn aggregate(&self, per_tree: &[Value]) -> Value {
        match self.n_levels {
            Some(k) => {
                let mut counts = vec![0usize; k];
                for v in per_tree {
                    if let Value::Level(l) = v {
                        counts[*l as usize] += 1;
                    }
                }
                Value::Level(modal_level(&counts))
            }
            None => {
                let sum: f64 = per_tree
                    .iter()
                    .map(|v| match v {
                        Value::Real(x) => *x,
                        Value::Level(_) => f64::NAN,
                    })
                    .sum();
                Value::Real(sum / per_tree.len() as f64)
            }
        }
    }

    pub fn predict(&self, x: &[Value]) -> Result<Value> {
        let per_tree = self.trees.iter().map(|t| t.predict(x)).collect::<Result<Vec<_>>>()?;
        Ok(self.aggregate(&per_tree))
    }

    pub fn predict_row(&self, features: &Features, row: usize) -> Result<Value> {
        let per_tree = self
            .trees
            .iter()
            .map(|t| t.predict_row(features, row))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.aggregate(&per_tree))
    }
}
