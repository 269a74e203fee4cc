//! Uniform front end over the imputation methods: a masked dataset in, `L`
//! completed datasets out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::{gain_impute, train_gain, GainConfig};
use crate::mice::{impute as mice_impute, Engine, Initialization, MiceParams};
use crate::mida::{initial_impute, mida_impute, MidaConfig};
use crate::nn::LossTrace;
use crate::tabular::Dataset;
use crate::trees::{ForestParams, TreeParams};

/// Chained-equation settings shared by the CART and forest variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiceSettings {
    pub iterations: usize,
    pub init: Initialization,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

impl Default for MiceSettings {
    fn default() -> Self {
        let p = MiceParams::default();
        MiceSettings {
            iterations: p.iterations,
            init: p.init,
            tree: p.tree,
            forest: p.forest,
        }
    }
}

impl MiceSettings {
    fn params(&self, engine: Engine, n_imputations: usize) -> MiceParams {
        MiceParams {
            engine,
            iterations: self.iterations,
            n_imputations,
            init: self.init,
            tree: self.tree.clone(),
            forest: self.forest.clone(),
        }
    }
}

/// An imputation method and its settings, tagged by `"method"` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodConfig {
    MiceCart(MiceSettings),
    MiceRf(MiceSettings),
    Gain(GainConfig),
    Mida(MidaConfig),
    /// Mean/mode single imputation repeated `L` times; a baseline.
    MeanMode,
}

/// Completed datasets plus any training loss traces, keyed by a short name.
#[derive(Clone, Debug, Default)]
pub struct ImputationOutput {
    pub datasets: Vec<Dataset>,
    pub traces: Vec<(String, LossTrace)>,
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::MiceCart(_) => "mice-cart",
            MethodConfig::MiceRf(_) => "mice-rf",
            MethodConfig::Gain(_) => "gain",
            MethodConfig::Mida(_) => "mida",
            MethodConfig::MeanMode => "mean-mode",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::MiceCart(s) | MethodConfig::MiceRf(s) => s.params(Engine::Cart, 1).validate(),
            MethodConfig::Gain(c) => c.validate(),
            MethodConfig::Mida(c) => c.validate(),
            MethodConfig::MeanMode => Ok(()),
        }
    }

    /// Produces `n_imputations` completions of `data`. Observed cells are
    /// never altered. A fully observed input is returned as-is without
    /// fitting anything.
    pub fn impute<R: Rng + ?Sized>(&self, data: &Dataset, n_imputations: usize, rng: &mut R) -> Result<ImputationOutput> {
        if n_imputations == 0 {
            return Err(Error::Config("at least one imputation is required".into()));
        }
        if data.is_fully_observed() {
            return Ok(ImputationOutput {
                datasets: vec![data.clone(); n_imputations],
                traces: Vec::new(),
            });
        }
        let output = match self {
            MethodConfig::MiceCart(s) => ImputationOutput {
                datasets: mice_impute(data, &s.params(Engine::Cart, n_imputations), rng)?,
                traces: Vec::new(),
            },
            MethodConfig::MiceRf(s) => ImputationOutput {
                datasets: mice_impute(data, &s.params(Engine::Forest, n_imputations), rng)?,
                traces: Vec::new(),
            },
            MethodConfig::Gain(config) => {
                let (model, trace) = train_gain(data, config, rng)?;
                ImputationOutput {
                    datasets: gain_impute(&model, data, n_imputations, rng)?,
                    traces: vec![("gain".to_string(), trace)],
                }
            }
            MethodConfig::Mida(config) => {
                let (datasets, traces) = mida_impute(data, config, n_imputations, rng)?;
                ImputationOutput {
                    datasets,
                    traces: traces.into_iter().enumerate().map(|(l, t)| (format!("run{l}"), t)).collect(),
                }
            }
            MethodConfig::MeanMode => ImputationOutput {
                datasets: vec![initial_impute(data)?; n_imputations],
                traces: Vec::new(),
            },
        };
        if let Some(bad) = output.datasets.iter().position(|d| !data.is_completed_by(d)) {
            return Err(Error::Dataset(format!(
                "{} produced imputation {bad} that alters observed cells or leaves gaps",
                self.name()
            )));
        }
        Ok(output)
    }
}
