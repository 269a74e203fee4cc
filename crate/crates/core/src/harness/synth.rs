//! Latent-class mixture populations used when no real population is at hand.

use std::sync::Arc;

use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::tabular::{Column, Dataset, Schema, VariableSpec};

const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One generated variable. Categorical probabilities and continuous
/// moments are given per latent class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SyntheticVariable {
    Categorical {
        name: String,
        levels: Vec<String>,
        /// `probabilities[class][level]`
        probabilities: Vec<Vec<f64>>,
    },
    Continuous {
        name: String,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
}

impl SyntheticVariable {
    pub fn name(&self) -> &str {
        match self {
            SyntheticVariable::Categorical { name, .. } | SyntheticVariable::Continuous { name, .. } => name,
        }
    }

    fn spec(&self) -> VariableSpec {
        match self {
            SyntheticVariable::Categorical { name, levels, .. } if levels.len() == 2 => {
                VariableSpec::binary(name.clone(), [levels[0].as_str(), levels[1].as_str()])
            }
            SyntheticVariable::Categorical { name, levels, .. } => VariableSpec::categorical(name.clone(), levels.iter().cloned()),
            SyntheticVariable::Continuous { name, .. } => VariableSpec::continuous(name.clone()),
        }
    }
}

/// Mixture population: each row draws a latent class from `class_weights`,
/// then every variable independently given the class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPopulationSpec {
    pub n_rows: usize,
    pub seed: u64,
    pub class_weights: Vec<f64>,
    pub variables: Vec<SyntheticVariable>,
}

fn check_distribution(what: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::Config(format!("{what} must be non-negative and sum to 1, got {p:?}")));
    }
    Ok(())
}

impl SyntheticPopulationSpec {
    /// Three classes, six categorical variables (2 to 6 levels) and two
    /// continuous ones.
    pub fn desk_default(n_rows: usize, seed: u64) -> Self {
        let class_weights = vec![0.5, 0.3, 0.2];
        let n_classes = class_weights.len();
        let mut variables = Vec::new();
        for (j, &k) in [2usize, 3, 4, 5, 2, 6].iter().enumerate() {
            let probabilities = (0..n_classes)
                .map(|c| {
                    let w: Vec<f64> = (0..k).map(|l| (1 + (l * (c + 1) + j) % k) as f64).collect();
                    let total: f64 = w.iter().sum();
                    w.iter().map(|x| x / total).collect()
                })
                .collect();
            variables.push(SyntheticVariable::Categorical {
                name: format!("c{}", j + 1),
                levels: (0..k).map(|l| format!("l{}", l + 1)).collect(),
                probabilities,
            });
        }
        variables.push(SyntheticVariable::Continuous {
            name: "z1".into(),
            means: vec![0.0, 1.5, -1.0],
            sds: vec![1.0, 0.7, 1.3],
        });
        variables.push(SyntheticVariable::Continuous {
            name: "z2".into(),
            means: vec![10.0, 12.0, 9.0],
            sds: vec![2.0, 1.0, 3.0],
        });
        SyntheticPopulationSpec {
            n_rows,
            seed,
            class_weights,
            variables,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("population needs at least one row".into()));
        }
        if self.class_weights.is_empty() {
            return Err(Error::Config("at least one latent class is required".into()));
        }
        check_distribution("class weights", &self.class_weights)?;
        let k = self.n_classes();
        for var in &self.variables {
            match var {
                SyntheticVariable::Categorical {
                    name,
                    levels,
                    probabilities,
                } => {
                    if probabilities.len() != k || probabilities.iter().any(|p| p.len() != levels.len()) {
                        return Err(Error::Config(format!(
                            "{name}: need {k} probability vectors of length {}",
                            levels.len()
                        )));
                    }
                    for p in probabilities {
                        check_distribution(name, p)?;
                    }
                }
                SyntheticVariable::Continuous { name, means, sds } => {
                    if means.len() != k || sds.len() != k {
                        return Err(Error::Config(format!("{name}: need {k} means and {k} spreads")));
                    }
                    if means.iter().any(|m| !m.is_finite()) || sds.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                        return Err(Error::Config(format!("{name}: means must be finite and spreads positive")));
                    }
                }
            }
        }
        self.schema().map(|_| ())
    }

    pub fn schema(&self) -> Result<Schema> {
        Schema::new(self.variables.iter().map(SyntheticVariable::spec).collect())
    }
}

enum Sampler {
    Categorical(Vec<WeightedIndex<f64>>),
    Continuous(Vec<Normal<f64>>),
}

/// Draws the population row by row: class first, then each variable in
/// schema order. Deterministic per `spec.seed`.
pub fn generate_synthetic_population(spec: &SyntheticPopulationSpec) -> Result<Dataset> {
    spec.validate()?;
    let schema = Arc::new(spec.schema()?);
    let bad = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
    let classes = WeightedIndex::new(&spec.class_weights).map_err(|e| bad(&e))?;
    let samplers = spec
        .variables
        .iter()
        .map(|var| match var {
            SyntheticVariable::Categorical { probabilities, .. } => probabilities
                .iter()
                .map(|p| WeightedIndex::new(p).map_err(|e| bad(&e)))
                .collect::<Result<_>>()
                .map(Sampler::Categorical),
            SyntheticVariable::Continuous { means, sds, .. } => means
                .iter()
                .zip(sds)
                .map(|(&m, &s)| Normal::new(m, s).map_err(|e| bad(&e)))
                .collect::<Result<_>>()
                .map(Sampler::Continuous),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<Column> = samplers
        .iter()
        .map(|s| match s {
            Sampler::Categorical(_) => Column::Discrete(Vec::with_capacity(spec.n_rows)),
            Sampler::Continuous(_) => Column::Continuous(Vec::with_capacity(spec.n_rows)),
        })
        .collect();
    let mut rng = SeedStream::new(spec.seed).rng();
    for _ in 0..spec.n_rows {
        let c = classes.sample(&mut rng);
        for (sampler, column) in samplers.iter().zip(columns.iter_mut()) {
            match (sampler, column) {
                (Sampler::Categorical(d), Column::Discrete(v)) => v.push(d[c].sample(&mut rng) as u32),
                (Sampler::Continuous(d), Column::Continuous(v)) => v.push(d[c].sample(&mut rng)),
                _ => unreachable!("column kinds follow the samplers"),
            }
        }
    }
    Dataset::complete(schema, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_default_is_valid_and_deterministic() {
        let spec = SyntheticPopulationSpec::desk_default(500, 3);
        let a = generate_synthetic_population(&spec).unwrap();
        let b = generate_synthetic_population(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_rows(), a.n_cols()), (500, 8));
        assert!(a.is_fully_observed());
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut spec = SyntheticPopulationSpec::desk_default(10, 0);
        if let SyntheticVariable::Categorical { probabilities, .. } = &mut spec.variables[0] {
            probabilities[0][0] += 0.1;
        }
        assert!(matches!(generate_synthetic_population(&spec), Err(Error::Config(_))));
    }
}
