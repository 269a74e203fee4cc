//! Quantile binning of continuous variables.
//!
//! Rules are fit once on the population and reused for every sample and
//! every imputed dataset so that estimands stay comparable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dataset::{Column, Dataset, MISSING_LEVEL};
use super::schema::{Schema, VariableKind, VariableSpec};
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

pub const DEFAULT_BINS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningRule {
    pub variable: String,
    /// Strictly increasing cut points; `boundaries.len() + 1` bins.
    pub boundaries: Vec<f64>,
}

impl BinningRule {
    pub fn n_bins(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Left-open, right-closed bins: `v` lands in bin `k` when
    /// `boundaries[k-1] < v <= boundaries[k]`.
    pub fn bin(&self, v: f64) -> u32 {
        self.boundaries.partition_point(|&b| b < v) as u32
    }
}

/// Fits `k` bins at the j/k empirical quantiles (linear interpolation).
pub fn fit_binning(variable: &str, values: &[f64], k: usize) -> Result<BinningRule> {
    if k < 2 {
        return Err(Error::Config(format!("bin count must be at least 2, got {k}")));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let degenerate = || Error::DegenerateBinning {
        variable: variable.to_string(),
        bins: k,
        found: distinct.len(),
    };
    if distinct.len() < k {
        return Err(degenerate());
    }
    let boundaries: Vec<f64> = (1..k).map(|j| quantile_sorted(&sorted, j as f64 / k as f64)).collect();
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(degenerate());
    }
    Ok(BinningRule {
        variable: variable.to_string(),
        boundaries,
    })
}

/// Maps values to bin indices; NaN (missing) maps to [`MISSING_LEVEL`].
pub fn apply_binning(values: &[f64], rule: &BinningRule) -> Vec<u32> {
    values
        .iter()
        .map(|&v| if v.is_nan() { MISSING_LEVEL } else { rule.bin(v) })
        .collect()
}

/// Per-variable binning of a whole schema: continuous variables get a rule,
/// discrete ones pass through.
#[derive(Clone, Debug)]
pub struct Binning {
    source: Arc<Schema>,
    binned: Arc<Schema>,
    rules: Vec<Option<BinningRule>>,
}

impl Binning {
    pub fn fit(population: &Dataset, k: usize) -> Result<Self> {
        let rules = population
            .schema()
            .variables
            .iter()
            .zip(population.columns())
            .map(|(var, column)| match column {
                Column::Continuous(values) => fit_binning(&var.name, values, k).map(Some),
                Column::Discrete(_) => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rules(population.schema_arc().clone(), rules)
    }

    pub fn from_rules(source: Arc<Schema>, rules: Vec<Option<BinningRule>>) -> Result<Self> {
        if rules.len() != source.len() {
            return Err(Error::Config("one binning slot per variable is required".into()));
        }
        let variables = source
            .variables
            .iter()
            .zip(&rules)
            .map(|(var, rule)| match (var.kind, rule) {
                (VariableKind::Continuous, Some(rule)) => Ok(VariableSpec::categorical(
                    var.name.clone(),
                    (1..=rule.n_bins()).map(|b| format!("q{b}")),
                )),
                (VariableKind::Continuous, None) => {
                    Err(Error::Config(format!("continuous variable {:?} has no binning rule", var.name)))
                }
                (_, None) => Ok(var.clone()),
                (_, Some(_)) => Err(Error::Config(format!("discrete variable {:?} cannot be binned", var.name))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Binning {
            source,
            binned: Arc::new(Schema::new(variables)?),
            rules,
        })
    }

    pub fn source_schema(&self) -> &Arc<Schema> {
        &self.source
    }

    pub fn binned_schema(&self) -> &Arc<Schema> {
        &self.binned
    }

    pub fn source_kind(&self, j: usize) -> VariableKind {
        self.source.variables[j].kind
    }

    pub fn rule(&self, j: usize) -> Option<&BinningRule> {
        self.rules[j].as_ref()
    }

    /// Categorical view of `data`: every variable as level indices.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.schema() != &*self.source {
            return Err(Error::Dataset("dataset schema does not match the binning's schema".into()));
        }
        let columns = data
            .columns()
            .iter()
            .zip(&self.rules)
            .map(|(column, rule)| match (column, rule) {
                (Column::Continuous(values), Some(rule)) => Column::Discrete(apply_binning(values, rule)),
                (other, _) => other.clone(),
            })
            .collect();
        Dataset::new(self.binned.clone(), columns, data.mask().to_vec())
    }
}
