//! CART and random forests used as conditional models inside chained
//! equations imputation.

mod cart;
mod forest;

pub use cart::{fit_cart, Node, SplitRule, Tree};
pub use forest::{default_mtry, fit_forest, Forest, ForestParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Column, Value, MISSING_LEVEL};

/// What to do when a prediction row carries a categorical level that never
/// reached a split node during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnseenLevelPolicy {
    /// Follow the child that received more training rows (left on ties).
    #[default]
    LargerChild,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_leaf: usize,
    /// A split is kept only if it lowers impurity by at least this fraction
    /// of the root impurity.
    pub complexity_threshold: f64,
    pub max_depth: Option<usize>,
    pub unseen_level: UnseenLevelPolicy,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 5,
            complexity_threshold: 1e-4,
            max_depth: None,
            unseen_level: UnseenLevelPolicy::LargerChild,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if !(self.complexity_threshold >= 0.0) {
            return Err(Error::Config("complexity_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

/// Predictor columns of a fit. Discrete columns carry their level count so
/// per-level statistics can be sized up front.
#[derive(Clone, Debug)]
pub struct Features<'a> {
    columns: Vec<&'a Column>,
    n_levels: Vec<usize>,
}

impl<'a> Features<'a> {
    /// `n_levels[j]` is ignored for continuous columns.
    pub fn new(columns: Vec<&'a Column>, n_levels: Vec<usize>) -> Result<Self> {
        if columns.len() != n_levels.len() {
            return Err(Error::DimensionMismatch {
                context: "feature level counts",
                expected: columns.len(),
                found: n_levels.len(),
            });
        }
        if let Some(first) = columns.first() {
            if let Some(bad) = columns.iter().find(|c| c.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    context: "feature column length",
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        Ok(Features { columns, n_levels })
    }

    /// Level counts inferred from the largest observed level.
    pub fn infer(columns: Vec<&'a Column>) -> Result<Self> {
        let n_levels = columns.iter().map(|c| infer_levels(c)).collect();
        Self::new(columns, n_levels)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn column(&self, j: usize) -> &'a Column {
        self.columns[j]
    }

    pub fn n_levels(&self, j: usize) -> usize {
        self.n_levels[j]
    }

    pub fn row(&self, i: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.value(i)).collect()
    }
}

pub(crate) fn infer_levels(column: &Column) -> usize {
    match column {
        Column::Continuous(_) => 0,
        Column::Discrete(v) => v
            .iter()
            .filter(|&&l| l != MISSING_LEVEL)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0),
    }
}

/// Target of a fit.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Continuous(&'a [f64]),
    Discrete { values: &'a [u32], n_levels: usize },
}

impl<'a> Target<'a> {
    pub fn from_column(column: &'a Column, n_levels: usize) -> Self {
        match column {
            Column::Continuous(v) => Target::Continuous(v),
            Column::Discrete(v) => Target::Discrete { values: v, n_levels },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Target::Continuous(v) => v.len(),
            Target::Discrete { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Training target values gathered in a leaf.
#[derive(Clone, Debug, PartialEq)]
pub enum Donors {
    Continuous(Vec<f64>),
    Discrete(Vec<u32>),
}

impl Donors {
    pub fn len(&self) -> usize {
        match self {
            Donors::Continuous(v) => v.len(),
            Donors::Discrete(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> Value {
        match self {
            Donors::Continuous(v) => Value::Real(v[k]),
            Donors::Discrete(v) => Value::Level(v[k]),
        }
    }
}
