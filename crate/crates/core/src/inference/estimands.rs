use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{filter_estimand_levels, Binning, Column, Dataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimandKind {
    Marginal,
    Bivariate,
}

/// Whether a variable was discrete to begin with or is a binned continuous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableOrigin {
    Categorical,
    BinnedContinuous,
    /// Bivariate estimand over one variable of each origin.
    Mixed,
}

/// Reporting class of an estimand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EstimandClass {
    pub kind: EstimandKind,
    pub origin: VariableOrigin,
}

impl EstimandClass {
    pub fn label(&self) -> String {
        let kind = match self.kind {
            EstimandKind::Marginal => "marginal",
            EstimandKind::Bivariate => "bivariate",
        };
        let origin = match self.origin {
            VariableOrigin::Categorical => "categorical",
            VariableOrigin::BinnedContinuous => "binned-continuous",
            VariableOrigin::Mixed => "mixed",
        };
        format!("{kind}/{origin}")
    }
}

/// Which cells of a two-way table become estimands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BivariateCells {
    /// Every `K_a × K_b` level pair.
    #[default]
    All,
    /// `(K_a − 1) × (K_b − 1)` pairs, dropping each variable's last level.
    DropLast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimandOptions {
    pub bivariate_cells: BivariateCells,
    pub include_bivariate: bool,
}

impl Default for EstimandOptions {
    fn default() -> Self {
        EstimandOptions {
            bivariate_cells: BivariateCells::All,
            include_bivariate: true,
        }
    }
}

/// A population cell probability over one or two discrete variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimand {
    pub kind: EstimandKind,
    pub variables: Vec<usize>,
    pub names: Vec<String>,
    pub levels: Vec<u32>,
    pub level_labels: Vec<String>,
    pub population_value: f64,
    pub class: EstimandClass,
}

impl Estimand {
    /// Stable identifier such as `age=q1` or `sex=f&race=b`.
    pub fn id(&self) -> String {
        self.names
            .iter()
            .zip(&self.level_labels)
            .map(|(n, l)| format!("{n}={l}"))
            .collect::<Vec<_>>()
            .join("&")
    }
}

/// Complete-data estimate of a proportion and its variance `q(1 − q)/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub q: f64,
    pub u: f64,
}

impl PointEstimate {
    pub fn from_count(count: usize, n: usize) -> Self {
        if n == 0 {
            return PointEstimate { q: f64::NAN, u: f64::NAN };
        }
        let q = count as f64 / n as f64;
        PointEstimate { q, u: q * (1.0 - q) / n as f64 }
    }
}

fn discrete(data: &Dataset, j: usize) -> Result<&[u32]> {
    match data.column(j) {
        Column::Discrete(v) => Ok(v),
        Column::Continuous(_) => Err(Error::Dataset(format!(
            "estimands need discrete variables; bin {:?} first",
            data.schema().variables[j].name
        ))),
    }
}

fn origin_of(binning: Option<&Binning>, j: usize) -> VariableOrigin {
    match binning.and_then(|b| b.rule(j)) {
        Some(_) => VariableOrigin::BinnedContinuous,
        None => VariableOrigin::Categorical,
    }
}

/// Marginal estimands for the first `K − 1` levels of each variable and
/// bivariate cells over every pair of distinct variables, keeping only
/// levels that pass the `n·p > 10`, `n·(1 − p) > 10` screen. A bivariate
/// cell needs both of its levels to pass. Population values are exact
/// counts over `population`, which must be fully observed and discrete
/// (apply the binning first).
pub fn enumerate_estimands(
    population: &Dataset,
    binning: Option<&Binning>,
    n: usize,
    options: &EstimandOptions,
) -> Result<Vec<Estimand>> {
    if !population.is_fully_observed() {
        return Err(Error::Dataset("population must be fully observed".into()));
    }
    let schema = population.schema();
    let p = schema.len();
    let mut passes: Vec<Vec<bool>> = schema.variables.iter().map(|v| vec![false; v.n_levels()]).collect();
    for j in 0..p {
        discrete(population, j)?;
    }
    for (j, k) in filter_estimand_levels(population, n) {
        passes[j][k as usize] = true;
    }
    let total = population.n_rows();
    let mut out = Vec::new();
    for j in 0..p {
        let var = &schema.variables[j];
        let values = discrete(population, j)?;
        let mut counts = vec![0usize; var.n_levels()];
        for &v in values {
            counts[v as usize] += 1;
        }
        for k in 0..var.n_levels() - 1 {
            if !passes[j][k] {
                continue;
            }
            out.push(Estimand {
                kind: EstimandKind::Marginal,
                variables: vec![j],
                names: vec![var.name.clone()],
                levels: vec![k as u32],
                level_labels: vec![var.levels[k].clone()],
                population_value: counts[k] as f64 / total as f64,
                class: EstimandClass {
                    kind: EstimandKind::Marginal,
                    origin: origin_of(binning, j),
                },
            });
        }
    }
    if !options.include_bivariate {
        return Ok(out);
    }
    for a in 0..p {
        for b in a + 1..p {
            let (va, vb) = (&schema.variables[a], &schema.variables[b]);
            let (ka, kb) = (va.n_levels(), vb.n_levels());
            let table = contingency(discrete(population, a)?, discrete(population, b)?, ka, kb);
            let (oa, ob) = (origin_of(binning, a), origin_of(binning, b));
            let origin = if oa == ob { oa } else { VariableOrigin::Mixed };
            let (la, lb) = match options.bivariate_cells {
                BivariateCells::All => (ka, kb),
                BivariateCells::DropLast => (ka - 1, kb - 1),
            };
            for k in 0..la {
                for l in 0..lb {
                    if !(passes[a][k] && passes[b][l]) {
                        continue;
                    }
                    out.push(Estimand {
                        kind: EstimandKind::Bivariate,
                        variables: vec![a, b],
                        names: vec![va.name.clone(), vb.name.clone()],
                        levels: vec![k as u32, l as u32],
                        level_labels: vec![va.levels[k].clone(), vb.levels[l].clone()],
                        population_value: table[k * kb + l] as f64 / total as f64,
                        class: EstimandClass {
                            kind: EstimandKind::Bivariate,
                            origin,
                        },
                    });
                }
            }
        }
    }
    Ok(out)
}

fn contingency(a: &[u32], b: &[u32], ka: usize, kb: usize) -> Vec<usize> {
    let mut table = vec![0usize; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize * kb + y as usize] += 1;
    }
    table
}

fn check_complete(data: &Dataset) -> Result<()> {
    if !data.is_fully_observed() {
        return Err(Error::Dataset("estimates need a completed dataset".into()));
    }
    Ok(())
}

/// Cell proportion of one estimand in a completed dataset.
pub fn estimate(completed: &Dataset, estimand: &Estimand) -> Result<PointEstimate> {
    check_complete(completed)?;
    let n = completed.n_rows();
    let count = match estimand.kind {
        EstimandKind::Marginal => {
            let v = discrete(completed, estimand.variables[0])?;
            v.iter().filter(|&&x| x == estimand.levels[0]).count()
        }
        EstimandKind::Bivariate => {
            let a = discrete(completed, estimand.variables[0])?;
            let b = discrete(completed, estimand.variables[1])?;
            a.iter()
                .zip(b)
                .filter(|(&x, &y)| x == estimand.levels[0] && y == estimand.levels[1])
                .count()
        }
    };
    Ok(PointEstimate::from_count(count, n))
}

/// Estimates for a whole estimand list, counting each variable and each
/// variable pair once.
pub fn estimate_all(completed: &Dataset, estimands: &[Estimand]) -> Result<Vec<PointEstimate>> {
    check_complete(completed)?;
    let n = completed.n_rows();
    let schema = completed.schema();
    let mut tables: HashMap<(usize, usize), (Vec<usize>, usize)> = HashMap::new();
    estimands
        .iter()
        .map(|e| {
            let (a, b) = match e.kind {
                EstimandKind::Marginal => (e.variables[0], usize::MAX),
                EstimandKind::Bivariate => (e.variables[0], e.variables[1]),
            };
            if !tables.contains_key(&(a, b)) {
                let ka = schema.variables[a].n_levels();
                let entry = if b == usize::MAX {
                    let mut counts = vec![0usize; ka];
                    for &v in discrete(completed, a)? {
                        counts[v as usize] += 1;
                    }
                    (counts, 1)
                } else {
                    let kb = schema.variables[b].n_levels();
                    (contingency(discrete(completed, a)?, discrete(completed, b)?, ka, kb), kb)
                };
                tables.insert((a, b), entry);
            }
            let (table, kb) = &tables[&(a, b)];
            let cell = match e.kind {
                EstimandKind::Marginal => e.levels[0] as usize,
                EstimandKind::Bivariate => e.levels[0] as usize * kb + e.levels[1] as usize,
            };
            Ok(PointEstimate::from_count(table[cell], n))
        })
        .collect()
}
