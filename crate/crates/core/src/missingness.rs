//! Amputation: MCAR and grouped-logistic MAR missingness over a fully
//! observed sample.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Column, Dataset, Schema, VariableKind};

/// Mean-probability tolerance of [`calibrate_intercept`].
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;
pub const INTERCEPT_BRACKET: (f64, f64) = (-20.0, 20.0);
pub const CALIBRATION_MAX_ITER: usize = 200;

/// Magnitudes the default MAR design draws coefficients from (either sign).
pub const DEFAULT_COEFFICIENT_SET: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn require_complete(sample: &Dataset) -> Result<()> {
    if !sample.is_fully_observed() {
        return Err(Error::Dataset("amputation expects a fully observed sample".into()));
    }
    Ok(())
}

/// Sets each cell missing independently with probability `rate`.
///
/// Exactly one uniform draw is consumed per cell, column by column, so the
/// mask depends only on the generator state, the shape, and `rate`.
pub fn apply_mcar<R: Rng + ?Sized>(sample: &Dataset, rate: f64, rng: &mut R) -> Result<Dataset> {
    require_complete(sample)?;
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("missing rate {rate} outside [0, 1]")));
    }
    let keep: Vec<Vec<bool>> = (0..sample.n_cols())
        .map(|_| (0..sample.n_rows()).map(|_| rng.random::<f64>() >= rate).collect())
        .collect();
    sample.with_mask(&keep)
}

/// Finds the intercept `b0` with `mean_i logistic(b0 + x_i·coefficients)`
/// within [`CALIBRATION_TOLERANCE`] of `target_rate`, by bisection on
/// [`INTERCEPT_BRACKET`].
pub fn calibrate_intercept(coefficients: &[f64], covariates: &Array2<f64>, target_rate: f64) -> Result<f64> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::Config(format!("target rate {target_rate} outside (0, 1)")));
    }
    if covariates.ncols() != coefficients.len() {
        return Err(Error::DimensionMismatch {
            context: "calibrate_intercept",
            expected: covariates.ncols(),
            found: coefficients.len(),
        });
    }
    if covariates.nrows() == 0 {
        return Err(Error::EmptyInput("calibration covariates"));
    }
    let eta = covariates.dot(&Array1::from(coefficients.to_vec()));
    let mean_prob = |b0: f64| eta.iter().map(|&e| logistic(b0 + e)).sum::<f64>() / eta.len() as f64;

    let (mut lo, mut hi) = INTERCEPT_BRACKET;
    if mean_prob(lo) > target_rate + CALIBRATION_TOLERANCE || mean_prob(hi) < target_rate - CALIBRATION_TOLERANCE {
        return Err(Error::NoConvergence {
            what: "intercept calibration (target outside bracket)",
            iterations: 0,
        });
    }
    for _ in 0..CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gap = mean_prob(mid) - target_rate;
        if gap.abs() <= CALIBRATION_TOLERANCE {
            return Ok(mid);
        }
        if gap < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        what: "intercept calibration",
        iterations: CALIBRATION_MAX_ITER,
    })
}

/// Width of the covariate encoding: one column per continuous variable,
/// `K − 1` dummies per discrete variable.
pub fn covariate_dim(schema: &Schema, conditioning: &[usize]) -> usize {
    conditioning
        .iter()
        .map(|&j| {
            let var = &schema.variables[j];
            match var.kind {
                VariableKind::Continuous => 1,
                _ => var.n_levels() - 1,
            }
        })
        .sum()
}

/// Continuous conditioning variables are standardized with the sample mean
/// and standard deviation; discrete ones become dummies for levels 1..K.
pub fn encode_covariates(sample: &Dataset, conditioning: &[usize]) -> Result<Array2<f64>> {
    let n = sample.n_rows();
    let mut out = Array2::<f64>::zeros((n, covariate_dim(sample.schema(), conditioning)));
    let mut offset = 0;
    for &j in conditioning {
        if sample.n_missing_in(j) > 0 {
            return Err(Error::ConditioningMissing {
                variable: sample.schema().variables[j].name.clone(),
            });
        }
        match sample.column(j) {
            Column::Continuous(values) => {
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                let sd = var.sqrt();
                for (i, v) in values.iter().enumerate() {
                    out[[i, offset]] = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
                }
                offset += 1;
            }
            Column::Discrete(values) => {
                let width = sample.schema().variables[j].n_levels() - 1;
                for (i, &v) in values.iter().enumerate() {
                    if v > 0 {
                        out[[i, offset + v as usize - 1]] = 1.0;
                    }
                }
                offset += width;
            }
        }
    }
    Ok(out)
}

/// Grouped logistic nonresponse design. Variables listed in `groups` share
/// their group's per-row missingness probability; conditioning variables stay
/// fully observed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarConfig {
    pub conditioning_variables: Vec<String>,
    pub groups: Vec<Vec<String>>,
    /// One vector per group over the encoded conditioning variables.
    pub coefficients: Vec<Vec<f64>>,
    pub target_rate: f64,
}

struct ResolvedMar {
    conditioning: Vec<usize>,
    /// group index per variable (None for conditioning variables)
    group_of: Vec<Option<usize>>,
}

impl MarConfig {
    /// Random design: the non-conditioning variables are shuffled into groups
    /// of the given sizes, and each coefficient is drawn from
    /// [`DEFAULT_COEFFICIENT_SET`].
    pub fn random<R: Rng + ?Sized>(
        schema: &Schema,
        conditioning_variables: Vec<String>,
        group_sizes: &[usize],
        target_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let conditioning = conditioning_variables
            .iter()
            .map(|name| schema.require(name))
            .collect::<Result<Vec<_>>>()?;
        let mut rest: Vec<usize> = (0..schema.len()).filter(|j| !conditioning.contains(j)).collect();
        if group_sizes.iter().sum::<usize>() != rest.len() {
            return Err(Error::Config(format!(
                "group sizes {group_sizes:?} do not cover the {} non-conditioning variables",
                rest.len()
            )));
        }
        rest.shuffle(rng);
        let mut groups = Vec::with_capacity(group_sizes.len());
        let mut start = 0;
        for &size in group_sizes {
            let mut members: Vec<usize> = rest[start..start + size].to_vec();
            members.sort_unstable();
            groups.push(members.iter().map(|&j| schema.variables[j].name.clone()).collect());
            start += size;
        }
        let dim = covariate_dim(schema, &conditioning);
        let coefficients = group_sizes
            .iter()
            .map(|_| (0..dim).map(|_| DEFAULT_COEFFICIENT_SET[rng.random_range(0..DEFAULT_COEFFICIENT_SET.len())]).collect())
            .collect();
        let config = MarConfig {
            conditioning_variables,
            groups,
            coefficients,
            target_rate,
        };
        config.resolve(schema)?;
        Ok(config)
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        self.resolve(schema).map(|_| ())
    }

    fn resolve(&self, schema: &Schema) -> Result<ResolvedMar> {
        let conditioning = self
            .conditioning_variables
            .iter()
            .map(|name| schema.require(name))
            .collect::<Result<Vec<_>>>()?;
        let mut group_of: Vec<Option<usize>> = vec![None; schema.len()];
        let mut assigned = vec![false; schema.len()];
        for &j in &conditioning {
            if assigned[j] {
                return Err(Error::Config(format!("{:?} listed twice", schema.variables[j].name)));
            }
            assigned[j] = true;
        }
        for (g, group) in self.groups.iter().enumerate() {
            for name in group {
                let j = schema.require(name)?;
                if assigned[j] {
                    return Err(Error::Config(format!(
                        "{name:?} is conditioning or appears in more than one group"
                    )));
                }
                assigned[j] = true;
                group_of[j] = Some(g);
            }
        }
        if let Some(j) = assigned.iter().position(|&a| !a) {
            return Err(Error::Config(format!(
                "{:?} is neither conditioning nor in a group",
                schema.variables[j].name
            )));
        }
        if self.coefficients.len() != self.groups.len() {
            return Err(Error::Config("one coefficient vector per group is required".into()));
        }
        let dim = covariate_dim(schema, &conditioning);
        if let Some(bad) = self.coefficients.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "MAR coefficients",
                expected: dim,
                found: bad.len(),
            });
        }
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return Err(Error::Config(format!("target rate {} outside (0, 1)", self.target_rate)));
        }
        Ok(ResolvedMar { conditioning, group_of })
    }

    /// Per-row missingness probability of every group.
    pub fn group_probabilities(&self, sample: &Dataset) -> Result<Vec<Vec<f64>>> {
        let resolved = self.resolve(sample.schema())?;
        self.probabilities(sample, &resolved)
    }

    fn probabilities(&self, sample: &Dataset, resolved: &ResolvedMar) -> Result<Vec<Vec<f64>>> {
        let covariates = encode_covariates(sample, &resolved.conditioning)?;
        self.coefficients
            .iter()
            .map(|coef| {
                let b0 = calibrate_intercept(coef, &covariates, self.target_rate)?;
                let eta = covariates.dot(&Array1::from(coef.clone()));
                Ok(eta.iter().map(|&e| logistic(b0 + e)).collect())
            })
            .collect()
    }
}

/// Grouped logistic MAR amputation. One uniform draw per (row, variable) for
/// every grouped variable, visited in schema order.
pub fn apply_mar<R: Rng + ?Sized>(sample: &Dataset, config: &MarConfig, rng: &mut R) -> Result<Dataset> {
    let resolved = config.resolve(sample.schema())?;
    for &j in &resolved.conditioning {
        if sample.n_missing_in(j) > 0 {
            return Err(Error::ConditioningMissing {
                variable: sample.schema().variables[j].name.clone(),
            });
        }
    }
    require_complete(sample)?;
    let probs = config.probabilities(sample, &resolved)?;
    let keep: Vec<Vec<bool>> = resolved
        .group_of
        .iter()
        .map(|group| match group {
            Some(g) => probs[*g].iter().map(|&p| rng.random::<f64>() >= p).collect(),
            None => vec![true; sample.n_rows()],
        })
        .collect();
    sample.with_mask(&keep)
}
