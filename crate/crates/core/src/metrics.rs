//! Repeated-sampling performance metrics: absolute standardized bias,
//! relative MSE, coverage, weighted absolute bias, and cell-level RMSE and
//! accuracy of the imputed values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Estimand, EstimandClass};
use crate::stats::quantiles;
use crate::tabular::{Column, Dataset};

/// Quantile levels of the summary tables.
pub const SUMMARY_PROBS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Estimands with a population value below this are left out of ASB.
pub const MIN_POPULATION_VALUE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsbVariant {
    /// `|Σ_h (q̄_h − Q)| / (H·Q)`: deviations of opposite sign cancel.
    #[default]
    AbsoluteOfSum,
    /// `Σ_h |q̄_h − Q| / (H·Q)`.
    SumOfAbsolute,
}

pub fn asb(q_bars: &[f64], population_value: f64, variant: AsbVariant) -> Result<f64> {
    if q_bars.is_empty() {
        return Err(Error::EmptyInput("ASB estimates"));
    }
    if population_value.abs() < MIN_POPULATION_VALUE {
        return Err(Error::MetricUndefined("ASB with a zero population value".into()));
    }
    let h = q_bars.len() as f64;
    let total = match variant {
        AsbVariant::AbsoluteOfSum => q_bars.iter().map(|q| q - population_value).sum::<f64>().abs(),
        AsbVariant::SumOfAbsolute => q_bars.iter().map(|q| (q - population_value).abs()).sum::<f64>(),
    };
    Ok(total / (h * population_value))
}

/// `Σ (q̄_h − Q)² / Σ (q̂_h − Q)²`, with `q̂_h` the estimate from the sample
/// before amputation.
pub fn rel_mse(q_bars: &[f64], q_hats: &[f64], population_value: f64) -> Result<f64> {
    if q_bars.len() != q_hats.len() {
        return Err(Error::DimensionMismatch {
            context: "rel_mse",
            expected: q_bars.len(),
            found: q_hats.len(),
        });
    }
    let den: f64 = q_hats.iter().map(|q| (q - population_value).powi(2)).sum();
    if den <= 0.0 {
        return Err(Error::MetricUndefined("Rel.MSE with zero complete-data error".into()));
    }
    Ok(q_bars.iter().map(|q| (q - population_value).powi(2)).sum::<f64>() / den)
}

/// Share of closed intervals containing `population_value`.
pub fn coverage(intervals: &[(f64, f64)], population_value: f64) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput("coverage intervals"));
    }
    let hits = intervals
        .iter()
        .filter(|(lo, hi)| *lo <= population_value && population_value <= *hi)
        .count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// `Σ_k Q_k·|q̄_k − Q_k|` over all levels of one variable.
pub fn weighted_absolute_bias(q_bars: &[f64], truths: &[f64]) -> Result<f64> {
    if q_bars.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            context: "weighted_absolute_bias",
            expected: truths.len(),
            found: q_bars.len(),
        });
    }
    let total: f64 = truths.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::MetricUndefined(format!("level probabilities sum to {total}, not 1")));
    }
    Ok(q_bars.iter().zip(truths).map(|(q, t)| t * (q - t).abs()).sum())
}

fn check_triplet(truth: &Dataset, amputed: &Dataset, imputed: &Dataset) -> Result<()> {
    if truth.schema() != amputed.schema() || truth.schema() != imputed.schema() {
        return Err(Error::Dataset("truth, amputed and imputed datasets need one schema".into()));
    }
    if truth.n_rows() != amputed.n_rows() || truth.n_rows() != imputed.n_rows() {
        return Err(Error::Dataset("truth, amputed and imputed datasets need equal row counts".into()));
    }
    Ok(())
}

/// Root mean squared error over the cells missing in `amputed`, continuous
/// variables only, each scaled to `[0, 1]` by the range of `truth`.
pub fn overall_rmse(truth: &Dataset, amputed: &Dataset, imputed: &Dataset) -> Result<f64> {
    check_triplet(truth, amputed, imputed)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..truth.n_cols() {
        let (Column::Continuous(t), Column::Continuous(y)) = (truth.column(j), imputed.column(j)) else {
            continue;
        };
        let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let range = if hi > lo { hi - lo } else { 1.0 };
        for i in amputed.missing_rows(j) {
            sum += ((y[i] - t[i]) / range).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::MetricUndefined("no missing continuous cells".into()));
    }
    Ok((sum / count as f64).sqrt())
}

/// Share of cells missing in `amputed` over discrete variables whose imputed
/// level equals the truth.
pub fn overall_accuracy(truth: &Dataset, amputed: &Dataset, imputed: &Dataset) -> Result<f64> {
    check_triplet(truth, amputed, imputed)?;
    let mut hits = 0usize;
    let mut count = 0usize;
    for j in 0..truth.n_cols() {
        let (Column::Discrete(t), Column::Discrete(y)) = (truth.column(j), imputed.column(j)) else {
            continue;
        };
        for i in amputed.missing_rows(j) {
            hits += usize::from(y[i] == t[i]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::MetricUndefined("no missing categorical cells".into()));
    }
    Ok(hits as f64 / count as f64)
}

/// Quantiles of `values` at `probs`, using the same interpolation rule as
/// the binning.
pub fn quantile_summary(values: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile summary values"));
    }
    Ok(quantiles(values, probs))
}

/// Results for one estimand in one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    /// Pooled estimate from the imputations.
    pub q_bar: f64,
    /// Estimate from the sample before amputation.
    pub q_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimandMetrics {
    pub id: String,
    pub class: EstimandClass,
    pub population_value: f64,
    pub asb: Option<f64>,
    pub rel_mse: Option<f64>,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub class: String,
    pub metric: String,
    pub count: usize,
    pub quantiles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub estimands: Vec<EstimandMetrics>,
    pub summaries: Vec<QuantileRow>,
}

/// Scores every estimand across simulations (`simulations[h][e]`) and
/// summarizes ASB (×100), Rel.MSE and coverage per estimand class.
/// Estimands whose ASB or Rel.MSE is undefined are left out of that
/// metric's summary.
pub fn evaluate(estimands: &[Estimand], simulations: &[Vec<SimulationEstimate>], variant: AsbVariant) -> Result<MetricReport> {
    if simulations.is_empty() {
        return Err(Error::EmptyInput("simulations"));
    }
    if let Some(bad) = simulations.iter().find(|s| s.len() != estimands.len()) {
        return Err(Error::DimensionMismatch {
            context: "estimates per simulation",
            expected: estimands.len(),
            found: bad.len(),
        });
    }
    let per_estimand: Vec<EstimandMetrics> = estimands
        .iter()
        .enumerate()
        .map(|(e, est)| {
            let q_bars: Vec<f64> = simulations.iter().map(|s| s[e].q_bar).collect();
            let q_hats: Vec<f64> = simulations.iter().map(|s| s[e].q_hat).collect();
            let cis: Vec<(f64, f64)> = simulations.iter().map(|s| (s[e].ci_low, s[e].ci_high)).collect();
            let q = est.population_value;
            Ok(EstimandMetrics {
                id: est.id(),
                class: est.class,
                population_value: q,
                asb: asb(&q_bars, q, variant).ok(),
                rel_mse: rel_mse(&q_bars, &q_hats, q).ok(),
                coverage: coverage(&cis, q)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut by_class: BTreeMap<EstimandClass, Vec<&EstimandMetrics>> = BTreeMap::new();
    for m in &per_estimand {
        by_class.entry(m.class).or_default().push(m);
    }
    let mut summaries = Vec::new();
    for (class, members) in &by_class {
        let columns: [(&str, Vec<f64>); 3] = [
            ("asb_x100", members.iter().filter_map(|m| m.asb).map(|a| 100.0 * a).collect()),
            ("rel_mse", members.iter().filter_map(|m| m.rel_mse).collect()),
            ("coverage", members.iter().map(|m| m.coverage).collect()),
        ];
        for (metric, values) in columns {
            if values.is_empty() {
                continue;
            }
            summaries.push(QuantileRow {
                class: class.label(),
                metric: metric.to_string(),
                count: values.len(),
                quantiles: quantile_summary(&values, &SUMMARY_PROBS)?,
            });
        }
    }
    Ok(MetricReport {
        estimands: per_estimand,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Schema, VariableSpec};
    use std::sync::Arc;

    #[test]
    fn asb_examples() {
        assert_eq!(asb(&[0.2, 0.2], 0.2, AsbVariant::AbsoluteOfSum).unwrap(), 0.0);
        assert!((asb(&[0.25, 0.19], 0.2, AsbVariant::AbsoluteOfSum).unwrap() - 0.1).abs() < 1e-12);
        assert!(asb(&[0.25, 0.15], 0.2, AsbVariant::AbsoluteOfSum).unwrap() < 1e-12);
        assert!((asb(&[0.25, 0.15], 0.2, AsbVariant::SumOfAbsolute).unwrap() - 0.25).abs() < 1e-12);
        assert!(asb(&[0.1], 0.0, AsbVariant::AbsoluteOfSum).is_err());
    }

    #[test]
    fn rel_mse_examples() {
        assert_eq!(rel_mse(&[0.4, 0.6], &[0.4, 0.6], 0.5).unwrap(), 1.0);
        assert!((rel_mse(&[0.6, 0.4], &[0.55, 0.45], 0.5).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(rel_mse(&[0.5, 0.5], &[0.55, 0.45], 0.5).unwrap(), 0.0);
        assert!(rel_mse(&[0.6], &[0.5], 0.5).is_err());
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(coverage(&[(0.0, 1.0); 3], 0.5).unwrap(), 1.0);
        let cis = [(0.0, 0.1), (0.4, 0.6), (0.7, 0.9), (0.0, 0.2)];
        assert_eq!(coverage(&cis, 0.5).unwrap(), 0.25);
        assert_eq!(coverage(&[(0.5, 0.6)], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn weighted_bias_examples() {
        assert_eq!(weighted_absolute_bias(&[0.5, 0.3, 0.2], &[0.5, 0.3, 0.2]).unwrap(), 0.0);
        let w = weighted_absolute_bias(&[0.45, 0.35, 0.2], &[0.5, 0.3, 0.2]).unwrap();
        assert!((w - 0.04).abs() < 1e-12);
        let w = weighted_absolute_bias(&[0.63, 0.37], &[0.6, 0.4]).unwrap();
        assert!((w - 0.03).abs() < 1e-12);
    }

    fn triplet() -> (Dataset, Dataset) {
        let schema = Arc::new(Schema::new(vec![VariableSpec::continuous("x"), VariableSpec::binary("b", ["n", "y"])]).unwrap());
        let truth = Dataset::complete(
            schema,
            vec![Column::Continuous(vec![0.0, 1.0, 0.5, 0.2]), Column::Discrete(vec![0, 1, 1, 0])],
        )
        .unwrap();
        let keep = vec![vec![true, true, false, false], vec![false, false, false, false]];
        let amputed = truth.with_mask(&keep).unwrap();
        (truth, amputed)
    }

    #[test]
    fn rmse_and_accuracy() {
        let (truth, amputed) = triplet();
        let mut cols = truth.clone().into_columns();
        cols[0] = Column::Continuous(vec![9.0, 9.0, 0.8, 0.6]);
        cols[1] = Column::Discrete(vec![0, 1, 1, 1]);
        let imputed = Dataset::complete(truth.schema_arc().clone(), cols).unwrap();
        assert!((overall_rmse(&truth, &amputed, &imputed).unwrap() - 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(overall_accuracy(&truth, &amputed, &imputed).unwrap(), 0.75);
        assert_eq!(overall_rmse(&truth, &amputed, &truth).unwrap(), 0.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile_summary(&[3.0; 7], &SUMMARY_PROBS).unwrap(), vec![3.0; 5]);
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_summary(&v, &[0.5]).unwrap(), vec![50.5]);
        assert!(quantile_summary(&[], &[0.5]).is_err());
    }
}
