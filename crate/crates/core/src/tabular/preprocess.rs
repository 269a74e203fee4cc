//! Population preprocessing: sampling, rare-level merging and the
//! normal-approximation screen on estimand levels.

use std::sync::Arc;

use rand::Rng;

use super::dataset::{Column, Dataset, MISSING_LEVEL};
use super::schema::{Schema, VariableKind, VariableSpec};
use crate::error::{Error, Result};

pub const OTHER_LEVEL: &str = "other";

/// Draws `n` distinct rows without replacement, in random order.
pub fn draw_sample<R: Rng + ?Sized>(population: &Dataset, n: usize, rng: &mut R) -> Result<Dataset> {
    if n > population.n_rows() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: population.n_rows(),
        });
    }
    if !population.is_fully_observed() {
        return Err(Error::Dataset("the population must be fully observed".into()));
    }
    if n == 0 {
        return Ok(Dataset::empty(population.schema_arc().clone()));
    }
    let rows = rand::seq::index::sample(rng, population.n_rows(), n).into_vec();
    Ok(population.select_rows(&rows))
}

/// Coalesces levels observed fewer than `min_count` times into a single
/// `"other"` level (reusing an existing `"other"` level when present).
pub fn merge_rare_levels(column: &[u32], spec: &VariableSpec, min_count: usize) -> Result<(Vec<u32>, VariableSpec)> {
    if spec.kind != VariableKind::Categorical {
        return Err(Error::Config(format!("{:?} is not categorical", spec.name)));
    }
    let mut counts = vec![0usize; spec.n_levels()];
    for &v in column.iter().filter(|&&v| v != MISSING_LEVEL) {
        counts[v as usize] += 1;
    }
    let rare: Vec<bool> = counts.iter().map(|&c| c < min_count).collect();
    if !rare.iter().any(|&r| r) {
        return Ok((column.to_vec(), spec.clone()));
    }

    let mut levels: Vec<String> = Vec::new();
    let mut recode = vec![0u32; spec.n_levels()];
    for (k, label) in spec.levels.iter().enumerate() {
        if !rare[k] {
            recode[k] = levels.len() as u32;
            levels.push(label.clone());
        }
    }
    let other = match levels.iter().position(|l| l == OTHER_LEVEL) {
        Some(i) => i as u32,
        None => {
            levels.push(OTHER_LEVEL.to_string());
            (levels.len() - 1) as u32
        }
    };
    for (k, &is_rare) in rare.iter().enumerate() {
        if is_rare {
            recode[k] = other;
        }
    }
    if levels.len() < 2 {
        return Err(Error::TooFewLevels {
            variable: spec.name.clone(),
            remaining: levels.len(),
        });
    }
    let recoded = column
        .iter()
        .map(|&v| if v == MISSING_LEVEL { v } else { recode[v as usize] })
        .collect();
    let merged = VariableSpec::categorical(spec.name.clone(), levels);
    Ok((recoded, merged))
}

/// Applies [`merge_rare_levels`] to every categorical variable of `data`.
pub fn merge_rare_levels_all(data: &Dataset, min_count: usize) -> Result<Dataset> {
    let mut variables = Vec::with_capacity(data.n_cols());
    let mut columns = Vec::with_capacity(data.n_cols());
    for (var, column) in data.schema().variables.iter().zip(data.columns()) {
        match (var.kind, column) {
            (VariableKind::Categorical, Column::Discrete(values)) => {
                let (recoded, spec) = merge_rare_levels(values, var, min_count)?;
                variables.push(spec);
                columns.push(Column::Discrete(recoded));
            }
            _ => {
                variables.push(var.clone());
                columns.push(column.clone());
            }
        }
    }
    Dataset::new(Arc::new(Schema::new(variables)?), columns, data.mask().to_vec())
}

/// Discrete (variable, level) pairs whose population share `p` satisfies
/// `n·p > 10` and `n·(1−p) > 10` (strict). Continuous variables are skipped;
/// bin them first.
pub fn filter_estimand_levels(population: &Dataset, n: usize) -> Vec<(usize, u32)> {
    let mut kept = Vec::new();
    for (j, (var, column)) in population.schema().variables.iter().zip(population.columns()).enumerate() {
        let Column::Discrete(values) = column else { continue };
        let mut counts = vec![0u128; var.n_levels()];
        let mut total = 0u128;
        for &v in values.iter().filter(|&&v| v != MISSING_LEVEL) {
            counts[v as usize] += 1;
            total += 1;
        }
        if total == 0 {
            continue;
        }
        let n = n as u128;
        for (k, &count) in counts.iter().enumerate() {
            // n·count/total > 10 and n·(total−count)/total > 10, in integers
            if n * count > 10 * total && n * (total - count) > 10 * total {
                kept.push((j, k as u32));
            }
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn counts_column(counts: &[usize]) -> Vec<u32> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k as u32, c))
            .collect()
    }

    #[test]
    fn merges_small_levels() {
        let spec = VariableSpec::categorical("v", ["A", "B", "C", "D"]);
        let column = counts_column(&[500, 400, 5, 5]);
        let (recoded, merged) = merge_rare_levels(&column, &spec, 10).unwrap();
        assert_eq!(merged.levels, vec!["A", "B", "other"]);
        assert_eq!(recoded.iter().filter(|&&v| v == 2).count(), 10);
        assert_eq!(recoded[0], 0);
    }

    #[test]
    fn nothing_rare_is_identity() {
        let spec = VariableSpec::categorical("v", ["A", "B", "C"]);
        let column = counts_column(&[50, 40, 30]);
        let (recoded, merged) = merge_rare_levels(&column, &spec, 10).unwrap();
        assert_eq!(recoded, column);
        assert_eq!(merged, spec);
    }

    #[test]
    fn language_style_five_to_three() {
        let spec = VariableSpec::categorical("lang", ["english", "spanish", "chinese", "vietnamese", "tagalog"]);
        let counts = [8_000, 1_200, 300, 200, 300];
        let column = counts_column(&counts);
        let (recoded, merged) = merge_rare_levels(&column, &spec, 500).unwrap();
        assert_eq!(merged.levels, vec!["english", "spanish", "other"]);
        // counting oracle: merged share equals the summed share of the rare levels
        let other = recoded.iter().filter(|&&v| v == 2).count();
        assert_eq!(other, 300 + 200 + 300);
        assert_eq!(recoded.iter().filter(|&&v| v == 0).count(), 8_000);
    }

    #[test]
    fn merging_into_one_level_fails() {
        let spec = VariableSpec::categorical("v", ["A", "B", "C"]);
        let column = counts_column(&[3, 2, 1]);
        assert!(matches!(merge_rare_levels(&column, &spec, 10), Err(Error::TooFewLevels { .. })));
    }

    fn binary_population(ones: usize, total: usize) -> Dataset {
        let schema = Arc::new(Schema::new(vec![VariableSpec::binary("b", ["no", "yes"])]).unwrap());
        let values = (0..total).map(|i| u32::from(i < ones)).collect();
        Dataset::complete(schema, vec![Column::Discrete(values)]).unwrap()
    }

    #[test]
    fn clt_screen() {
        // p = 0.5
        let pop = binary_population(50_000, 100_000);
        assert_eq!(filter_estimand_levels(&pop, 10_000), vec![(0, 0), (0, 1)]);
        // p = 0.0005 -> np = 5 for "yes", n(1-p) = 5 for "no"
        let pop = binary_population(50, 100_000);
        assert!(filter_estimand_levels(&pop, 10_000).is_empty());
        // p = 10/n exactly -> excluded
        let pop = binary_population(100, 100_000);
        assert!(filter_estimand_levels(&pop, 10_000).is_empty());
        let pop = binary_population(101, 100_000);
        assert_eq!(filter_estimand_levels(&pop, 10_000), vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn sampling_contracts() {
        let pop = binary_population(30, 100);
        let mut rng = SeedStream::new(1).rng();
        let all = draw_sample(&pop, 100, &mut rng).unwrap();
        let ones = all.column(0).as_discrete().unwrap().iter().filter(|&&v| v == 1).count();
        assert_eq!(ones, 30);
        let empty = draw_sample(&pop, 0, &mut rng).unwrap();
        assert_eq!(empty.n_rows(), 0);
        assert_eq!(empty.schema(), pop.schema());
        assert!(matches!(draw_sample(&pop, 101, &mut rng), Err(Error::SampleTooLarge { .. })));
    }
}
