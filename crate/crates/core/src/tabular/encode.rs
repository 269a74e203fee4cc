//! Numeric encoding for the neural imputers: min-max scaling of continuous
//! variables and one-hot blocks for discrete ones.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Column, Dataset, Value};
use super::schema::Schema;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum BlockKind {
    Continuous { min: f64, max: f64 },
    Discrete { n_levels: usize },
}

/// Encoded columns `start..start + width` belonging to one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBlock {
    pub variable: usize,
    pub start: usize,
    pub width: usize,
    pub kind: BlockKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoricalDecode {
    /// Most probable level (lowest index on ties).
    #[default]
    Argmax,
    /// Draw a level from the block's probabilities.
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingMap {
    schema: Arc<Schema>,
    blocks: Vec<EncodedBlock>,
    dim: usize,
}

/// Encoded matrix, replicated observation mask (1 = observed) and the map
/// needed to invert the encoding.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub values: Array2<f64>,
    pub mask: Array2<f64>,
    pub map: EncodingMap,
}

/// Encodes `data`; missing cells are written as 0.
pub fn encode_numeric(data: &Dataset) -> Result<Encoded> {
    let map = EncodingMap::fit(data)?;
    let (values, mask) = map.encode(data)?;
    Ok(Encoded { values, mask, map })
}

impl EncodingMap {
    /// Scaling statistics come from observed cells only.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let mut blocks = Vec::with_capacity(data.n_cols());
        let mut start = 0;
        for (j, (var, column)) in data.schema().variables.iter().zip(data.columns()).enumerate() {
            let (kind, width) = match column {
                Column::Continuous(values) => {
                    let observed = values.iter().zip(data.mask_column(j)).filter(|(_, &m)| m).map(|(&v, _)| v);
                    let (min, max) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    if min > max {
                        return Err(Error::AllMissing { variable: var.name.clone() });
                    }
                    if min == max {
                        return Err(Error::ConstantColumn { variable: var.name.clone() });
                    }
                    (BlockKind::Continuous { min, max }, 1)
                }
                Column::Discrete(_) => (BlockKind::Discrete { n_levels: var.n_levels() }, var.n_levels()),
            };
            blocks.push(EncodedBlock { variable: j, start, width, kind });
            start += width;
        }
        Ok(EncodingMap {
            schema: data.schema_arc().clone(),
            blocks,
            dim: start,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[EncodedBlock] {
        &self.blocks
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    fn check_schema(&self, data: &Dataset) -> Result<()> {
        if data.schema() != &*self.schema {
            return Err(Error::Dataset("dataset schema does not match the encoding map".into()));
        }
        Ok(())
    }

    /// Encodes with the stored statistics. Returns (values, mask).
    pub fn encode(&self, data: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_schema(data)?;
        let n = data.n_rows();
        let mut values = Array2::<f64>::zeros((n, self.dim));
        let mut mask = Array2::<f64>::zeros((n, self.dim));
        for block in &self.blocks {
            let observed = data.mask_column(block.variable);
            let column = data.column(block.variable);
            for i in 0..n {
                if !observed[i] {
                    continue;
                }
                for c in block.start..block.start + block.width {
                    mask[[i, c]] = 1.0;
                }
                match (&block.kind, column.value(i)) {
                    (BlockKind::Continuous { min, max }, Value::Real(x)) => {
                        values[[i, block.start]] = (x - min) / (max - min);
                    }
                    (BlockKind::Discrete { .. }, Value::Level(l)) => {
                        values[[i, block.start + l as usize]] = 1.0;
                    }
                    _ => unreachable!("block kind mirrors column kind"),
                }
            }
        }
        Ok((values, mask))
    }

    fn decode_cell<R: Rng + ?Sized>(block: &EncodedBlock, row: ArrayView1<f64>, mode: CategoricalDecode, rng: &mut R) -> Value {
        match block.kind {
            BlockKind::Continuous { min, max } => {
                let scaled = row[block.start].clamp(0.0, 1.0);
                Value::Real((min + scaled * (max - min)).clamp(min, max))
            }
            BlockKind::Discrete { n_levels } => {
                let probs = row.slice(ndarray::s![block.start..block.start + n_levels]);
                let level = match mode {
                    CategoricalDecode::Argmax => argmax(probs),
                    CategoricalDecode::Sample => sample_index(probs, rng),
                };
                Value::Level(level as u32)
            }
        }
    }

    /// Numeric inverse of every cell (continuous clamped to [min, max],
    /// discrete by argmax).
    pub fn decode(&self, values: &Array2<f64>) -> Result<Vec<Column>> {
        if values.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "decode",
                expected: self.dim,
                found: values.ncols(),
            });
        }
        // argmax decoding draws nothing
        let mut rng = crate::rng::SeedStream::new(0).rng();
        let columns = self
            .blocks
            .iter()
            .map(|block| {
                let mut column = match block.kind {
                    BlockKind::Continuous { .. } => Column::Continuous(vec![0.0; values.nrows()]),
                    BlockKind::Discrete { .. } => Column::Discrete(vec![0; values.nrows()]),
                };
                for (i, row) in values.outer_iter().enumerate() {
                    column.set(i, Self::decode_cell(block, row, CategoricalDecode::Argmax, &mut rng));
                }
                column
            })
            .collect();
        Ok(columns)
    }

    /// Completes `reference`: observed cells are copied bit-for-bit, missing
    /// cells are decoded from `values`.
    pub fn decode_into<R: Rng + ?Sized>(
        &self,
        values: &Array2<f64>,
        reference: &Dataset,
        mode: CategoricalDecode,
        rng: &mut R,
    ) -> Result<Dataset> {
        self.check_schema(reference)?;
        if values.nrows() != reference.n_rows() || values.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "decode_into",
                expected: self.dim,
                found: values.ncols(),
            });
        }
        let mut columns = reference.columns().to_vec();
        for block in &self.blocks {
            let observed = reference.mask_column(block.variable);
            for i in (0..reference.n_rows()).filter(|&i| !observed[i]) {
                let value = Self::decode_cell(block, values.row(i), mode, rng);
                columns[block.variable].set(i, value);
            }
        }
        Dataset::complete(reference.schema_arc().clone(), columns)
    }
}

fn argmax(values: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

fn sample_index<R: Rng + ?Sized>(probs: ArrayView1<f64>, rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    if total <= 0.0 {
        return argmax(probs);
    }
    let mut u = rng.random::<f64>() * total;
    for (k, &p) in probs.iter().enumerate() {
        u -= p.max(0.0);
        if u < 0.0 {
            return k;
        }
    }
    probs.len() - 1
}
