use std::sync::Arc;

use super::schema::{Schema, VariableKind};
use crate::error::{Error, Result};

/// Level index stored in missing discrete cells. Never a valid level.
pub const MISSING_LEVEL: u32 = u32::MAX;

/// Value stored in missing continuous cells.
pub const MISSING_REAL: f64 = f64::NAN;

#[derive(Clone, Debug)]
pub enum Column {
    Continuous(Vec<f64>),
    /// Level indices into the variable's level list.
    Discrete(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Discrete(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, row: usize) -> Value {
        match self {
            Column::Continuous(v) => Value::Real(v[row]),
            Column::Discrete(v) => Value::Level(v[row]),
        }
    }

    pub fn set(&mut self, row: usize, value: Value) {
        match (self, value) {
            (Column::Continuous(v), Value::Real(x)) => v[row] = x,
            (Column::Discrete(v), Value::Level(l)) => v[row] = l,
            _ => panic!("value kind does not match column kind"),
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Column::Continuous(v) => Some(v),
            Column::Discrete(_) => None,
        }
    }

    pub fn as_discrete(&self) -> Option<&[u32]> {
        match self {
            Column::Discrete(v) => Some(v),
            Column::Continuous(_) => None,
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Column::Discrete(v) => Column::Discrete(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    fn clear(&mut self, row: usize) {
        match self {
            Column::Continuous(v) => v[row] = MISSING_REAL,
            Column::Discrete(v) => v[row] = MISSING_LEVEL,
        }
    }

    fn bit_eq(&self, other: &Column, row: usize) -> bool {
        match (self, other) {
            (Column::Continuous(a), Column::Continuous(b)) => a[row].to_bits() == b[row].to_bits(),
            (Column::Discrete(a), Column::Discrete(b)) => a[row] == b[row],
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Level(u32),
}

/// Column-typed table with a missingness mask (`true` = observed).
///
/// Missing cells always hold [`MISSING_REAL`] or [`MISSING_LEVEL`]. A
/// `Dataset` is immutable once built; imputers produce new datasets.
#[derive(Clone, Debug)]
pub struct Dataset {
    schema: Arc<Schema>,
    n_rows: usize,
    columns: Vec<Column>,
    mask: Vec<Vec<bool>>,
}

impl Dataset {
    /// Builds a dataset, writing sentinels into masked cells and checking
    /// observed cells against the schema.
    pub fn new(schema: Arc<Schema>, mut columns: Vec<Column>, mask: Vec<Vec<bool>>) -> Result<Self> {
        if columns.len() != schema.len() || mask.len() != schema.len() {
            return Err(Error::Dataset(format!(
                "schema has {} variables but {} columns and {} mask columns were given",
                schema.len(),
                columns.len(),
                mask.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        for (j, (var, (column, mask_col))) in schema.variables.iter().zip(columns.iter_mut().zip(&mask)).enumerate() {
            if column.len() != n_rows || mask_col.len() != n_rows {
                return Err(Error::Dataset(format!("column {j} ({:?}) has inconsistent length", var.name)));
            }
            match (var.kind, &*column) {
                (VariableKind::Continuous, Column::Continuous(values)) => {
                    if let Some(i) = (0..n_rows).find(|&i| mask_col[i] && !values[i].is_finite()) {
                        return Err(Error::Dataset(format!("non-finite observed value in {:?}, row {i}", var.name)));
                    }
                }
                (VariableKind::Binary | VariableKind::Categorical, Column::Discrete(values)) => {
                    let k = var.n_levels() as u32;
                    if let Some(i) = (0..n_rows).find(|&i| mask_col[i] && values[i] >= k) {
                        return Err(Error::Dataset(format!(
                            "level index {} out of range for {:?}, row {i}",
                            values[i], var.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Dataset(format!("column type does not match kind of {:?}", var.name)));
                }
            }
            for (i, &observed) in mask_col.iter().enumerate() {
                if !observed {
                    column.clear(i);
                }
            }
        }
        Ok(Dataset {
            schema,
            n_rows,
            columns,
            mask,
        })
    }

    /// Fully observed dataset.
    pub fn complete(schema: Arc<Schema>, columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mask = vec![vec![true; n_rows]; columns.len()];
        Self::new(schema, columns, mask)
    }

    pub fn empty(schema: Arc<Schema>) -> Self {
        let columns = schema
            .variables
            .iter()
            .map(|v| match v.kind {
                VariableKind::Continuous => Column::Continuous(Vec::new()),
                _ => Column::Discrete(Vec::new()),
            })
            .collect();
        let mask = vec![Vec::new(); schema.len()];
        Dataset {
            schema,
            n_rows: 0,
            columns,
            mask,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    pub fn mask_column(&self, j: usize) -> &[bool] {
        &self.mask[j]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[col][row]
    }

    pub fn value(&self, row: usize, col: usize) -> Option<Value> {
        self.mask[col][row].then(|| self.columns[col].value(row))
    }

    pub fn n_missing_in(&self, col: usize) -> usize {
        self.mask[col].iter().filter(|&&m| !m).count()
    }

    pub fn n_missing(&self) -> usize {
        (0..self.n_cols()).map(|j| self.n_missing_in(j)).sum()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|col| col.iter().all(|&m| m))
    }

    /// Rows where `col` is observed.
    pub fn observed_rows(&self, col: usize) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| self.mask[col][i]).collect()
    }

    pub fn missing_rows(&self, col: usize) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| !self.mask[col][i]).collect()
    }

    /// Copy with `keep` AND-ed into the mask; newly masked cells get sentinels.
    pub fn with_mask(&self, keep: &[Vec<bool>]) -> Result<Self> {
        if keep.len() != self.n_cols() || keep.iter().any(|c| c.len() != self.n_rows) {
            return Err(Error::Dataset("mask shape does not match dataset".into()));
        }
        let mask: Vec<Vec<bool>> = self
            .mask
            .iter()
            .zip(keep)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x && y).collect())
            .collect();
        let mut columns = self.columns.clone();
        for (column, mask_col) in columns.iter_mut().zip(&mask) {
            for (i, &observed) in mask_col.iter().enumerate() {
                if !observed {
                    column.clear(i);
                }
            }
        }
        Ok(Dataset {
            schema: Arc::clone(&self.schema),
            n_rows: self.n_rows,
            columns,
            mask,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Dataset {
            schema: Arc::clone(&self.schema),
            n_rows: rows.len(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            mask: self.mask.iter().map(|m| rows.iter().map(|&r| m[r]).collect()).collect(),
        }
    }

    /// Whether `completed` is fully observed and bit-identical to `self` on
    /// every cell `self` observes.
    pub fn is_completed_by(&self, completed: &Dataset) -> bool {
        completed.schema == self.schema
            && completed.n_rows == self.n_rows
            && completed.is_fully_observed()
            && (0..self.n_cols()).all(|j| {
                (0..self.n_rows).all(|i| !self.mask[j][i] || self.columns[j].bit_eq(&completed.columns[j], i))
            })
    }
}

/// Equality on schema, mask, and observed cells (bitwise for reals).
impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.n_rows == other.n_rows
            && self.mask == other.mask
            && (0..self.n_cols()).all(|j| {
                (0..self.n_rows).all(|i| !self.mask[j][i] || self.columns[j].bit_eq(&other.columns[j], i))
            })
    }
}
