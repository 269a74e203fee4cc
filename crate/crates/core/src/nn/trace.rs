use std::io::Write;
use std::path::Path;

use crate::error::{self, Result};

/// Per-step training losses, one named column per loss.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossTrace {
    pub columns: Vec<String>,
    /// `(step, values)` with one value per column.
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl LossTrace {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        LossTrace {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, step: usize, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((step, values));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of one column, in step order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (step, values) in &self.rows {
            let mut record = vec![step.to_string()];
            record.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| error::Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| error::Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
