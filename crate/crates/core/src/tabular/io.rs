//! CSV ingestion and export.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::dataset::{Column, Dataset};
use super::schema::{Schema, VariableKind};
use crate::error::{Error, Result};

pub const DEFAULT_NA_TOKEN: &str = "NA";

/// Reads a CSV whose header row names the schema's variables in order.
/// Cells equal to `na_token` become missing. Row numbers in errors are
/// 0-based data rows (the header is not counted).
pub fn load_csv(path: impl AsRef<Path>, schema: Arc<Schema>, na_token: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, na_token)
}

pub fn read_csv<R: Read>(reader: R, schema: Arc<Schema>, na_token: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected = schema.names();
    if header != expected {
        return Err(Error::HeaderMismatch { expected, found: header });
    }

    let mut columns: Vec<Column> = schema
        .variables
        .iter()
        .map(|v| match v.kind {
            VariableKind::Continuous => Column::Continuous(Vec::new()),
            _ => Column::Discrete(Vec::new()),
        })
        .collect();
    let mut mask = vec![Vec::new(); schema.len()];

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (j, var) in schema.variables.iter().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            let observed = cell != na_token;
            mask[j].push(observed);
            match &mut columns[j] {
                Column::Continuous(values) => {
                    let value = if observed {
                        match cell.parse::<f64>() {
                            Ok(x) if x.is_finite() => x,
                            _ => {
                                return Err(Error::Parse {
                                    row,
                                    column: var.name.clone(),
                                    value: cell.to_string(),
                                    expected: "a finite real number",
                                })
                            }
                        }
                    } else {
                        f64::NAN
                    };
                    values.push(value);
                }
                Column::Discrete(values) => {
                    let value = if observed {
                        var.level_index(cell).ok_or_else(|| Error::UnknownLevel {
                            row,
                            column: var.name.clone(),
                            label: cell.to_string(),
                        })?
                    } else {
                        super::MISSING_LEVEL
                    };
                    values.push(value);
                }
            }
        }
    }
    Dataset::new(schema, columns, mask)
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>, na_token: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, file, na_token)
}

/// Writes labels for discrete cells and the shortest round-trip decimal for
/// reals, so reading the file back reproduces the dataset exactly.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W, na_token: &str) -> Result<()> {
    let schema = dataset.schema();
    let mut writer = csv::Writer::from_writer(writer);
    writer.write_record(schema.variables.iter().map(|v| v.name.as_str()))?;
    let mut record: Vec<String> = Vec::with_capacity(schema.len());
    for i in 0..dataset.n_rows() {
        record.clear();
        for (j, var) in schema.variables.iter().enumerate() {
            if !dataset.is_observed(i, j) {
                record.push(na_token.to_string());
                continue;
            }
            record.push(match dataset.column(j) {
                Column::Continuous(v) => format!("{}", v[i]),
                Column::Discrete(v) => var.levels[v[i] as usize].clone(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
