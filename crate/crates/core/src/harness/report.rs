//! Long-form metric rows and the quantile tables built from them.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{quantile_summary, SUMMARY_PROBS};

/// One metric value for one estimand under one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub method: String,
    pub estimand: String,
    pub class: String,
    pub population_value: f64,
    pub metric: String,
    pub value: f64,
}

/// Metrics tabulated by [`report_tables`], with the scale applied to each.
pub const TABLE_METRICS: [(&str, &str, f64); 3] = [("asb", "asb_x100", 100.0), ("rel_mse", "rel_mse", 1.0), ("coverage", "coverage", 1.0)];

pub fn write_long_csv(rows: &[LongRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(())
}

pub fn read_long_csv<R: Read>(reader: R) -> Result<Vec<LongRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn statistic_labels() -> Vec<String> {
    SUMMARY_PROBS.iter().map(|p| format!("q{:02}", (p * 100.0).round() as u32)).collect()
}

/// Builds one table per metric: a row per (estimand class, statistic) and a
/// column per method, methods in order of first appearance. Returns
/// `(file name, CSV text)` pairs.
pub fn report_tables(rows: &[LongRow]) -> Result<Vec<(String, String)>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("long-form metric rows"));
    }
    let mut methods: Vec<&str> = Vec::new();
    let mut classes: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !classes.contains(&r.class.as_str()) {
            classes.push(&r.class);
        }
    }
    let mut groups: BTreeMap<(&str, &str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.metric, &r.class, &r.method)).or_default().push(r.value);
    }
    let stats = statistic_labels();
    let mut tables = Vec::new();
    for (metric, table_name, scale) in TABLE_METRICS {
        if !groups.keys().any(|k| k.0 == metric) {
            continue;
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["class".to_string(), "statistic".to_string()];
        header.extend(methods.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for class in &classes {
            if !methods.iter().any(|m| groups.contains_key(&(metric, class, m))) {
                continue;
            }
            let summaries = methods
                .iter()
                .map(|m| match groups.get(&(metric, *class, *m)) {
                    Some(values) => {
                        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
                        Ok(Some((values.len(), quantile_summary(&scaled, &SUMMARY_PROBS)?)))
                    }
                    None => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut count = vec![class.to_string(), "count".to_string()];
            count.extend(summaries.iter().map(|s| s.as_ref().map_or(String::new(), |s| s.0.to_string())));
            w.write_record(&count)?;
            for (k, stat) in stats.iter().enumerate() {
                let mut record = vec![class.to_string(), stat.clone()];
                record.extend(summaries.iter().map(|s| s.as_ref().map_or(String::new(), |s| s.1[k].to_string())));
                w.write_record(&record)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Dataset(e.to_string()))?;
        tables.push((format!("{table_name}.csv"), String::from_utf8(bytes).expect("csv output is UTF-8")));
    }
    Ok(tables)
}

/// Reads `long_csv` and writes its tables into `dir`.
pub fn write_report_tables(long_csv: impl AsRef<Path>, dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = long_csv.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_long_csv(file)?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for (name, text) in report_tables(&rows)? {
        let p = dir.join(&name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        names.push(name);
    }
    Ok(names)
}
