//! CSV to [`RawTable`] according to a [`Schema`].

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use mcfuse_core::data::{RawColumn, RawTable};

use crate::error::{AppError, Result};
use crate::schema::{Role, Schema};

pub fn read_table(path: &Path, schema: &Schema) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    parse_table(file, schema).map_err(|e| match e {
        AppError::Data(msg) => AppError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn cell(s: &str) -> Option<&str> {
    let t = s.trim();
    (!t.is_empty()).then_some(t)
}

/// Predictor columns keep their order in the CSV header. Columns the schema
/// does not mention are ignored.
pub fn parse_table<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for name in schema.declared_columns() {
        if !header.contains(name) {
            return Err(AppError::Data(format!("column `{name}` is not in the CSV header")));
        }
    }
    for h in &header {
        if schema.role(h).is_none() {
            log::warn!("ignoring undeclared column `{h}`");
        }
    }
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;

    let position = |name: &str| header.iter().position(|h| h == name).unwrap_or_default();
    let class_col = position(&schema.class);
    let response_col = position(&schema.response);
    let mut table = RawTable { declared_classes: schema.classes.clone(), ..RawTable::default() };
    for (row, rec) in records.iter().enumerate() {
        let class = cell(&rec[class_col])
            .ok_or_else(|| AppError::Data(format!("row {}: empty class label", row + 1)))?;
        table.class.push(class.to_string());
        table.response.push(parse_number(&rec[response_col], &schema.response, row)?);
    }

    for (k, name) in header.iter().enumerate() {
        let column = match schema.role(name) {
            Some(Role::Numeric) => {
                RawColumn::Numeric(records.iter().enumerate().map(|(r, rec)| parse_number(&rec[k], name, r)).collect::<Result<_>>()?)
            }
            Some(Role::Categorical) => categorical(name, records.iter().map(|rec| cell(&rec[k])), schema)?,
            _ => continue,
        };
        table.columns.push((name.clone(), column));
    }
    Ok(table)
}

fn parse_number(s: &str, column: &str, row: usize) -> Result<Option<f64>> {
    match cell(s) {
        None => Ok(None),
        Some(t) => t
            .parse::<f64>()
            .map(Some)
            .map_err(|_| AppError::Data(format!("row {}: `{t}` in numeric column `{column}` is not a number", row + 1))),
    }
}

fn categorical<'a>(name: &str, values: impl Iterator<Item = Option<&'a str>>, schema: &Schema) -> Result<RawColumn> {
    let spec = &schema.categorical[name];
    let values: Vec<Option<&str>> = values.collect();
    let levels: Vec<String> = match &spec.levels {
        Some(l) => l.clone(),
        None => values.iter().flatten().map(|s| s.to_string()).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let reference = match &spec.reference {
        Some(r) => levels.iter().position(|l| l == r).unwrap_or_default(),
        None => (0..levels.len()).min_by_key(|&k| &levels[k]).unwrap_or_default(),
    };
    let codes = values
        .iter()
        .enumerate()
        .map(|(row, v)| match v {
            None => Ok(None),
            Some(s) => levels
                .iter()
                .position(|l| l == s)
                .map(Some)
                .ok_or_else(|| AppError::Data(format!("row {}: `{s}` is not a level of `{name}`", row + 1))),
        })
        .collect::<Result<_>>()?;
    Ok(RawColumn::Categorical { levels, reference, codes })
}
