//! CSV attribute tables: `id,<var1>,<var2>,...` with one row per site.
//! Rows may come in any order; the table is aligned to the canonical
//! lattice site order. Values must parse as finite reals in decimal or
//! scientific notation (locale-dependent separators are rejected by
//! construction).

use std::path::Path;

use spassoc_core::lattice::{AttributeTable, Lattice};

use crate::error::{CliError, Result};

pub fn read_attributes(path: &Path, lattice: &Lattice) -> Result<AttributeTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_attributes(file, lattice).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse { path: path.to_path_buf(), message },
        other => other,
    })
}

pub fn parse_attributes(reader: impl std::io::Read, lattice: &Lattice) -> Result<AttributeTable> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| parse_err(format!("cannot read header: {e}")))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("id") {
        return Err(parse_err("header must be 'id,<var1>,...'"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (row_index, record) in csv_reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(format!("row {}: {e}", row_index + 1)))?;
        if record.len() != headers.len() {
            return Err(parse_err(format!(
                "row {} has {} fields, expected {}",
                row_index + 1,
                record.len(),
                headers.len()
            )));
        }
        let id = record.get(0).unwrap_or_default().to_string();
        let mut values = Vec::with_capacity(names.len());
        for (col, field) in record.iter().skip(1).enumerate() {
            let parsed: Option<f64> = field.trim().parse().ok().filter(|v: &f64| v.is_finite());
            match parsed {
                Some(v) => values.push(v),
                None => {
                    return Err(CliError::NonNumericValue {
                        row: row_index + 1,
                        column: names[col].clone(),
                        value: field.to_string(),
                    })
                }
            }
        }
        rows.push((id, values));
    }
    Ok(AttributeTable::from_rows(lattice, names, rows)?)
}

fn parse_err(message: impl Into<String>) -> CliError {
    CliError::Parse { path: std::path::PathBuf::from("<input>"), message: message.into() }
}

/// Writes `id,<var...>` rows in canonical site order.
pub fn write_attributes(
    path: &Path,
    lattice: &Lattice,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    let mut out = String::from("id");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, id) in lattice.ids().iter().enumerate() {
        out.push_str(id.as_str());
        for (_, values) in columns {
            out.push(',');
            out.push_str(&values[i].to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}
