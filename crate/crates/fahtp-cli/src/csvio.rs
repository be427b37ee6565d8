use std::path::Path;

use fahtp::nalgebra::{DMatrix, DVector};

use crate::errors::{CliError, Result};

/// 17 significant digits: enough for exact f64 round-trips, so reruns can be
/// compared byte for byte.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_cell(cell: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        CliError::data(format!(
            "{}: row {}, column {}: cannot parse {cell:?} as a number",
            path.display(),
            row + 1,
            col + 1
        ))
    })
}

/// Numeric CSV as a dense matrix; all rows must have the same width.
pub fn read_matrix(path: &Path, header: bool) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            row.push(parse_cell(cell, path, i, j)?);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::data(format!(
                    "{}: row {} has {} columns, expected {}",
                    path.display(),
                    i + 1,
                    row.len(),
                    w
                )));
            }
            _ => {}
        }
        rows.push(row);
    }
    let width = width.unwrap_or(0);
    if rows.is_empty() || width == 0 {
        return Err(CliError::data(format!("{}: no numeric data", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// Single-column CSV as a vector.
pub fn read_vector(path: &Path, header: bool) -> Result<DVector<f64>> {
    let m = read_matrix(path, header)?;
    if m.ncols() != 1 {
        return Err(CliError::data(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).into_owned())
}
