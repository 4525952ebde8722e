//! Comma-separated numeric files: one observation per row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nmfeb_core::{DMatrix, DVector};

use crate::error::CliError;

/// Reads a rectangular numeric table as rows of values.
pub fn read_table(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let fail = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(format!(
                    "row {}, column {}: not a finite number: {field:?}",
                    i + 1,
                    j + 1
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail("no data rows".into()));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path, header: bool) -> Result<DMatrix<f64>, CliError> {
    let rows = read_table(path, header)?;
    let p = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

pub fn read_vector(path: &Path, header: bool) -> Result<DVector<f64>, CliError> {
    let rows = read_table(path, header)?;
    if rows[0].len() != 1 {
        return Err(CliError::Input(format!(
            "{}: expected one value per row, found {}",
            path.display(),
            rows[0].len()
        )));
    }
    Ok(DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0])))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Unwritable(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Unwritable(format!("cannot write {}: {e}", path.display())))
}

/// Writes values in shortest round-trip exponent form.
pub fn write_matrix(path: &Path, x: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e: std::io::Error| CliError::Unwritable(format!("cannot write {}: {e}", path.display()));
    for row in x.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    finish(w, path)
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), CliError> {
    let mut w = create(path)?;
    for x in v.iter() {
        writeln!(w, "{x:e}").map_err(|e| CliError::Unwritable(format!("cannot write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// Writes `atom,weight` pairs with a header row.
pub fn write_histogram(path: &Path, atoms: &[f64], weights: &[f64]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e: std::io::Error| CliError::Unwritable(format!("cannot write {}: {e}", path.display()));
    writeln!(w, "atom,weight").map_err(io)?;
    for (a, p) in atoms.iter().zip(weights) {
        writeln!(w, "{a:.16e},{p:.16e}").map_err(io)?;
    }
    finish(w, path)
}
