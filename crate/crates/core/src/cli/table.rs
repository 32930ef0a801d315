//! Numeric CSV input: a header row, then one observation per row.

use std::path::Path;

use nalgebra::DMatrix;

use super::{usage, CliResult};

/// Column names and the `n × d` data matrix of a numeric CSV file.
pub fn read_matrix(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut reader = open(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(usage(format!("{}: empty file or missing header", path.display())));
    }
    let d = header.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if record.len() != d {
            return Err(usage(format!(
                "{}: row {} has {} fields, header has {d}",
                path.display(),
                r + 1,
                record.len()
            )));
        }
        for (c, cell) in record.iter().enumerate() {
            let v = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                usage(format!(
                    "{}: row {}, column {} ({}): '{cell}' is not a finite number",
                    path.display(),
                    r + 1,
                    c + 1,
                    header[c]
                ))
            })?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(usage(format!("{}: no data rows", path.display())));
    }
    Ok((header, DMatrix::from_row_slice(n, d, &values)))
}

/// Positive integer cluster labels from a single-column file or from the
/// `label` column of a wider one (such as `assignments.csv`).
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let mut reader = open(path)?;
    let header = reader
        .headers()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?
        .clone();
    let column = if header.len() == 1 {
        0
    } else {
        header
            .iter()
            .position(|h| h.trim() == "label")
            .ok_or_else(|| usage(format!("{}: no 'label' column", path.display())))?
    };
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let cell = record.get(column).unwrap_or("").trim();
        let label = cell.parse::<usize>().ok().filter(|&l| l >= 1).ok_or_else(|| {
            usage(format!(
                "{}: row {}, column {}: '{cell}' is not a positive integer label",
                path.display(),
                r + 1,
                column + 1
            ))
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(usage(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

fn open(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}
