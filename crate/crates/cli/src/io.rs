//! CSV ingestion and artifact writing. Point files are one row per point;
//! a non-numeric first row is treated as a header. All writes go through a
//! temp-file-then-rename so readers never observe partial files.

use std::path::Path;

use manifold_core::{DataMatrix, Embedding};
use nalgebra::DMatrix;

use crate::error::{AppError, Result};

fn parse_cell(cell: &str, line: u64) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| AppError::Parse {
        line,
        message: format!("cannot parse {cell:?} as a number"),
    })
}

fn csv_error(e: csv::Error) -> AppError {
    let line = e.position().map_or(0, |p| p.line());
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::Io(io),
        _ => AppError::Parse { line, message },
    }
}

fn read_rows(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cells: Vec<String> = record.iter().map(|c| c.to_string()).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue; // blank line
        }
        rows.push((line, cells));
    }
    Ok(rows)
}

/// Loads a points CSV into a `d x n` matrix (file rows become columns).
pub fn load_points(path: &Path) -> Result<DataMatrix> {
    let (matrix, _) = load_points_impl(path, None)?;
    Ok(matrix)
}

/// Loads a points CSV, splitting out one column as class labels.
pub fn load_points_with_labels(path: &Path, label_column: usize) -> Result<(DataMatrix, Vec<String>)> {
    let (matrix, labels) = load_points_impl(path, Some(label_column))?;
    Ok((matrix, labels.expect("labels requested")))
}

fn load_points_impl(
    path: &Path,
    label_column: Option<usize>,
) -> Result<(DataMatrix, Option<Vec<String>>)> {
    let mut rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(AppError::EmptyInput);
    }

    // header auto-detection: a first row with any non-numeric data cell
    let is_header = {
        let (_, cells) = &rows[0];
        cells
            .iter()
            .enumerate()
            .filter(|(i, _)| label_column != Some(*i))
            .any(|(_, c)| c.trim().parse::<f64>().is_err())
    };
    if is_header {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(AppError::EmptyInput);
    }

    let width = rows[0].1.len();
    if let Some(col) = label_column {
        if col >= width {
            return Err(AppError::Usage(format!(
                "label column {col} out of range for {width}-column file"
            )));
        }
    }
    let d = width - usize::from(label_column.is_some());
    if d == 0 {
        return Err(AppError::Usage(
            "no numeric columns left after removing the label column".into(),
        ));
    }

    let n = rows.len();
    let mut values = DMatrix::zeros(d, n);
    let mut labels = label_column.map(|_| Vec::with_capacity(n));
    for (j, (line, cells)) in rows.iter().enumerate() {
        if cells.len() != width {
            return Err(AppError::Parse {
                line: *line,
                message: format!("row has {} columns, expected {width}", cells.len()),
            });
        }
        let mut r = 0usize;
        for (i, cell) in cells.iter().enumerate() {
            if label_column == Some(i) {
                labels.as_mut().expect("label mode").push(cell.clone());
            } else {
                values[(r, j)] = parse_cell(cell, *line)?;
                r += 1;
            }
        }
    }
    Ok((DataMatrix::new(values)?, labels))
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| AppError::Io(e.error))?;
    Ok(())
}

/// Embedding CSV: header `dim_0,...,dim_{p-1}`, one row per point in input
/// order, shortest round-trip-safe decimal rendering.
pub fn embedding_to_csv(emb: &Embedding) -> String {
    let p = emb.dim();
    let header: Vec<String> = (0..p).map(|k| format!("dim_{k}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for j in 0..emb.len() {
        let row: Vec<String> = (0..p)
            .map(|k| format!("{}", emb.coordinates()[(k, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Points CSV (one row per point) for synthesized datasets.
pub fn points_to_csv(x: &DataMatrix, header: &[&str]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for j in 0..x.len() {
        let row: Vec<String> = (0..x.dim())
            .map(|r| format!("{}", x.values()[(r, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
