//! Delimited-text helpers shared by the dataset, similarity and kernel
//! loaders and by the command-line front end.
//!
//! Matrices are written with the shortest decimal representation that parses
//! back to the identical `f64`, so save/load round trips are exact. All
//! writers go through [`write_atomic`]: content lands in a temporary file in
//! the target directory and is renamed into place, so a crash never leaves a
//! half-written output behind.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::FileFormat;
use crate::error::{Error, Result};

/// Writes `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| Error::io_at(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io_at(path, e))?;
    tmp.flush().map_err(|e| Error::io_at(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io_at(path, e.error))?;
    Ok(())
}

/// Writes a labelled matrix: header row `corner, col_ids...`, then one row
/// per `row_ids` entry followed by its values.
pub fn write_matrix(
    path: &Path,
    format: FileFormat,
    corner: &str,
    row_ids: &[String],
    col_ids: &[String],
    values: &Array2<f64>,
) -> Result<()> {
    let sep = format.delimiter() as char;
    let mut out = String::new();
    out.push_str(corner);
    for id in col_ids {
        out.push(sep);
        out.push_str(id);
    }
    out.push('\n');
    for (r, id) in row_ids.iter().enumerate() {
        out.push_str(id);
        for c in 0..col_ids.len() {
            out.push(sep);
            // shortest round-trip representation
            out.push_str(&format!("{}", values[(r, c)]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Splits csv errors by origin: failures of the underlying reader stay
/// [`Error::Io`] (missing file, permissions), anything about the content
/// becomes [`Error::Data`]. Both carry the path.
fn csv_at(path: &Path, e: csv::Error) -> Error {
    let msg = format!("{}: {e}", path.display());
    match e.into_kind() {
        csv::ErrorKind::Io(ioe) => Error::Io(std::io::Error::new(ioe.kind(), msg)),
        _ => Error::Data(msg),
    }
}

/// Reads a labelled matrix written by [`write_matrix`] (or any compatible
/// file). The header may or may not carry a corner cell for the id column;
/// the two layouts are distinguished by field counts. Errors carry 1-based
/// row/column locations counting the header row and the id column.
pub fn read_matrix(path: &Path, format: FileFormat) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_at(path, e))?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| csv_at(path, e))?,
        None => return Err(Error::data(format!("{}: empty file", path.display()))),
    };

    let mut row_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| csv_at(path, e))?;
        let line = i + 2; // 1-based, header is line 1
        if rec.len() < 2 {
            return Err(Error::data(format!(
                "{}: row {line}: expected an id plus at least one value, found {} field(s)",
                path.display(),
                rec.len()
            )));
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::data(format!(
                    "{}: row {line}: {} fields where earlier rows had {w}",
                    path.display(),
                    rec.len()
                )))
            }
            Some(_) => {}
        }
        row_ids.push(rec[0].to_string());
        let mut row = Vec::with_capacity(rec.len() - 1);
        for c in 1..rec.len() {
            let cell = rec[c].trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {line}, column {}: cannot parse '{cell}' as a number",
                    path.display(),
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "{}: row {line}, column {}: non-finite value '{cell}'",
                    path.display(),
                    c + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }

    let n_cols = width.ok_or_else(|| {
        Error::data(format!("{}: no data rows after the header", path.display()))
    })? - 1;
    let col_ids: Vec<String> = if header.len() == n_cols + 1 {
        header.iter().skip(1).map(String::from).collect()
    } else if header.len() == n_cols {
        header.iter().map(String::from).collect()
    } else {
        return Err(Error::data(format!(
            "{}: header has {} fields but data rows imply {} columns",
            path.display(),
            header.len(),
            n_cols
        )));
    };

    let mut values = Array2::zeros((rows.len(), n_cols));
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            values[(r, c)] = *v;
        }
    }
    Ok((row_ids, col_ids, values))
}

/// Reads a headerless two-column tab-separated file.
pub fn read_two_columns(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::data(format!(
                "{}: line {}: expected exactly two tab-separated fields",
                path.display(),
                i + 1
            )));
        };
        rows.push((a.trim().to_string(), b.trim().to_string()));
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Writes per-sample scores as `sample_id<TAB>score` lines.
pub fn write_scores(path: &Path, sample_ids: &[String], scores: &[f64]) -> Result<()> {
    let mut out = String::new();
    for (id, s) in sample_ids.iter().zip(scores) {
        out.push_str(&format!("{id}\t{s}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads scores written by [`write_scores`], aligned to `sample_ids`.
pub fn read_scores(path: &Path, sample_ids: &[String]) -> Result<Vec<f64>> {
    let rows = read_two_columns(path)?;
    let mut by_id = std::collections::HashMap::new();
    for (line, (id, value)) in rows.iter().enumerate() {
        let v: f64 = value.parse().map_err(|_| {
            Error::data(format!(
                "{}: line {}: cannot parse score '{}'",
                path.display(),
                line + 1,
                value
            ))
        })?;
        if by_id.insert(id.as_str(), v).is_some() {
            return Err(Error::data(format!(
                "{}: duplicate sample id '{id}'",
                path.display()
            )));
        }
    }
    sample_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::data(format!("{}: no score for sample '{id}'", path.display())))
        })
        .collect()
}
