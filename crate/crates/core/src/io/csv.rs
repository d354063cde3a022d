//! Diagnostics CSV with a fixed column order.

use std::fs;
use std::path::Path;

use super::IoError;
use crate::diagnostics::DiagnosticRecord;

/// Header line without the trailing newline.
pub fn header() -> String {
    DiagnosticRecord::COLUMNS.join(",")
}

/// Renders records as CSV text: header, one row per record, LF endings,
/// empty cells for absent values, floats in shortest round-trip form.
pub fn format_diagnostics(records: &[DiagnosticRecord]) -> Result<String, IoError> {
    if records.is_empty() {
        return Err(IoError::Format("no records to write".into()));
    }
    let mut out = header();
    out.push('\n');
    for rec in records {
        let cells: Vec<String> = rec
            .values()
            .iter()
            .map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_diagnostics(records: &[DiagnosticRecord], path: &Path) -> Result<(), IoError> {
    let text = format_diagnostics(records)?;
    fs::write(path, text).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticRecord>, IoError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header() => {}
        _ => return Err(IoError::Format("missing or unexpected header".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != DiagnosticRecord::COLUMNS.len() {
                return Err(IoError::Format(format!(
                    "row {} has {} cells, expected {}",
                    i + 1,
                    cells.len(),
                    DiagnosticRecord::COLUMNS.len()
                )));
            }
            let mut values = [None; 17];
            for (slot, cell) in values.iter_mut().zip(&cells) {
                if !cell.is_empty() {
                    *slot = Some(
                        cell.parse::<f64>()
                            .map_err(|e| IoError::Format(format!("row {}: `{cell}`: {e}", i + 1)))?,
                    );
                }
            }
            Ok(DiagnosticRecord::from_values(values))
        })
        .collect()
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticRecord>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_diagnostics(&text)
}
