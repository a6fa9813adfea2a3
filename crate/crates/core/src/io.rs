//! Small text-format helpers: CSV matrices and ASCII portable-graymap
//! previews of per-pixel fields.

use std::path::Path;

use crate::error::{Error, Result};

/// Serialize a dense row-major matrix as comma-separated rows.
pub fn matrix_to_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("csv line {}: bad number {f:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::Parse(format!(
                    "csv line {}: {} fields, expected {w}",
                    lineno + 1,
                    row.len()
                )));
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, matrix_to_csv(rows))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    matrix_from_csv(&std::fs::read_to_string(path)?)
}

/// ASCII portable graymap (P2) of a field on a masked grid; values are
/// rescaled to 0..=255, masked-out pixels render black.
pub fn field_to_pgm(values: &[Option<f64>], nrows: usize, ncols: usize) -> Result<String> {
    if values.len() != nrows * ncols {
        return Err(Error::dims(format!("field length {} != {nrows}x{ncols}", values.len())));
    }
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let (lo, hi) = present
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P2\n{ncols} {nrows}\n255\n");
    for r in 0..nrows {
        for c in 0..ncols {
            let px = match values[r * ncols + c] {
                Some(v) => 1 + ((v - lo) / span * 254.0).round() as u32,
                None => 0,
            };
            out.push_str(&px.to_string());
            out.push(if c + 1 == ncols { '\n' } else { ' ' });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let m = vec![vec![1.0, 2.5, -3.0], vec![0.0, 1e-8, 4.0]];
        let text = matrix_to_csv(&m);
        let back = matrix_from_csv(&text).unwrap();
        assert_eq!(m, back);
        assert!(matrix_from_csv("1,2\n3\n").is_err());
        assert!(matrix_from_csv("1,x\n").is_err());
    }

    #[test]
    fn pgm_has_header_and_range() {
        let vals = vec![Some(0.0), Some(1.0), None, Some(0.5)];
        let pgm = field_to_pgm(&vals, 2, 2).unwrap();
        assert!(pgm.starts_with("P2\n2 2\n255\n"));
        assert!(pgm.contains('0'));
        assert!(pgm.contains("255"));
    }
}
