//! Plain numeric CSV input with an optional header row.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rspim::model::Dataset;

use crate::failure::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    /// Row-major values.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A first row with any non-numeric cell is taken as the header.
pub fn parse_table(text: &str, source: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = rec.iter().map(parse_cell).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (j, v) in parsed.into_iter().enumerate() {
            row.push(v.ok_or_else(|| {
                CliError::Config(format!(
                    "{source}: non-numeric cell '{}' at line {}, column {}",
                    &rec[j],
                    i + 1,
                    j + 1
                ))
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{source}: no numeric rows")));
    }
    let width = rows[0].len();
    if let Some(h) = &header {
        if h.len() != width {
            return Err(CliError::Config(format!("{source}: header has {} fields but rows have {width}", h.len())));
        }
    }
    Ok(Table { header, rows })
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text, &path.display().to_string())
}

/// Loads `x` and `y`, centering every column and the response.
pub fn load_dataset(x_path: &Path, y_path: &Path) -> Result<Dataset, CliError> {
    let xt = read_table(x_path)?;
    let yt = read_table(y_path)?;
    if yt.ncols() != 1 {
        return Err(CliError::Config(format!("{}: expected one column, found {}", y_path.display(), yt.ncols())));
    }
    if xt.rows.len() != yt.rows.len() {
        return Err(CliError::Config(format!(
            "dimension mismatch: x has {} rows but y has {}",
            xt.rows.len(),
            yt.rows.len()
        )));
    }
    let (n, p) = (xt.rows.len(), xt.ncols());
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in xt.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let mut y = DVector::from_iterator(n, yt.rows.iter().map(|r| r[0]));
    let my = y.mean();
    y.add_scalar_mut(-my);
    Ok(Dataset::with_names(x, y, xt.header)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected_from_first_row() {
        let t = parse_table("a,b\n1,2\n3,4\n", "t").unwrap();
        assert_eq!(t.header, Some(vec!["a".into(), "b".into()]));
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let t = parse_table("1, 2\n3,4e-1\n", "t").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows[1], vec![3.0, 0.4]);
    }

    #[test]
    fn bad_cells_and_ragged_rows_are_rejected() {
        assert!(matches!(parse_table("1,2\n3,x\n", "t"), Err(CliError::Config(_))));
        assert!(parse_table("1,2\n3\n", "t").is_err());
        assert!(parse_table("a,b\n", "t").is_err());
        assert!(parse_table("a,b,c\n1,2\n", "t").is_err());
        assert!(parse_table("1,nan\n", "t").is_err());
    }
}
