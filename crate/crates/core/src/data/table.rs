use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// On-disk layouts accepted by [`load_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSchema {
    /// Comma-separated with header `y,x1,...,xp` (an optional trailing
    /// `is_outlier` column is read back as the outlier mask).
    CsvHeader,
    /// Whitespace-separated numbers, no header, last column is the response
    /// (the UCI Airfoil Self-Noise layout).
    WhitespaceLastColResponse,
}

/// Load a numeric table. Rows and columns in error messages are 1-based.
pub fn load_table(path: impl AsRef<Path>, schema: TableSchema) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    match schema {
        TableSchema::CsvHeader => load_csv(path),
        TableSchema::WhitespaceLastColResponse => load_whitespace(path),
    }
}

fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: format!("non-numeric cell {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message: format!("non-finite cell {cell:?}"),
        });
    }
    Ok(v)
}

fn assemble(path: &Path, rows: Vec<Vec<f64>>, response_col: usize, mask: Option<Vec<bool>>) -> Result<Dataset<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyTable(path.to_path_buf()));
    }
    let width = rows[0].len();
    let p = width - 1;
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        let mut j = 0;
        for (c, v) in row.into_iter().enumerate() {
            if c == response_col {
                y[i] = v;
            } else {
                x[[i, j]] = v;
                j += 1;
            }
        }
    }
    let ds = Dataset::new(x, y)?;
    match mask {
        Some(m) => ds.with_outlier_mask(m),
        None => Ok(ds),
    }
}

fn load_whitespace(path: &Path) -> Result<Dataset<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row_no = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .enumerate()
            .map(|(c, cell)| parse_cell(path, row_no, c + 1, cell))
            .collect::<Result<Vec<_>>>()?;
        let w = *width.get_or_insert(row.len());
        if row.len() != w || w < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: row_no,
                column: row.len().min(w) + 1,
                message: format!("expected {} columns, found {}", w.max(2), row.len()),
            });
        }
        rows.push(row);
    }
    let response = width.unwrap_or(1) - 1;
    assemble(path, rows, response, None)
}

fn load_csv(path: &Path) -> Result<Dataset<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyTable(path.to_path_buf()));
    }
    let names: Vec<&str> = headers.iter().collect();
    let has_mask = names.last() == Some(&"is_outlier");
    let n_features = names.len() - 1 - usize::from(has_mask);
    let header_error = |column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row: 1,
        column,
        message,
    };
    if names[0] != "y" {
        return Err(header_error(1, format!("expected header \"y\", found {:?}", names[0])));
    }
    if n_features == 0 {
        return Err(header_error(2, "no feature columns".into()));
    }
    for (j, name) in names[1..=n_features].iter().enumerate() {
        let expected = format!("x{}", j + 1);
        if *name != expected {
            return Err(header_error(j + 2, format!("expected header {expected:?}, found {name:?}")));
        }
    }

    let width = names.len();
    let mut rows = Vec::new();
    let mut mask = has_mask.then(Vec::new);
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 2;
        if record.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: row_no,
                column: record.len().min(width) + 1,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(n_features + 1);
        for (c, cell) in record.iter().take(n_features + 1).enumerate() {
            row.push(parse_cell(path, row_no, c + 1, cell)?);
        }
        if let Some(m) = mask.as_mut() {
            let flag = match record.get(width - 1).unwrap_or("") {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: row_no,
                        column: width,
                        message: format!("is_outlier must be 0 or 1, found {other:?}"),
                    })
                }
            };
            m.push(flag);
        }
        rows.push(row);
    }
    assemble(path, rows, 0, mask)
}

/// Write `y,x1,...,xp[,is_outlier]`. Values use Rust's shortest round-trip
/// formatting, so reading the file back reproduces the data exactly.
pub fn write_csv(ds: &Dataset<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = String::from("y");
    for j in 1..=ds.p() {
        header.push_str(&format!(",x{j}"));
    }
    if ds.outlier_mask().is_some() {
        header.push_str(",is_outlier");
    }
    writeln!(w, "{header}").map_err(io)?;
    for i in 0..ds.n() {
        let mut line = format!("{}", ds.y()[i]);
        for v in ds.row(i) {
            line.push_str(&format!(",{v}"));
        }
        if let Some(m) = ds.outlier_mask() {
            line.push_str(if m[i] { ",1" } else { ",0" });
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_csv() {
        let f = write_tmp("y,x1\n1,2\n3,4\n");
        let ds = load_table(f.path(), TableSchema::CsvHeader).unwrap();
        assert_eq!(ds.x(), &array![[2.0], [4.0]]);
        assert_eq!(ds.y(), &array![1.0, 3.0]);
        assert!(ds.outlier_mask().is_none());
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let f = write_tmp("y,x1,x2\n1,2,3\n4,abc,6\n");
        match load_table(f.path(), TableSchema::CsvHeader).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            e => panic!("unexpected {e}"),
        }
        let f = write_tmp("1 2 3\n4 5 abc\n");
        match load_table(f.path(), TableSchema::WhitespaceLastColResponse).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (2, 3)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ragged_and_empty() {
        let f = write_tmp("1 2 3\n4 5\n");
        assert!(matches!(
            load_table(f.path(), TableSchema::WhitespaceLastColResponse),
            Err(Error::Parse { row: 2, .. })
        ));
        let f = write_tmp("y,x1\n1,2\n3\n");
        assert!(matches!(load_table(f.path(), TableSchema::CsvHeader), Err(Error::Parse { row: 3, .. })));
        let f = write_tmp("");
        assert!(matches!(
            load_table(f.path(), TableSchema::WhitespaceLastColResponse),
            Err(Error::EmptyTable(_))
        ));
        let f = write_tmp("y,x1\n");
        assert!(matches!(load_table(f.path(), TableSchema::CsvHeader), Err(Error::EmptyTable(_))));
    }

    #[test]
    fn bad_header() {
        let f = write_tmp("z,x1\n1,2\n");
        assert!(matches!(load_table(f.path(), TableSchema::CsvHeader), Err(Error::Parse { row: 1, column: 1, .. })));
    }

    #[test]
    fn whitespace_last_column_is_response() {
        let f = write_tmp("800\t0\t0.3048\t71.3\t0.00266337\t126.201\n1000 0 0.3048 71.3 0.00266337 125.201\n");
        let ds = load_table(f.path(), TableSchema::WhitespaceLastColResponse).unwrap();
        assert_eq!((ds.n(), ds.p()), (2, 5));
        assert_eq!(ds.y()[1], 125.201);
        assert_eq!(ds.x()[[0, 0]], 800.0);
    }

    #[test]
    fn csv_round_trip_with_mask() {
        let ds = Dataset::new(array![[0.1, -2.5e-7], [3.0, 1.0 / 3.0]], array![1.5, -0.2])
            .unwrap()
            .with_outlier_mask(vec![true, false])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("y,x1,x2,is_outlier\n"));
        assert_eq!(load_table(&path, TableSchema::CsvHeader).unwrap(), ds);
    }
}
