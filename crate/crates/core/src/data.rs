//! Numeric CSV tables.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub column_names: Vec<String>,
    pub values: Matrix,
    /// Present when the first column is named `id`.
    pub row_ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(column_names: Vec<String>, values: Matrix) -> Result<Self> {
        if column_names.len() != values.cols() {
            return Err(Error::dims(
                format!("{} column names", values.cols()),
                column_names.len(),
            ));
        }
        Ok(Self {
            column_names,
            values,
            row_ids: None,
        })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn p(&self) -> usize {
        self.values.cols()
    }

    /// Label for row `i`: its id when present, else the 0-based index.
    pub fn row_label(&self, i: usize) -> String {
        match &self.row_ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = Vec::new();
        if self.row_ids.is_some() {
            header.push("id");
        }
        header.extend(self.column_names.iter().map(String::as_str));
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = Vec::with_capacity(self.p() + 1);
            if let Some(ids) = &self.row_ids {
                rec.push(ids[i].clone());
            }
            rec.extend(self.values.row(i).iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    // reject the textual specials Rust's parser accepts
    if t.is_empty() || t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a numeric CSV with a header row. A first column named `id` is kept
/// as row labels rather than data.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let has_id = header[0].trim().eq_ignore_ascii_case("id");
    let skip = usize::from(has_id);
    let column_names: Vec<String> = header.iter().skip(skip).map(|h| h.trim().to_string()).collect();
    if column_names.is_empty() {
        return Err(parse_err(1, "no data columns".into()));
    }
    let width = header.len();
    let mut data = Vec::new();
    let mut ids = Vec::new();
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        if rec.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        if has_id {
            ids.push(rec[0].trim().to_string());
        }
        for (j, cell) in rec.iter().enumerate().skip(skip) {
            let v = parse_cell(cell).ok_or_else(|| {
                parse_err(
                    line,
                    format!("column '{}' has non-numeric value '{cell}'", header[j].trim()),
                )
            })?;
            data.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(2, "no data rows".into()));
    }
    let values = Matrix::new(n, column_names.len(), data)?;
    Ok(Dataset {
        column_names,
        values,
        row_ids: has_id.then_some(ids),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_small_table() {
        let f = write_tmp("a,b\n1,2\n3.5,-4e-1\n5,6\n");
        let d = load_csv(f.path()).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.values.row(1), &[3.5, -0.4]);
        assert!(d.row_ids.is_none());
    }

    #[test]
    fn id_column_becomes_labels() {
        let f = write_tmp("id,x\nr1,1\nr2,2\n");
        let d = load_csv(f.path()).unwrap();
        assert_eq!(d.row_ids, Some(vec!["r1".to_string(), "r2".to_string()]));
        assert_eq!(d.column_names, vec!["x"]);
        assert_eq!(d.row_label(1), "r2");
    }

    #[test]
    fn ragged_row_names_line() {
        let f = write_tmp("a,b\n1,2\n3\n");
        match load_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_cells_rejected() {
        for bad in ["x", "nan", "inf", "", "1.0.0"] {
            let f = write_tmp(&format!("a,b\n1,2\n{bad},3\n"));
            match load_csv(f.path()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 3, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(matches!(load_csv("/nonexistent/file.csv"), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(-1e12f64..1e12, 3), 1..20)) {
            let values = Matrix::from_rows(&rows).unwrap();
            let d = Dataset::new(vec!["a".into(), "b".into(), "c".into()], values).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            d.save(f.path()).unwrap();
            let back = load_csv(f.path()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
