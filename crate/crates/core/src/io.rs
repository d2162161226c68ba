//! CSV input and output.
//!
//! Points files hold one point per row. A header row is optional and is
//! recognized by any non-numeric field; a header column named `label` holds
//! ground-truth cluster ids. Without a header, the last column is taken as
//! labels only when the caller asks for it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::binarize::Partition;
use crate::error::{Error, Result};
use crate::graph::{DataSet, SimilarityMatrix};
use crate::spectra::EigenSystem;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(file))
}

type Row = Vec<String>;

/// The header row, if the first row is one, and the remaining rows.
fn records(path: &Path) -> Result<(Option<Row>, Vec<Row>)> {
    let mut rows: Vec<Row> = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    let header = match rows.first() {
        Some(first) if first.iter().any(|f| f.parse::<f64>().is_err()) => Some(rows.remove(0)),
        _ => None,
    };
    Ok((header, rows))
}

fn parse_f64(s: &str, row: usize, col: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("row {row}, column {col}: {s:?} is not a number")))
}

fn parse_label(s: &str, row: usize) -> Result<usize> {
    s.parse().map_err(|_| {
        Error::InvalidInput(format!(
            "row {row}: label {s:?} is not a non-negative integer"
        ))
    })
}

/// Reads a points file. `last_is_label` marks the final column of a
/// header-less file as labels.
pub fn read_points(path: &Path, last_is_label: bool) -> Result<DataSet> {
    let (header, rows) = records(path)?;
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let width = rows[0].len();
    let label_col = match &header {
        Some(h) => h.iter().position(|c| c.eq_ignore_ascii_case("label")),
        None if last_is_label => Some(width - 1),
        None => None,
    };
    let mut coords = Vec::with_capacity(rows.len());
    let mut labels = label_col.map(|_| Vec::with_capacity(rows.len()));
    for (i, r) in rows.iter().enumerate() {
        let mut point = Vec::with_capacity(width);
        for (j, f) in r.iter().enumerate() {
            if Some(j) == label_col {
                labels
                    .as_mut()
                    .expect("label column")
                    .push(parse_label(f, i)?);
            } else {
                point.push(parse_f64(f, i, j)?);
            }
        }
        coords.push(point);
    }
    DataSet::from_rows(&coords, labels)
}

/// Writes points with header `x0,x1,...[,label]`.
pub fn write_points(path: &Path, data: &DataSet) -> Result<()> {
    write_points_to(writer(path)?, data, path)
}

/// As [`write_points`]; `path` only labels errors.
pub fn write_points_to(mut w: impl Write, data: &DataSet, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut head: Vec<String> = (0..data.d()).map(|j| format!("x{j}")).collect();
    if data.labels().is_some() {
        head.push("label".into());
    }
    writeln!(w, "{}", head.join(",")).map_err(io)?;
    for i in 0..data.n() {
        let mut fields: Vec<String> = (0..data.d())
            .map(|j| data.points()[(i, j)].to_string())
            .collect();
        if let Some(l) = data.labels() {
            fields.push(l[i].to_string());
        }
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a square similarity matrix without header.
pub fn read_similarity(path: &Path) -> Result<SimilarityMatrix> {
    let (header, rows) = records(path)?;
    if header.is_some() {
        return Err(Error::InvalidInput(
            "similarity file must be purely numeric".into(),
        ));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if rows[0].len() != n {
        return Err(Error::InvalidInput(format!(
            "similarity matrix has {n} rows but {} columns",
            rows[0].len()
        )));
    }
    let mut s = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        for (j, f) in r.iter().enumerate() {
            s[(i, j)] = parse_f64(f, i, j)?;
        }
    }
    SimilarityMatrix::new(s)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    let io = |e| Error::io(path, e);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Eigenvalues on the first line, then one row per point.
pub fn write_eigensystem(path: &Path, eigs: &EigenSystem) -> Result<()> {
    write_eigensystem_to(writer(path)?, eigs, path)
}

pub fn write_eigensystem_to(mut w: impl Write, eigs: &EigenSystem, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let head: Vec<String> = (0..eigs.k()).map(|j| format!("e{j}")).collect();
    writeln!(w, "{}", head.join(",")).map_err(io)?;
    let vals: Vec<String> = eigs.values().iter().map(f64::to_string).collect();
    writeln!(w, "{}", vals.join(",")).map_err(io)?;
    for i in 0..eigs.n() {
        let row: Vec<String> = (0..eigs.k())
            .map(|j| eigs.vectors()[(i, j)].to_string())
            .collect();
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads cluster labels from a result JSON (`assignment` field), a points
/// file with a `label` column, or a single-column CSV.
pub fn read_labels(path: &Path) -> Result<Partition> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let a = v
            .get("assignment")
            .or_else(|| v.pointer("/output/assignment"))
            .ok_or_else(|| Error::InvalidInput("JSON has no assignment field".into()))?;
        let labels: Vec<usize> = serde_json::from_value(a.clone())?;
        return Ok(Partition::from_labels(&labels));
    }
    let (header, rows) = records(path)?;
    let col = match &header {
        Some(h) => h
            .iter()
            .position(|c| c.eq_ignore_ascii_case("label"))
            .ok_or_else(|| Error::InvalidInput("header has no label column".into()))?,
        None if rows.first().is_some_and(|r| r.len() == 1) => 0,
        None => {
            return Err(Error::InvalidInput(
                "label file needs a single column or a label header".into(),
            ))
        }
    };
    let labels = rows
        .iter()
        .enumerate()
        .map(|(i, r)| parse_label(&r[col], i))
        .collect::<Result<Vec<_>>>()?;
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(Partition::from_labels(&labels))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn headerless_points() {
        let f = tmp("0,1\n2,0\n4,1\n");
        let ds = read_points(f.path(), false).unwrap();
        assert_eq!((ds.n(), ds.d()), (3, 2));
        assert!(ds.labels().is_none());
        let ds = read_points(f.path(), true).unwrap();
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.labels().unwrap(), &[1, 0, 1]);
    }

    #[test]
    fn header_label_column() {
        let f = tmp("x,y,label\n0,1,0\n2,3,1\n");
        let ds = read_points(f.path(), false).unwrap();
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn points_round_trip() {
        let ds =
            DataSet::from_rows(&[vec![0.5, -1.25], vec![3.0, 1e-9]], Some(vec![0, 1])).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_points(f.path(), &ds).unwrap();
        assert_eq!(read_points(f.path(), false).unwrap(), ds);
    }

    #[test]
    fn similarity_file() {
        let f = tmp("0,1,0\n1,0,2\n0,2,0\n");
        let s = read_similarity(f.path()).unwrap();
        assert_eq!(s.degrees().as_slice(), &[1.0, 3.0, 2.0]);
        let bad = tmp("0,1\n2,0\n");
        assert!(read_similarity(bad.path()).is_err());
        let ragged = tmp("0,1,0\n1,0,2\n");
        assert!(read_similarity(ragged.path()).is_err());
    }

    #[test]
    fn labels_from_json_and_csv() {
        let j = tmp(r#"{"method":"ltm","assignment":[0,0,1]}"#);
        assert_eq!(read_labels(j.path()).unwrap().assignment(), &[0, 0, 1]);
        let c = tmp("2\n2\n5\n");
        assert_eq!(read_labels(c.path()).unwrap().assignment(), &[0, 0, 1]);
        let p = tmp("x,label\n0.1,3\n0.2,1\n");
        assert_eq!(read_labels(p.path()).unwrap().assignment(), &[0, 1]);
    }

    #[test]
    fn bad_number_reports_position() {
        let f = tmp("0,1\n2,zz\n");
        let err = read_points(f.path(), false).unwrap_err().to_string();
        assert!(err.contains("zz"), "{err}");
    }
}
