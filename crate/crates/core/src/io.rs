//! Matrix files for covariance matrices and debugging dumps.
//!
//! Both formats start with one ASCII header line:
//!
//! ```text
//! # ghft-matrix rows=<r> cols=<c> format=<csv|f64le> [key=value ...]
//! ```
//!
//! * `csv`: followed by `r` lines of `c` comma-separated numbers, written in
//!   shortest round-trip form.
//! * `f64le`: followed by `r * c` IEEE-754 doubles, little endian, row major.
//!
//! Extra `key=value` pairs (no spaces) carry metadata such as a parameter hash.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

const MAGIC: &str = "# ghft-matrix";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    fn tag(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Binary => "f64le",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub format: MatrixFormat,
    pub meta: BTreeMap<String, String>,
}

impl MatrixHeader {
    fn line(&self) -> String {
        let mut s = format!("{MAGIC} rows={} cols={} format={}", self.rows, self.cols, self.format.tag());
        for (k, v) in &self.meta {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    fn parse(line: &str) -> Result<Self> {
        let rest = line
            .trim_end()
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Format(format!("missing '{MAGIC}' header")))?;
        let mut rows = None;
        let mut cols = None;
        let mut format = None;
        let mut meta = BTreeMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("header token '{tok}' is not key=value")))?;
            let num = || v.parse::<usize>().map_err(|_| Error::Format(format!("bad {k} '{v}'")));
            match k {
                "rows" => rows = Some(num()?),
                "cols" => cols = Some(num()?),
                "format" => {
                    format = Some(match v {
                        "csv" => MatrixFormat::Csv,
                        "f64le" => MatrixFormat::Binary,
                        other => return Err(Error::Format(format!("unknown format '{other}'"))),
                    })
                }
                _ => {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
        }
        Ok(MatrixHeader {
            rows: rows.ok_or_else(|| Error::Format("header lacks rows".into()))?,
            cols: cols.ok_or_else(|| Error::Format("header lacks cols".into()))?,
            format: format.ok_or_else(|| Error::Format("header lacks format".into()))?,
            meta,
        })
    }
}

pub fn write_matrix(
    path: &Path,
    a: &Array2<f64>,
    format: MatrixFormat,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    for (k, v) in meta {
        if k.contains(char::is_whitespace) || v.contains(char::is_whitespace) || k.contains('=') {
            return Err(Error::Format(format!("metadata '{k}={v}' must not contain spaces or '='")));
        }
    }
    let header = MatrixHeader { rows: a.nrows(), cols: a.ncols(), format, meta: meta.clone() };
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.line())?;
    match format {
        MatrixFormat::Csv => {
            for row in a.rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                writeln!(w, "{}", line.join(","))?;
            }
        }
        MatrixFormat::Binary => {
            for v in a.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: &Path, a: &Array2<f64>) -> Result<()> {
    write_matrix(path, a, MatrixFormat::Csv, &BTreeMap::new())
}

/// Reads either format, detected from the header.
pub fn read_matrix(path: &Path) -> Result<(MatrixHeader, Array2<f64>)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header = MatrixHeader::parse(&line)?;
    let (rows, cols) = (header.rows, header.cols);
    let mut data = Vec::with_capacity(rows * cols);
    match header.format {
        MatrixFormat::Csv => {
            for (i, l) in r.lines().enumerate() {
                let l = l?;
                if l.trim().is_empty() {
                    continue;
                }
                let before = data.len();
                for tok in l.split(',') {
                    let v: f64 = tok
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("line {}: bad number '{tok}'", i + 2)))?;
                    data.push(v);
                }
                if data.len() - before != cols {
                    return Err(Error::Format(format!(
                        "line {}: expected {cols} values, found {}",
                        i + 2,
                        data.len() - before
                    )));
                }
            }
        }
        MatrixFormat::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != rows * cols * 8 {
                return Err(Error::Format(format!(
                    "expected {} bytes of data, found {}",
                    rows * cols * 8,
                    bytes.len()
                )));
            }
            for chunk in bytes.chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
            }
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Format(format!("expected {} values, found {}", rows * cols, data.len())));
    }
    let a = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))?;
    Ok((header, a))
}

pub fn save_covariance(
    path: &Path,
    g: &CovarianceMatrix,
    format: MatrixFormat,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    write_matrix(path, g.gamma().as_array(), format, meta)
}

/// Loads a covariance matrix, rejecting non-antisymmetric content.
pub fn load_covariance(path: &Path) -> Result<(CovarianceMatrix, BTreeMap<String, String>)> {
    let (header, a) = read_matrix(path)?;
    if header.rows != header.cols {
        return Err(Error::NotSquare { rows: header.rows, cols: header.cols });
    }
    Ok((CovarianceMatrix::from_matrix(a)?, header.meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CovarianceMatrix {
        let mut g = CovarianceMatrix::from_occupations(&[true, false, true]).into_gamma();
        g.set(0, 1, 0.1 + 1e-17);
        g.set(2, 5, -1.0 / 3.0);
        CovarianceMatrix::new(g).unwrap()
    }

    #[test]
    fn roundtrip_both_formats() {
        let dir = std::env::temp_dir().join(format!("ghft-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("hash".to_string(), "abc123".to_string());
        for (fmt, name) in [(MatrixFormat::Csv, "g.csv"), (MatrixFormat::Binary, "g.bin")] {
            let p = dir.join(name);
            save_covariance(&p, &sample(), fmt, &meta).unwrap();
            let (g, m) = load_covariance(&p).unwrap();
            assert_eq!(g, sample());
            assert_eq!(m, meta);
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn header_errors() {
        assert!(MatrixHeader::parse("rows=2 cols=2").is_err());
        assert!(MatrixHeader::parse("# ghft-matrix rows=2 format=csv").is_err());
        assert!(MatrixHeader::parse("# ghft-matrix rows=2 cols=2 format=xml").is_err());
        let h = MatrixHeader::parse("# ghft-matrix rows=2 cols=3 format=f64le tag=x").unwrap();
        assert_eq!((h.rows, h.cols, h.format), (2, 3, MatrixFormat::Binary));
        assert_eq!(h.meta["tag"], "x");
    }
}
