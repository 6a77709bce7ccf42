//! CSV input and output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Response plus design read from a CSV file.
#[derive(Debug, Clone)]
pub struct Table {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub feature_names: Vec<String>,
}

/// Read a CSV whose header names the columns, with the response in the
/// first column and one feature per remaining column.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_table(file, &path.display().to_string())
}

pub fn parse_table<R: std::io::Read>(reader: R, source: &str) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{source}: line 1: {e}")))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::input(format!(
            "{source}: line 1: need a response column and at least one feature, found {} column(s)",
            header.len()
        )));
    }
    let d = header.len() - 1;
    let mut y = Vec::new();
    let mut x = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => CliError::input(format!(
                    "{source}: line {line}: expected {expected_len} fields, found {len}"
                )),
                _ => CliError::input(format!("{source}: line {line}: {e}")),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::input(format!(
                    "{source}: line {line}, column '{}': cannot parse '{field}' as a number",
                    &header[k]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::input(format!(
                    "{source}: line {line}, column '{}': value must be finite",
                    &header[k]
                )));
            }
            if k == 0 {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(CliError::input(format!("{source}: no data rows")));
    }
    let n = y.len();
    Ok(Table {
        y: Array1::from(y),
        x: Array2::from_shape_vec((n, d), x).expect("row lengths checked by the reader"),
        feature_names: header.iter().skip(1).map(str::to_string).collect(),
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub struct CsvOut {
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(header)?;
        Ok(CsvOut { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn write_lines(path: &Path, lines: &[String]) -> CliResult<()> {
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    fs::write(path, body)?;
    Ok(())
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))
}
