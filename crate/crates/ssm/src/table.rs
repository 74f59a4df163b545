//! CSV input and output.
//!
//! Input files have a header row naming the variables and one row per
//! period. Empty cells and the tokens `NaN`/`NA` are missing values. A first
//! column named `date` or `t` holds period labels rather than data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use ssm_core::ObservationSeries;

use crate::error::{Error, Result};

/// A parsed data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub label_name: Option<String>,
    pub labels: Option<Vec<String>>,
    pub names: Vec<String>,
    /// `rows × names.len()`, NaN for missing.
    pub values: DMatrix<f64>,
}

impl Table {
    pub fn series(&self) -> Result<ObservationSeries> {
        Ok(ObservationSeries::new(self.values.clone())?)
    }
}

fn is_missing_token(cell: &str) -> bool {
    matches!(cell, "" | "NaN" | "nan" | "NA")
}

pub fn load_csv(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, path)
}

pub fn parse_csv<R: std::io::Read>(reader: R, path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let has_label = headers
        .first()
        .is_some_and(|h| h.eq_ignore_ascii_case("date") || h.eq_ignore_ascii_case("t"));
    let first_data = usize::from(has_label);
    if headers.len() <= first_data {
        return Err(Error::NoDataColumns {
            path: path.to_path_buf(),
        });
    }
    let names = headers[first_data..].to_vec();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // Header is line 1.
        let row = i + 2;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        if has_label {
            labels.push(record[0].to_string());
        }
        for (j, cell) in record.iter().enumerate().skip(first_data) {
            let v = if is_missing_token(cell) {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::BadNumber {
                    path: path.to_path_buf(),
                    row,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?
            };
            data.push(v);
        }
    }
    let rows = data.len() / names.len();
    Ok(Table {
        label_name: has_label.then(|| headers[0].clone()),
        labels: has_label.then_some(labels),
        names,
        values: DMatrix::from_row_slice(rows, headers.len() - first_data, &data),
    })
}

/// 17 significant digits: every `f64` survives a text round trip.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Column-oriented CSV writer.
pub struct CsvOut {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[String]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut this = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        this.line(header)?;
        Ok(this)
    }

    fn line(&mut self, cells: &[String]) -> Result<()> {
        let joined = cells.join(",");
        writeln!(self.out, "{joined}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn row(&mut self, label: &str, values: &[f64]) -> Result<()> {
        let mut cells = Vec::with_capacity(values.len() + 1);
        cells.push(label.to_string());
        cells.extend(values.iter().map(|v| format_number(*v)));
        self.line(&cells)
    }

    /// A row of already formatted cells.
    pub fn text_row(&mut self, label: &str, cells: &[String]) -> Result<()> {
        let mut all = Vec::with_capacity(cells.len() + 1);
        all.push(label.to_string());
        all.extend_from_slice(cells);
        self.line(&all)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes a labelled numeric table.
pub fn write_table(path: &Path, header: &[String], labels: &[String], rows: &DMatrix<f64>) -> Result<()> {
    let mut out = CsvOut::create(path, header)?;
    for (i, label) in labels.iter().enumerate() {
        let vals: Vec<f64> = rows.row(i).iter().copied().collect();
        out.row(label, &vals)?;
    }
    out.finish()
}
