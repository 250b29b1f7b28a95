//! Measure files (JSON) and data files (CSV).
//!
//! A measure file looks like
//!
//! ```json
//! {
//!   "weights": [0.5, 0.5],
//!   "means": [[0.0, 0.0], [0.2, 0.2]],
//!   "covariances": [[[0.01, 0.0], [0.0, 0.01]], [[0.01, 0.0], [0.0, 0.01]]]
//! }
//! ```
//!
//! `covariances` is optional. A single known covariance shared by every
//! component can be given as `shared_covariance` instead.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Atom, MixingMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariances: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_covariance: Option<Vec<Vec<f64>>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be {d} x {d}"
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl MeasureFile {
    pub fn from_measure(g: &MixingMeasure) -> Self {
        let covariances = g.has_atom_covariances().then(|| {
            g.atoms()
                .iter()
                .map(|a| matrix_rows(a.covariance().expect("atom covariance")))
                .collect()
        });
        Self {
            weights: g.weights().to_vec(),
            means: g
                .atoms()
                .iter()
                .map(|a| a.mean().iter().copied().collect())
                .collect(),
            covariances,
            shared_covariance: g.shared_covariance().map(matrix_rows),
        }
    }

    pub fn to_measure(&self) -> Result<MixingMeasure> {
        if self.means.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights but {} means",
                self.weights.len(),
                self.means.len()
            )));
        }
        let d = self.means.first().map_or(0, Vec::len);
        let atoms = match &self.covariances {
            None => self
                .means
                .iter()
                .map(|m| Atom::location(m.clone()))
                .collect(),
            Some(covs) => {
                if covs.len() != self.means.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} covariances but {} means",
                        covs.len(),
                        self.means.len()
                    )));
                }
                self.means
                    .iter()
                    .zip(covs)
                    .map(|(m, c)| {
                        if m.len() != d {
                            return Err(Error::DimensionMismatch(
                                "means have different lengths".into(),
                            ));
                        }
                        Atom::with_covariance(
                            DVector::from_vec(m.clone()),
                            matrix_from_rows(c, d, "covariance")?,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let g = MixingMeasure::new(atoms, self.weights.clone())?;
        match &self.shared_covariance {
            Some(rows) => g.with_shared_covariance(matrix_from_rows(rows, d, "shared_covariance")?),
            None => Ok(g),
        }
    }
}

pub fn measure_to_json(g: &MixingMeasure) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeasureFile::from_measure(g))?)
}

pub fn measure_from_json(text: &str) -> Result<MixingMeasure> {
    serde_json::from_str::<MeasureFile>(text)?.to_measure()
}

pub fn read_measure(path: &Path) -> Result<MixingMeasure> {
    measure_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_measure(path: &Path, g: &MixingMeasure) -> Result<()> {
    let mut text = measure_to_json(g)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads an `n × d` numeric CSV. The first row is taken as a header when any
/// of its fields is not a number.
pub fn read_data_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", line + 1))),
        };
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "line {}: non-finite value {bad}",
                line + 1
            )));
        }
        match d {
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {d} fields, found {}",
                    line + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    let d = d.ok_or_else(|| Error::Parse("no data rows".into()))?;
    Ok(DMatrix::from_row_slice(n, d, &values))
}

pub fn read_data_file(path: &Path) -> Result<DMatrix<f64>> {
    read_data_csv(std::fs::File::open(path)?)
}

/// Writes data with a `x1,…,xd` header, full-precision values, LF endings.
pub fn write_data_csv<W: Write>(writer: W, data: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record((1..=data.ncols()).map(|j| format!("x{j}")))?;
    for row in data.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
