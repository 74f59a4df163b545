//! System matrices for user-defined models.
//!
//! A JSON object with keys `Z`, `T` and `R`. Each matrix is an array of
//! rows. `Z` may instead be an array of matrices, one per period; slices
//! beyond the sample length are kept as the future design used by forecasts
//! and simulation.
//!
//! ```json
//! {"Z": [[1, 0]], "T": [[1, 1], [0, 1]], "R": [[1, 0], [0, 1]]}
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use ssm_core::{DesignMatrix, ObservationSeries, StateSpaceModel};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignJson {
    Constant(Vec<Vec<f64>>),
    TimeVarying(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatricesFile {
    #[serde(rename = "Z")]
    pub z: DesignJson,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

pub fn nested_to_matrix(rows: &[Vec<f64>], what: &str) -> std::result::Result<DMatrix<f64>, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(format!("{what} is empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format!(
            "{what} row {i} has {} entries, expected {ncols}",
            rows[i].len()
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl MatricesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_model(model: &StateSpaceModel) -> Self {
        let z = match model.design() {
            DesignMatrix::Constant(z) => DesignJson::Constant(matrix_to_nested(z)),
            DesignMatrix::TimeVarying(zs) => DesignJson::TimeVarying(
                zs.iter()
                    .chain(model.future_design())
                    .map(matrix_to_nested)
                    .collect(),
            ),
        };
        Self {
            z,
            t: matrix_to_nested(model.transition()),
            r: matrix_to_nested(model.selection()),
        }
    }

    /// Builds the model for `y`. `path` is only used in error messages.
    pub fn build(&self, y: ObservationSeries, path: &Path) -> Result<StateSpaceModel> {
        let bad = |message: String| Error::Matrices {
            path: path.to_path_buf(),
            message,
        };
        let t = nested_to_matrix(&self.t, "T").map_err(bad)?;
        let r = nested_to_matrix(&self.r, "R").map_err(bad)?;
        let n = y.n();
        match &self.z {
            DesignJson::Constant(z) => {
                let z = nested_to_matrix(z, "Z").map_err(bad)?;
                Ok(StateSpaceModel::new(y, DesignMatrix::Constant(z), t, r)?)
            }
            DesignJson::TimeVarying(zs) => {
                let mut all = zs
                    .iter()
                    .enumerate()
                    .map(|(i, z)| nested_to_matrix(z, &format!("Z[{i}]")))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(bad)?;
                if all.len() < n {
                    return Err(Error::Model(ssm_core::Error::DesignLength {
                        found: all.len(),
                        expected: n,
                    }));
                }
                let future = all.split_off(n);
                let model = StateSpaceModel::new(y, DesignMatrix::TimeVarying(all), t, r)?;
                Ok(model.with_future_design(future)?)
            }
        }
    }
}
