//! The versioned model artifact written by `fit`.
//!
//! A single JSON document holding the data, the model specification, the
//! estimated covariances, the per-seed optimizer trace and an echo of the
//! run configuration. Matrices are stored row-major with explicit dimensions;
//! missing observations are `null`. Wall-clock times are left out so that
//! repeated runs produce identical files.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use ssm_core::{
    linear_trend, local_level, structural, FilterConfig, FilterVariant, FittedStateSpace,
    ModelKind, NoiseCovariances, ObservationSeries, SeedRecord, StateSpaceModel, StructuralSpec,
};

use crate::error::{Error, Result};
use crate::matrices::MatricesFile;

pub const FORMAT: &str = "ssm-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Option<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = m
            .row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
            .map(|v| v.is_finite().then_some(v))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// `null` entries become NaN.
    pub fn to_matrix(&self) -> std::result::Result<DMatrix<f64>, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix has {} entries, expected {}×{}",
                self.data.len(),
                self.rows,
                self.cols
            ));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.data[i * self.cols + j].unwrap_or(f64::NAN)
        }))
    }
}

/// How to rebuild the state-space model from the stored data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LocalLevel,
    LinearTrend,
    Structural {
        s: usize,
        exogenous: Option<MatrixJson>,
    },
    UserDefined {
        matrices: MatricesFile,
    },
}

impl ModelSpec {
    pub fn build(&self, y: ObservationSeries, path: &Path) -> Result<StateSpaceModel> {
        let bad = |message: String| Error::Matrices {
            path: path.to_path_buf(),
            message,
        };
        Ok(match self {
            ModelSpec::LocalLevel => local_level(y)?,
            ModelSpec::LinearTrend => linear_trend(y)?,
            ModelSpec::Structural { s, exogenous: None } => structural(y, &StructuralSpec::new(*s))?,
            ModelSpec::Structural {
                s,
                exogenous: Some(x),
            } => structural(y, &StructuralSpec::with_exogenous(*s, x.to_matrix().map_err(bad)?))?,
            ModelSpec::UserDefined { matrices } => return matrices.build(y, path),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    pub variables: Vec<String>,
    pub label_name: Option<String>,
    pub labels: Option<Vec<String>>,
    pub y: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seed: usize,
    pub initial_loglik: Option<f64>,
    pub loglik: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub psi: Vec<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&SeedRecord> for TraceEntry {
    fn from(r: &SeedRecord) -> Self {
        Self {
            seed: r.seed,
            initial_loglik: finite(r.initial_loglik),
            loglik: finite(r.loglik),
            iterations: r.iterations,
            converged: r.converged,
            psi: r.psi.clone(),
        }
    }
}

impl TraceEntry {
    fn record(&self) -> SeedRecord {
        SeedRecord {
            seed: self.seed,
            initial_loglik: self.initial_loglik.unwrap_or(f64::NEG_INFINITY),
            loglik: self.loglik.unwrap_or(f64::NEG_INFINITY),
            psi: self.psi.clone(),
            iterations: self.iterations,
            converged: self.converged,
            elapsed_secs: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSection {
    pub filter_type: String,
    pub diffuse_scale: f64,
    pub steady_state_tolerance: f64,
}

/// Settings of the run that produced the artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub exog: Option<String>,
    pub matrices: Option<String>,
    pub model: String,
    pub s: Option<usize>,
    pub log: bool,
    pub filter: String,
    pub seeds: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub format: String,
    pub version: u32,
    pub data: DataSection,
    pub model: ModelSpec,
    pub h: MatrixJson,
    pub q: MatrixJson,
    pub loglik: f64,
    pub filter: FilterSection,
    pub optimization_method: String,
    pub trace: Vec<TraceEntry>,
    pub config: ConfigEcho,
}

/// Series names and period labels that travel with a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMeta {
    pub variables: Vec<String>,
    pub label_name: Option<String>,
    pub labels: Option<Vec<String>>,
}

impl SeriesMeta {
    pub fn label_header(&self) -> String {
        self.label_name.clone().unwrap_or_else(|| "t".to_string())
    }

    /// Stored labels, or 1-based period numbers.
    pub fn period_labels(&self, n: usize) -> Vec<String> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (1..=n).map(|t| t.to_string()).collect(),
        }
    }
}

impl Artifact {
    pub fn new(fitted: &FittedStateSpace, spec: ModelSpec, meta: &SeriesMeta, config: ConfigEcho) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            data: DataSection {
                variables: meta.variables.clone(),
                label_name: meta.label_name.clone(),
                labels: meta.labels.clone(),
                y: MatrixJson::from_matrix(fitted.model.observations().values()),
            },
            model: spec,
            h: MatrixJson::from_matrix(fitted.covariances.h()),
            q: MatrixJson::from_matrix(fitted.covariances.q()),
            loglik: fitted.loglik,
            filter: FilterSection {
                filter_type: fitted.filter_type.clone(),
                diffuse_scale: fitted.filter_config.diffuse_scale,
                steady_state_tolerance: fitted.filter_config.steady_state_tolerance,
            },
            optimization_method: fitted.optimization_method.clone(),
            trace: fitted.trace.iter().map(TraceEntry::from).collect(),
            config,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("");
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if format != FORMAT || version != VERSION {
            return Err(Error::ArtifactVersion {
                path: path.to_path_buf(),
                format: format.to_string(),
                version,
                expected_format: FORMAT,
                expected_version: VERSION,
            });
        }
        serde_json::from_value(value).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn meta(&self) -> SeriesMeta {
        SeriesMeta {
            variables: self.data.variables.clone(),
            label_name: self.data.label_name.clone(),
            labels: self.data.labels.clone(),
        }
    }

    /// Rebuilds the model and reruns filter and smoother at the stored
    /// covariances. `path` is only used in error messages.
    pub fn fitted(&self, path: &Path) -> Result<FittedStateSpace> {
        let bad = |message: String| Error::Matrices {
            path: path.to_path_buf(),
            message,
        };
        let y = ObservationSeries::new(self.data.y.to_matrix().map_err(bad)?)?;
        let model = self.model.build(y, path)?;
        let cov = NoiseCovariances::new(
            self.h.to_matrix().map_err(bad)?,
            self.q.to_matrix().map_err(bad)?,
        )?;
        let variant = FilterVariant::from_name(&self.filter.filter_type).ok_or_else(|| {
            bad(format!("unknown filter type '{}'", self.filter.filter_type))
        })?;
        let config = FilterConfig {
            diffuse_scale: self.filter.diffuse_scale,
            steady_state_tolerance: self.filter.steady_state_tolerance,
            ..FilterConfig::with_variant(variant)
        };
        let mut fitted = FittedStateSpace::from_covariances(model, cov, config)?;
        fitted.optimization_method = self.optimization_method.clone();
        fitted.trace = self.trace.iter().map(TraceEntry::record).collect();
        Ok(fitted)
    }
}

/// The spec that rebuilds `model`.
pub fn spec_for(model: &StateSpaceModel, exogenous: Option<&DMatrix<f64>>) -> ModelSpec {
    match model.kind() {
        ModelKind::LocalLevel => ModelSpec::LocalLevel,
        ModelKind::LinearTrend => ModelSpec::LinearTrend,
        ModelKind::Structural { s, .. } => ModelSpec::Structural {
            s,
            exogenous: exogenous.map(MatrixJson::from_matrix),
        },
        ModelKind::UserDefined => ModelSpec::UserDefined {
            matrices: MatricesFile::from_model(model),
        },
    }
}
