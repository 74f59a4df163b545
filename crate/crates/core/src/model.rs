//! Model representation: observations, system matrices and noise covariances.
//!
//! The observation equation is `y_t = Z_t α_t + ε_t, ε_t ~ N(0, H)` and the
//! state equation is `α_{t+1} = T α_t + R η_t, η_t ~ N(0, Q)`. Only `Z` may vary
//! over time.
//!
//! Missing values are NaN. Rows may be fully observed, fully missing, or
//! partially missing; partially missing rows are handled downstream by
//! dropping the missing rows of `y_t`, `Z_t` and `H` for that period. That
//! last case goes beyond the fully-missing periods of the classic treatment.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// An `n × p` panel of observations, rows are time periods.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    values: DMatrix<f64>,
    observed: Vec<Vec<usize>>,
}

impl ObservationSeries {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, p) = values.shape();
        if p == 0 {
            return Err(Error::NoVariables);
        }
        if n < 2 {
            return Err(Error::TooFewPeriods { n });
        }
        Self::from_values_unchecked(values)
    }

    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values))
    }

    /// Builds the series without the `n ≥ 2` check. Used for forecast
    /// extensions, which append all-missing periods.
    pub(crate) fn from_values_unchecked(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::NonFinite {
                what: "observations",
            });
        }
        let observed = (0..values.nrows())
            .map(|t| {
                (0..values.ncols())
                    .filter(|&j| !values[(t, j)].is_nan())
                    .collect()
            })
            .collect();
        Ok(Self { values, observed })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, t: usize) -> DVector<f64> {
        self.values.row(t).transpose()
    }

    /// Indices of the observed variables at period `t`.
    pub fn observed(&self, t: usize) -> &[usize] {
        &self.observed[t]
    }

    pub fn is_missing(&self, t: usize, j: usize) -> bool {
        self.values[(t, j)].is_nan()
    }

    pub fn fully_missing(&self, t: usize) -> bool {
        self.observed[t].is_empty()
    }

    pub fn fully_observed(&self, t: usize) -> bool {
        self.observed[t].len() == self.p()
    }

    /// Number of observed scalar values over all periods.
    pub fn observed_count(&self) -> usize {
        self.observed.iter().map(Vec::len).sum()
    }

    /// Appends `extra` all-missing periods.
    pub(crate) fn extended(&self, extra: usize) -> Result<Self> {
        let (n, p) = self.values.shape();
        let mut values = DMatrix::from_element(n + extra, p, f64::NAN);
        values.view_mut((0, 0), (n, p)).copy_from(&self.values);
        Self::from_values_unchecked(values)
    }
}

/// The observation matrix `Z`, either constant or one matrix per period.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignMatrix {
    Constant(DMatrix<f64>),
    TimeVarying(Vec<DMatrix<f64>>),
}

impl DesignMatrix {
    pub fn is_time_varying(&self) -> bool {
        matches!(self, DesignMatrix::TimeVarying(_))
    }

    fn shape(&self) -> Option<(usize, usize)> {
        match self {
            DesignMatrix::Constant(z) => Some(z.shape()),
            DesignMatrix::TimeVarying(zs) => zs.first().map(DMatrix::shape),
        }
    }
}

/// Which builder produced a model. Determines the component layout of the
/// state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LocalLevel,
    LinearTrend,
    /// Basic structural model with seasonal period `s` and `k` exogenous
    /// regressors per variable.
    Structural { s: usize, k: usize },
    UserDefined,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::LocalLevel => "local_level",
            ModelKind::LinearTrend => "linear_trend",
            ModelKind::Structural { .. } => "structural",
            ModelKind::UserDefined => "user_defined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Time periods.
    pub n: usize,
    /// Observed variables.
    pub p: usize,
    /// State dimension.
    pub m: usize,
    /// State noise dimension.
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    y: ObservationSeries,
    z: DesignMatrix,
    z_future: Vec<DMatrix<f64>>,
    t: DMatrix<f64>,
    r: DMatrix<f64>,
    kind: ModelKind,
    dims: Dims,
}

fn shape_str(s: (usize, usize)) -> alloc::string::String {
    format!("{}\u{00d7}{}", s.0, s.1)
}

impl StateSpaceModel {
    /// Validates and assembles a user-defined model.
    pub fn new(
        y: ObservationSeries,
        z: DesignMatrix,
        t: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        Self::with_kind(y, z, t, r, ModelKind::UserDefined)
    }

    pub(crate) fn with_kind(
        y: ObservationSeries,
        z: DesignMatrix,
        t: DMatrix<f64>,
        r: DMatrix<f64>,
        kind: ModelKind,
    ) -> Result<Self> {
        let (n, p) = (y.n(), y.p());
        if n < 2 {
            return Err(Error::TooFewPeriods { n });
        }
        if let DesignMatrix::TimeVarying(zs) = &z {
            if zs.len() != n {
                return Err(Error::DesignLength {
                    found: zs.len(),
                    expected: n,
                });
            }
        }
        let (zr, m) = z.shape().ok_or(Error::DesignLength {
            found: 0,
            expected: n,
        })?;
        if zr != p {
            return Err(Error::DimensionMismatch {
                left: "y",
                right: "Z",
                detail: format!("y has {p} variables but Z is {}", shape_str((zr, m))),
            });
        }
        if let DesignMatrix::TimeVarying(zs) = &z {
            if let Some((i, zi)) = zs.iter().enumerate().find(|(_, zi)| zi.shape() != (p, m)) {
                return Err(Error::DimensionMismatch {
                    left: "Z",
                    right: "Z",
                    detail: format!(
                        "Z at period {i} is {} but period 0 is {}",
                        shape_str(zi.shape()),
                        shape_str((p, m))
                    ),
                });
            }
        }
        if t.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                left: "Z",
                right: "T",
                detail: format!(
                    "Z has {m} state columns but T is {}",
                    shape_str(t.shape())
                ),
            });
        }
        if r.nrows() != m || r.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                left: "T",
                right: "R",
                detail: format!("T is {m}\u{00d7}{m} but R is {}", shape_str(r.shape())),
            });
        }
        let finite = |mat: &DMatrix<f64>| mat.iter().all(|v| v.is_finite());
        let z_finite = match &z {
            DesignMatrix::Constant(zc) => finite(zc),
            DesignMatrix::TimeVarying(zs) => zs.iter().all(finite),
        };
        if !z_finite {
            return Err(Error::NonFinite { what: "Z" });
        }
        if !finite(&t) {
            return Err(Error::NonFinite { what: "T" });
        }
        if !finite(&r) {
            return Err(Error::NonFinite { what: "R" });
        }
        let dims = Dims {
            n,
            p,
            m,
            r: r.ncols(),
        };
        Ok(Self {
            y,
            z,
            z_future: Vec::new(),
            t,
            r,
            kind,
            dims,
        })
    }

    /// Attaches design matrices for periods after the sample, needed to
    /// forecast or simulate a model whose `Z` varies in time.
    pub fn with_future_design(mut self, future: Vec<DMatrix<f64>>) -> Result<Self> {
        let (p, m) = (self.dims.p, self.dims.m);
        if let Some((i, zi)) = future.iter().enumerate().find(|(_, zi)| zi.shape() != (p, m)) {
            return Err(Error::DimensionMismatch {
                left: "Z",
                right: "future Z",
                detail: format!(
                    "future Z at offset {i} is {} but Z is {}",
                    shape_str(zi.shape()),
                    shape_str((p, m))
                ),
            });
        }
        if future.iter().any(|zi| zi.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { what: "future Z" });
        }
        self.z_future = future;
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn observations(&self) -> &ObservationSeries {
        &self.y
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.z
    }

    pub fn future_design(&self) -> &[DMatrix<f64>] {
        &self.z_future
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn selection(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `Z` for period `t` (0-based), `t < n`.
    pub fn z_at(&self, t: usize) -> Result<&DMatrix<f64>> {
        if t >= self.dims.n {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.dims.n,
            });
        }
        Ok(self.z_unchecked(t))
    }

    pub(crate) fn z_unchecked(&self, t: usize) -> &DMatrix<f64> {
        match &self.z {
            DesignMatrix::Constant(z) => z,
            DesignMatrix::TimeVarying(zs) => &zs[t],
        }
    }

    /// Number of out-of-sample periods for which `Z` is known.
    /// Unbounded (`None`) when `Z` is constant.
    pub fn future_periods(&self) -> Option<usize> {
        match self.z {
            DesignMatrix::Constant(_) => None,
            DesignMatrix::TimeVarying(_) => Some(self.z_future.len()),
        }
    }

    /// `Z` for an out-of-sample period `n + h` (`h` 0-based).
    pub fn future_z(&self, h: usize) -> Result<&DMatrix<f64>> {
        match &self.z {
            DesignMatrix::Constant(z) => Ok(z),
            DesignMatrix::TimeVarying(_) => {
                self.z_future
                    .get(h)
                    .ok_or(Error::InsufficientFutureRows {
                        required: h + 1,
                        available: self.z_future.len(),
                    })
            }
        }
    }

    /// The same model with `horizon` all-missing periods appended.
    pub fn extended(&self, horizon: usize) -> Result<Self> {
        let z = match &self.z {
            DesignMatrix::Constant(z) => DesignMatrix::Constant(z.clone()),
            DesignMatrix::TimeVarying(zs) => {
                if self.z_future.len() < horizon {
                    return Err(Error::InsufficientFutureRows {
                        required: horizon,
                        available: self.z_future.len(),
                    });
                }
                let mut all = zs.clone();
                all.extend(self.z_future[..horizon].iter().cloned());
                DesignMatrix::TimeVarying(all)
            }
        };
        let y = self.y.extended(horizon)?;
        let mut dims = self.dims;
        dims.n += horizon;
        Ok(Self {
            y,
            z,
            z_future: self.z_future[horizon.min(self.z_future.len())..].to_vec(),
            t: self.t.clone(),
            r: self.r.clone(),
            kind: self.kind,
            dims,
        })
    }
}

/// Observation noise covariance `H` (p×p) and state noise covariance `Q` (r×r).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariances {
    h: DMatrix<f64>,
    q: DMatrix<f64>,
}

const SYMMETRY_RTOL: f64 = 1e-12;
const PSD_ATOL: f64 = 1e-10;

fn check_covariance(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            left: what,
            right: what,
            detail: format!("{what} must be square, got {}", shape_str(m.shape())),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what });
    }
    let scale = linalg::max_abs(m);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(Error::NotSymmetric { what });
            }
        }
    }
    let min_eig = linalg::min_eigenvalue(m);
    if min_eig < -PSD_ATOL {
        return Err(Error::NotPositiveSemidefinite {
            what,
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

impl NoiseCovariances {
    pub fn new(h: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        check_covariance(&h, "H")?;
        check_covariance(&q, "Q")?;
        Ok(Self { h, q })
    }

    /// Skips the PSD check; callers guarantee `h = L Lᵀ`, `q = M Mᵀ`.
    pub(crate) fn from_factors_unchecked(h: DMatrix<f64>, q: DMatrix<f64>) -> Self {
        Self { h, q }
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub(crate) fn check_dims(&self, dims: Dims) -> Result<()> {
        if self.h.nrows() != dims.p {
            return Err(Error::DimensionMismatch {
                left: "H",
                right: "y",
                detail: format!("H is {} but p = {}", shape_str(self.h.shape()), dims.p),
            });
        }
        if self.q.nrows() != dims.r {
            return Err(Error::DimensionMismatch {
                left: "Q",
                right: "R",
                detail: format!("Q is {} but R has {} columns", shape_str(self.q.shape()), dims.r),
            });
        }
        Ok(())
    }
}
