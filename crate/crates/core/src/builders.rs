//! Predefined models: local level, linear trend and the basic structural
//! model with optional exogenous regressors.
//!
//! Every builder extends to `p > 1` variables by repeating its univariate
//! state block once per variable (block-diagonal `T` and `R`, no cross
//! loadings). Cross-correlation between variables is carried by full `H` and
//! `Q` matrices.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::kron_identity;
use crate::model::{DesignMatrix, ModelKind, ObservationSeries, StateSpaceModel};

/// Random-walk level plus noise: `Z = T = R = I_p`.
pub fn local_level(y: ObservationSeries) -> Result<StateSpaceModel> {
    let p = y.p();
    let eye = DMatrix::identity(p, p);
    StateSpaceModel::with_kind(
        y,
        DesignMatrix::Constant(eye.clone()),
        eye.clone(),
        eye,
        ModelKind::LocalLevel,
    )
}

/// Level with a stochastic slope. State per variable is `(μ, ν)`.
pub fn linear_trend(y: ObservationSeries) -> Result<StateSpaceModel> {
    let p = y.p();
    let z = kron_identity(p, &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    let t = kron_identity(p, &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
    let r = DMatrix::identity(2 * p, 2 * p);
    StateSpaceModel::with_kind(y, DesignMatrix::Constant(z), t, r, ModelKind::LinearTrend)
}

/// Parameters of the basic structural model.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSpec {
    /// Seasonal period, at least 2.
    pub s: usize,
    /// Exogenous regressors, one column per regressor. May carry more rows
    /// than the sample; the extra rows are used for forecasting.
    pub exogenous: Option<DMatrix<f64>>,
}

impl StructuralSpec {
    pub fn new(s: usize) -> Self {
        Self { s, exogenous: None }
    }

    pub fn with_exogenous(s: usize, x: DMatrix<f64>) -> Self {
        Self {
            s,
            exogenous: Some(x),
        }
    }
}

/// Offsets of the components inside one variable's state block of a
/// structural model with `k` regressors: `(θ_1..θ_k, μ, ν, γ_t, …, γ_{t−s+2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralLayout {
    pub s: usize,
    pub k: usize,
}

impl StructuralLayout {
    pub fn block_len(&self) -> usize {
        self.k + self.s + 1
    }
    pub fn level(&self) -> usize {
        self.k
    }
    pub fn slope(&self) -> usize {
        self.k + 1
    }
    pub fn seasonal(&self) -> usize {
        self.k + 2
    }
}

/// Trend, slope and dummy seasonal with zero-sum seasonal dynamics
/// `γ_{t+1} = −Σ_{j=1}^{s−1} γ_{t+1−j} + ω_t`, plus `θᵀX_t` when regressors
/// are given. The coefficients `θ` are static states with no process noise.
pub fn structural(y: ObservationSeries, spec: &StructuralSpec) -> Result<StateSpaceModel> {
    let s = spec.s;
    if s < 2 {
        return Err(Error::InvalidSeasonality { s });
    }
    let (n, p) = (y.n(), y.p());
    let k = spec.exogenous.as_ref().map_or(0, DMatrix::ncols);
    if let Some(x) = &spec.exogenous {
        if x.nrows() < n {
            return Err(Error::ExogenousRows {
                found: x.nrows(),
                required: n,
            });
        }
        for i in 0..x.nrows() {
            for j in 0..k {
                if !x[(i, j)].is_finite() {
                    return Err(Error::NonFiniteExogenous { row: i, col: j });
                }
            }
        }
    }
    let layout = StructuralLayout { s, k };
    let b = layout.block_len();

    let mut t_block = DMatrix::zeros(b, b);
    for i in 0..k {
        t_block[(i, i)] = 1.0;
    }
    let (lv, sl, sn) = (layout.level(), layout.slope(), layout.seasonal());
    t_block[(lv, lv)] = 1.0;
    t_block[(lv, sl)] = 1.0;
    t_block[(sl, sl)] = 1.0;
    for j in 0..(s - 1) {
        t_block[(sn, sn + j)] = -1.0;
    }
    for j in 1..(s - 1) {
        t_block[(sn + j, sn + j - 1)] = 1.0;
    }

    let mut r_block = DMatrix::zeros(b, 3);
    r_block[(lv, 0)] = 1.0;
    r_block[(sl, 1)] = 1.0;
    r_block[(sn, 2)] = 1.0;

    let t = kron_identity(p, &t_block);
    let r = kron_identity(p, &r_block);

    let design_row = |xrow: Option<&[f64]>| {
        let mut z = DMatrix::zeros(p, p * b);
        for v in 0..p {
            let off = v * b;
            if let Some(xr) = xrow {
                for (j, xv) in xr.iter().enumerate() {
                    z[(v, off + j)] = *xv;
                }
            }
            z[(v, off + lv)] = 1.0;
            z[(v, off + sn)] = 1.0;
        }
        z
    };

    let kind = ModelKind::Structural { s, k };
    match &spec.exogenous {
        None => StateSpaceModel::with_kind(
            y,
            DesignMatrix::Constant(design_row(None)),
            t,
            r,
            kind,
        ),
        Some(x) => {
            let rows: Vec<DMatrix<f64>> = (0..x.nrows())
                .map(|i| {
                    let xr: Vec<f64> = x.row(i).iter().copied().collect();
                    design_row(Some(&xr))
                })
                .collect();
            let (sample, future) = rows.split_at(n);
            StateSpaceModel::with_kind(
                y,
                DesignMatrix::TimeVarying(sample.to_vec()),
                t,
                r,
                kind,
            )?
            .with_future_design(future.to_vec())
        }
    }
}
