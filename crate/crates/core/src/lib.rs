//! Linear Gaussian state-space models.
//!
//! ```text
//! y_t     = Z_t α_t + ε_t,   ε_t ~ N(0, H)
//! α_{t+1} = T α_t + R η_t,   η_t ~ N(0, Q)
//! ```
//!
//! The crate covers model specification (predefined and user-defined),
//! standard and square-root Kalman filtering with missing observations,
//! fixed-interval smoothing, maximum-likelihood estimation of `H` and `Q`,
//! forecasting and Monte Carlo simulation. It is `no_std` and only needs
//! `alloc`; file formats, the command line and progress output live in the
//! `ssm` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod builders;
pub mod error;
pub mod estimation;
pub mod filter;
pub mod fitted;
pub mod lbfgs;
pub mod linalg;
pub mod model;
pub mod prediction;
pub mod smoother;

pub use builders::{linear_trend, local_level, structural, StructuralSpec};
pub use error::{Error, Result};
pub use estimation::{
    estimate, estimate_with, log_likelihood, Estimate, EstimationMonitor, OptimizerConfig,
    Optimizer, ParameterLayout, RandomSeedsLbfgs, SeedRecord, Silent,
};
pub use filter::{
    detect_steady_state, filter, run_filter, run_sqrt_filter, FilterConfig, FilterOutput,
    FilterVariant, Initialization, StateFilter,
};
pub use fitted::{fit, fit_with, smoothed_components, Component, ComponentSeries, FittedStateSpace};
pub use model::{DesignMatrix, Dims, ModelKind, NoiseCovariances, ObservationSeries, StateSpaceModel};
pub use prediction::{forecast, scenario_quantiles, simulate, ForecastOutput, QuantileTable, ScenarioSet};
pub use smoother::{run_smoother, SmootherOutput};

pub use nalgebra;
