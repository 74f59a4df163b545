//! The estimated model bundle and component extraction.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::builders::StructuralLayout;
use crate::error::{Error, Result};
use crate::estimation::{
    EstimationMonitor, OptimizerConfig, Optimizer, RandomSeedsLbfgs, SeedRecord, Silent,
};
use crate::filter::{FilterConfig, FilterOutput, StateFilter};
use crate::model::{ModelKind, NoiseCovariances, StateSpaceModel};
use crate::smoother::{run_smoother, SmootherOutput};

/// Model, filter and smoother output at the estimated covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedStateSpace {
    pub model: StateSpaceModel,
    pub filter: FilterOutput,
    pub smoother: SmootherOutput,
    pub covariances: NoiseCovariances,
    pub filter_config: FilterConfig,
    pub filter_type: String,
    pub optimization_method: String,
    pub loglik: f64,
    pub trace: Vec<SeedRecord>,
}

impl FittedStateSpace {
    /// Filters and smooths at fixed covariances, without estimation.
    pub fn from_covariances(
        model: StateSpaceModel,
        covariances: NoiseCovariances,
        filter_config: FilterConfig,
    ) -> Result<Self> {
        let filter = crate::filter::filter(&model, &covariances, &filter_config)?;
        let smoother = run_smoother(&model, &filter)?;
        Ok(Self {
            loglik: filter.loglik,
            model,
            filter,
            smoother,
            covariances,
            filter_type: String::from(filter_config.variant.name()),
            filter_config,
            optimization_method: String::new(),
            trace: Vec::new(),
        })
    }

    pub fn components(&self, component: Component) -> Result<ComponentSeries> {
        smoothed_components(self, component)
    }
}

/// Estimates `H` and `Q`, then filters and smooths at the optimum.
pub fn fit(
    model: StateSpaceModel,
    filter_config: &FilterConfig,
    optimizer_config: &OptimizerConfig,
) -> Result<FittedStateSpace> {
    fit_with(
        model,
        &filter_config.variant,
        filter_config,
        &RandomSeedsLbfgs::new(optimizer_config.clone()),
        &mut Silent,
    )
}

/// `fit` with explicit filter, optimizer and monitor.
pub fn fit_with(
    model: StateSpaceModel,
    filter: &dyn StateFilter,
    filter_config: &FilterConfig,
    optimizer: &dyn Optimizer,
    monitor: &mut dyn EstimationMonitor,
) -> Result<FittedStateSpace> {
    let est = optimizer.estimate(&model, filter, filter_config, monitor)?;
    let out = filter.filter(&model, &est.covariances, filter_config)?;
    let smoother = run_smoother(&model, &out)?;
    Ok(FittedStateSpace {
        loglik: out.loglik,
        model,
        filter: out,
        smoother,
        covariances: est.covariances,
        filter_config: filter_config.clone(),
        filter_type: String::from(filter.name()),
        optimization_method: String::from(optimizer.name()),
        trace: est.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Level,
    Slope,
    Seasonal,
    /// `θ̂ᵀ X_t`, the exogenous regression effect.
    Regression,
}

impl Component {
    pub fn name(&self) -> &'static str {
        match self {
            Component::Level => "level",
            Component::Slope => "slope",
            Component::Seasonal => "seasonal",
            Component::Regression => "regression",
        }
    }
}

/// Components a model kind exposes, in display order.
pub fn available_components(kind: ModelKind) -> &'static [Component] {
    match kind {
        ModelKind::LocalLevel => &[Component::Level],
        ModelKind::LinearTrend => &[Component::Level, Component::Slope],
        ModelKind::Structural { k: 0, .. } => {
            &[Component::Level, Component::Slope, Component::Seasonal]
        }
        ModelKind::Structural { .. } => &[
            Component::Level,
            Component::Slope,
            Component::Seasonal,
            Component::Regression,
        ],
        ModelKind::UserDefined => &[],
    }
}

/// Smoothed mean and variance of a component, `n × p` (one column per variable).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSeries {
    pub mean: DMatrix<f64>,
    pub variance: DMatrix<f64>,
}

fn missing(component: Component, kind: ModelKind) -> Error {
    Error::MissingComponent {
        component: component.name(),
        kind: kind.name(),
    }
}

/// Block length and in-block offset of a single-state component.
fn state_offset(kind: ModelKind, component: Component) -> Result<(usize, usize)> {
    match (kind, component) {
        (ModelKind::LocalLevel, Component::Level) => Ok((1, 0)),
        (ModelKind::LinearTrend, Component::Level) => Ok((2, 0)),
        (ModelKind::LinearTrend, Component::Slope) => Ok((2, 1)),
        (ModelKind::Structural { s, k }, c) => {
            let layout = StructuralLayout { s, k };
            let off = match c {
                Component::Level => layout.level(),
                Component::Slope => layout.slope(),
                Component::Seasonal => layout.seasonal(),
                Component::Regression => return Err(missing(c, kind)),
            };
            Ok((layout.block_len(), off))
        }
        (kind, c) => Err(missing(c, kind)),
    }
}

pub fn smoothed_components(fitted: &FittedStateSpace, component: Component) -> Result<ComponentSeries> {
    let model = &fitted.model;
    let kind = model.kind();
    let dims = model.dims();
    let sm = &fitted.smoother;
    let mut mean = DMatrix::zeros(dims.n, dims.p);
    let mut variance = DMatrix::zeros(dims.n, dims.p);

    if component == Component::Regression {
        let ModelKind::Structural { s, k } = kind else {
            return Err(missing(component, kind));
        };
        if k == 0 {
            return Err(missing(component, kind));
        }
        let layout = StructuralLayout { s, k };
        let b = layout.block_len();
        for t in 0..dims.n {
            let z = model.z_unchecked(t);
            for v in 0..dims.p {
                let off = v * b;
                let x = z.view((v, off), (1, k));
                let theta = sm.alpha[t].rows(off, k);
                let cov = sm.v[t].view((off, off), (k, k));
                mean[(t, v)] = (x * theta)[0];
                variance[(t, v)] = (x * cov * x.transpose())[0];
            }
        }
        return Ok(ComponentSeries { mean, variance });
    }

    let (b, off) = state_offset(kind, component)?;
    for t in 0..dims.n {
        for v in 0..dims.p {
            let i = v * b + off;
            mean[(t, v)] = sm.alpha[t][i];
            variance[(t, v)] = sm.v[t][(i, i)];
        }
    }
    Ok(ComponentSeries { mean, variance })
}
