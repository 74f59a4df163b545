//! Maximum-likelihood estimation of `H` and `Q`.
//!
//! The log-likelihood is evaluated by a filter pass,
//! `ℓ = −(N/2) log 2π − ½ Σ_t (log|F_t| + v_tᵀ F_t⁻¹ v_t)` with `N` the number
//! of observed scalar values. Covariances are parametrized by their Cholesky
//! factors with log-diagonals, which keeps every parameter vector valid.
//!
//! Optimization runs L-BFGS from several starting points. Seed 0 starts from
//! near-zero variances (the degenerate corner of the parameter space); the
//! other seeds start from points drawn uniformly in `[−seed_box, seed_box]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, StateFilter};
use crate::lbfgs::{self, LbfgsSettings, Objective};
use crate::model::{NoiseCovariances, StateSpaceModel};

/// Log of the Cholesky diagonal used by seed 0; decodes to variances of 1e-8.
pub const DEGENERATE_LOG_SD: f64 = -9.210_340_371_976_182;

/// Relative step of the central-difference gradient.
pub const GRADIENT_STEP: f64 = 1e-6;

/// Layout of the unconstrained parameter vector `ψ`: the lower triangle of
/// the Cholesky factor of `H` (row by row), followed by that of `Q`.
/// Diagonal entries are stored as logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterLayout {
    pub p: usize,
    pub r: usize,
}

fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

fn decode_factor(psi: &[f64], n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            l[(i, j)] = if i == j { libm::exp(psi[k]) } else { psi[k] };
            k += 1;
        }
    }
    l
}

fn encode_factor(m: &DMatrix<f64>, what: &'static str, out: &mut Vec<f64>) -> Result<()> {
    let chol = crate::linalg::cholesky(m).ok_or(Error::NotPositiveSemidefinite {
        what,
        min_eigenvalue: crate::linalg::min_eigenvalue(m),
    })?;
    let l = chol.unpack();
    for i in 0..m.nrows() {
        for j in 0..=i {
            out.push(if i == j { libm::log(l[(i, i)]) } else { l[(i, j)] });
        }
    }
    Ok(())
}

impl ParameterLayout {
    pub fn for_model(model: &StateSpaceModel) -> Self {
        let d = model.dims();
        Self { p: d.p, r: d.r }
    }

    pub fn len(&self) -> usize {
        tri(self.p) + tri(self.r)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Always yields symmetric PSD covariances.
    pub fn decode(&self, psi: &[f64]) -> NoiseCovariances {
        assert_eq!(psi.len(), self.len(), "parameter vector length");
        let split = tri(self.p);
        let lh = decode_factor(&psi[..split], self.p);
        let lq = decode_factor(&psi[split..], self.r);
        let h = &lh * lh.transpose();
        let q = &lq * lq.transpose();
        NoiseCovariances::from_factors_unchecked(h, q)
    }

    /// Inverse of `decode` for positive definite covariances.
    pub fn encode(&self, cov: &NoiseCovariances) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        encode_factor(cov.h(), "H", &mut out)?;
        encode_factor(cov.q(), "Q", &mut out)?;
        Ok(out)
    }

    /// Starting point of seed 0: all log-diagonals at [`DEGENERATE_LOG_SD`],
    /// off-diagonals zero.
    pub fn degenerate_start(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for n in [self.p, self.r] {
            for i in 0..n {
                for j in 0..=i {
                    out.push(if i == j { DEGENERATE_LOG_SD } else { 0.0 });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Random seeds in addition to the degenerate seed 0.
    pub n_seeds: usize,
    pub rng_seed: u64,
    pub seed_box: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// 0: silent, 1: progress, 2: progress and optimizer log. Interpreted by
    /// the [`EstimationMonitor`].
    pub verbosity: u8,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_seeds: 3,
            rng_seed: 0,
            seed_box: 5.0,
            gradient_tolerance: 1e-6,
            max_iterations: 10_000,
            verbosity: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_seeds < 1 {
            return Err(Error::InvalidConfig("n_seeds must be at least 1".into()));
        }
        if !(self.seed_box > 0.0 && self.seed_box.is_finite()) {
            return Err(Error::InvalidConfig("seed_box must be positive".into()));
        }
        if self.gradient_tolerance.is_nan() || self.gradient_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(
                "gradient tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.verbosity > 2 {
            return Err(Error::InvalidConfig("verbosity must be 0, 1 or 2".into()));
        }
        Ok(())
    }

    /// Starting point for `seed` (0 is the degenerate start). Each seed draws
    /// from its own ChaCha stream, so the result does not depend on the order
    /// in which seeds are run.
    pub fn initial_point(&self, layout: &ParameterLayout, seed: usize) -> Vec<f64> {
        if seed == 0 {
            return layout.degenerate_start();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(seed as u64);
        (0..layout.len())
            .map(|_| rng.random_range(-self.seed_box..=self.seed_box))
            .collect()
    }
}

/// Log-likelihood of the model at the given covariances.
pub fn log_likelihood(
    model: &StateSpaceModel,
    cov: &NoiseCovariances,
    config: &FilterConfig,
) -> Result<f64> {
    Ok(crate::filter::filter(model, cov, config)?.loglik)
}

/// Outcome of one optimizer start.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRecord {
    pub seed: usize,
    pub initial_loglik: f64,
    pub loglik: f64,
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds since estimation started, as reported by the monitor clock.
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub covariances: NoiseCovariances,
    pub loglik: f64,
    pub psi: Vec<f64>,
    pub best_seed: usize,
    pub trace: Vec<SeedRecord>,
}

/// Receives estimation progress. The core crate has no clock and no output
/// channel, so both come from the monitor.
pub trait EstimationMonitor {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
    fn started(&mut self, _n_seeds: usize) {}
    fn iteration(&mut self, _seed: usize, _iteration: usize, _loglik: f64, _gradient_norm: f64) {}
    fn seed_finished(&mut self, _record: &SeedRecord) {}
    fn finished(&mut self, _estimate: &Estimate) {}
}

/// Monitor that ignores every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl EstimationMonitor for Silent {}

struct NegLogLik<'a> {
    model: &'a StateSpaceModel,
    filter: &'a dyn StateFilter,
    config: &'a FilterConfig,
    layout: ParameterLayout,
}

impl NegLogLik<'_> {
    fn eval(&self, psi: &[f64]) -> f64 {
        if psi.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let cov = self.layout.decode(psi);
        match self.filter.filter(self.model, &cov, self.config) {
            Ok(out) if out.loglik.is_finite() => -out.loglik,
            _ => f64::INFINITY,
        }
    }
}

impl Objective for NegLogLik<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&mut self, x: &[f64], fx: f64) -> Vec<f64> {
        let this = &*self;
        lbfgs::central_gradient(&mut |p| this.eval(p), x, fx, GRADIENT_STEP)
    }
}

/// Maximizes the likelihood from the starting point of `seed`.
pub fn optimize_seed(
    model: &StateSpaceModel,
    filter: &dyn StateFilter,
    filter_config: &FilterConfig,
    config: &OptimizerConfig,
    seed: usize,
    monitor: &mut dyn EstimationMonitor,
) -> SeedRecord {
    let layout = ParameterLayout::for_model(model);
    let x0 = config.initial_point(&layout, seed);
    let mut objective = NegLogLik {
        model,
        filter,
        config: filter_config,
        layout,
    };
    let initial = objective.eval(&x0);
    let settings = LbfgsSettings {
        gradient_tolerance: config.gradient_tolerance,
        max_iterations: config.max_iterations,
        ..LbfgsSettings::default()
    };
    let result = lbfgs::minimize(&mut objective, &x0, &settings, &mut |it, f, g| {
        monitor.iteration(seed, it, -f, g)
    });
    SeedRecord {
        seed,
        initial_loglik: -initial,
        loglik: -result.f,
        psi: result.x,
        iterations: result.iterations,
        converged: result.converged,
        elapsed_secs: monitor.elapsed_secs(),
    }
}

/// Picks the best finite seed, or fails with per-seed diagnostics.
pub fn select_best(layout: &ParameterLayout, trace: Vec<SeedRecord>) -> Result<Estimate> {
    let best = trace
        .iter()
        .filter(|r| r.loglik.is_finite())
        .max_by(|a, b| a.loglik.total_cmp(&b.loglik).then(b.seed.cmp(&a.seed)));
    let Some(best) = best else {
        let diagnostics: Vec<String> = trace
            .iter()
            .map(|r| {
                format!(
                    "seed {}: initial log-likelihood {}, final {} after {} iterations",
                    r.seed, r.initial_loglik, r.loglik, r.iterations
                )
            })
            .collect();
        return Err(Error::EstimationFailed { diagnostics });
    };
    Ok(Estimate {
        covariances: layout.decode(&best.psi),
        loglik: best.loglik,
        psi: best.psi.clone(),
        best_seed: best.seed,
        trace,
    })
}

/// An estimation method for `H` and `Q`.
pub trait Optimizer {
    fn name(&self) -> &'static str;
    fn estimate(
        &self,
        model: &StateSpaceModel,
        filter: &dyn StateFilter,
        filter_config: &FilterConfig,
        monitor: &mut dyn EstimationMonitor,
    ) -> Result<Estimate>;
}

/// L-BFGS from the degenerate start plus `n_seeds` random starts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RandomSeedsLbfgs {
    pub config: OptimizerConfig,
}

impl RandomSeedsLbfgs {
    pub fn new(config: OptimizerConfig) -> Self {
        Self { config }
    }
}

impl Optimizer for RandomSeedsLbfgs {
    fn name(&self) -> &'static str {
        "RandomSeedsLBFGS"
    }

    fn estimate(
        &self,
        model: &StateSpaceModel,
        filter: &dyn StateFilter,
        filter_config: &FilterConfig,
        monitor: &mut dyn EstimationMonitor,
    ) -> Result<Estimate> {
        self.config.validate()?;
        filter_config.validate(model.dims().m)?;
        let layout = ParameterLayout::for_model(model);
        monitor.started(self.config.n_seeds);
        let mut trace = Vec::with_capacity(self.config.n_seeds + 1);
        for seed in 0..=self.config.n_seeds {
            let record = optimize_seed(model, filter, filter_config, &self.config, seed, monitor);
            monitor.seed_finished(&record);
            trace.push(record);
        }
        let est = select_best(&layout, trace)?;
        monitor.finished(&est);
        Ok(est)
    }
}

/// Estimates with the filter variant from `filter_config` and no progress output.
pub fn estimate(
    model: &StateSpaceModel,
    config: &OptimizerConfig,
    filter_config: &FilterConfig,
) -> Result<Estimate> {
    estimate_with(model, config, filter_config, &mut Silent)
}

pub fn estimate_with(
    model: &StateSpaceModel,
    config: &OptimizerConfig,
    filter_config: &FilterConfig,
    monitor: &mut dyn EstimationMonitor,
) -> Result<Estimate> {
    RandomSeedsLbfgs::new(config.clone()).estimate(
        model,
        &filter_config.variant,
        filter_config,
        monitor,
    )
}
