//! Forecasting and Monte Carlo scenario simulation.
//!
//! Forecasts treat future observations as missing: the filter is run over
//! the sample extended with `N` all-missing periods, and the predictive
//! distribution of `y_{n+h}` is `N(Z a_{n+h}, Z P_{n+h} Zᵀ + H)`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fitted::FittedStateSpace;
use crate::linalg::{self, symmetrize};

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutput {
    /// `N × p` point forecasts.
    pub mean: DMatrix<f64>,
    /// Predictive covariance of each horizon.
    pub covariance: Vec<DMatrix<f64>>,
}

impl ForecastOutput {
    pub fn horizon(&self) -> usize {
        self.mean.nrows()
    }

    pub fn std(&self, h: usize, j: usize) -> f64 {
        libm::sqrt(self.covariance[h][(j, j)].max(0.0))
    }
}

fn check_horizon(fitted: &FittedStateSpace, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("forecast horizon must be at least 1".into()));
    }
    if let Some(avail) = fitted.model.future_periods() {
        if avail < horizon {
            return Err(Error::InsufficientFutureRows {
                required: horizon,
                available: avail,
            });
        }
    }
    Ok(())
}

/// Minimum mean square error forecasts for `horizon` periods.
pub fn forecast(fitted: &FittedStateSpace, horizon: usize) -> Result<ForecastOutput> {
    check_horizon(fitted, horizon)?;
    let n = fitted.model.dims().n;
    let ext = fitted.model.extended(horizon)?;
    let out = crate::filter::filter(&ext, &fitted.covariances, &fitted.filter_config)?;
    let p = ext.dims().p;
    let mut mean = DMatrix::zeros(horizon, p);
    let mut covariance = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let t = n + h;
        let z = ext.z_unchecked(t);
        let m = z * &out.a[t];
        mean.row_mut(h).copy_from(&m.transpose());
        let mut c = z * &out.p[t] * z.transpose() + fitted.covariances.h();
        symmetrize(&mut c);
        covariance.push(c);
    }
    Ok(ForecastOutput { mean, covariance })
}

/// `N × S × p` simulated future observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    horizon: usize,
    scenarios: usize,
    variables: usize,
    data: Vec<f64>,
}

impl ScenarioSet {
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn scenarios(&self) -> usize {
        self.scenarios
    }
    pub fn variables(&self) -> usize {
        self.variables
    }

    fn index(&self, h: usize, s: usize, j: usize) -> usize {
        (h * self.scenarios + s) * self.variables + j
    }

    pub fn get(&self, h: usize, s: usize, j: usize) -> f64 {
        self.data[self.index(h, s, j)]
    }

    /// All scenarios of variable `j` as an `N × S` matrix.
    pub fn variable(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.horizon, self.scenarios, |h, s| self.get(h, s, j))
    }

    /// Per-horizon mean over scenarios, `N × p`.
    pub fn mean(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.horizon, self.variables, |h, j| {
            (0..self.scenarios).map(|s| self.get(h, s, j)).sum::<f64>() / self.scenarios as f64
        })
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

fn check_psd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what });
    }
    let scale = 1.0 + linalg::max_abs(m);
    let min = linalg::min_eigenvalue(m);
    if min < -1e-8 * scale {
        return Err(Error::NotPositiveSemidefinite {
            what,
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Draws `scenarios` future paths of length `horizon`.
///
/// Each path starts from `α_{n+1} ~ N(a_{n+1}, P_{n+1})` and then follows the
/// state and observation equations with `η ~ N(0, Q)`, `ε ~ N(0, H)`. Path
/// `s` uses ChaCha stream `s` of `rng_seed`.
pub fn simulate(
    fitted: &FittedStateSpace,
    horizon: usize,
    scenarios: usize,
    rng_seed: u64,
) -> Result<ScenarioSet> {
    check_horizon(fitted, horizon)?;
    if scenarios == 0 {
        return Err(Error::InvalidConfig("scenario count must be at least 1".into()));
    }
    let model = &fitted.model;
    let dims = model.dims();
    let n = dims.n;
    let a0 = &fitted.filter.a[n];
    let p0 = &fitted.filter.p[n];
    check_psd(p0, "P_{n+1}")?;
    check_psd(fitted.covariances.h(), "H")?;
    check_psd(fitted.covariances.q(), "Q")?;
    let s_p = linalg::psd_sqrt(p0);
    let s_h = linalg::psd_sqrt(fitted.covariances.h());
    let r_sq = model.selection() * linalg::psd_sqrt(fitted.covariances.q());
    let zs: Vec<&DMatrix<f64>> = (0..horizon)
        .map(|h| model.future_z(h))
        .collect::<Result<_>>()?;

    let mut data = Vec::with_capacity(horizon * scenarios * dims.p);
    data.resize(horizon * scenarios * dims.p, 0.0);
    let mut set = ScenarioSet {
        horizon,
        scenarios,
        variables: dims.p,
        data: Vec::new(),
    };
    for s in 0..scenarios {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(s as u64);
        let mut alpha = a0 + &s_p * gaussian(&mut rng, dims.m);
        for (h, z) in zs.iter().enumerate() {
            let y = *z * &alpha + &s_h * gaussian(&mut rng, dims.p);
            for j in 0..dims.p {
                data[set.index(h, s, j)] = y[j];
            }
            alpha = model.transition() * &alpha + &r_sq * gaussian(&mut rng, dims.r);
        }
    }
    set.data = data;
    Ok(set)
}

/// Empirical quantiles per horizon and variable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub probs: Vec<f64>,
    horizon: usize,
    variables: usize,
    data: Vec<f64>,
}

impl QuantileTable {
    pub fn get(&self, h: usize, j: usize, k: usize) -> f64 {
        self.data[(h * self.variables + j) * self.probs.len() + k]
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn scenario_quantiles(set: &ScenarioSet, probs: &[f64]) -> Result<QuantileTable> {
    if probs.is_empty() {
        return Err(Error::EmptyProbabilities);
    }
    if let Some(&p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::InvalidProbability(p));
    }
    let mut data = Vec::with_capacity(set.horizon * set.variables * probs.len());
    let mut buf = Vec::with_capacity(set.scenarios);
    for h in 0..set.horizon {
        for j in 0..set.variables {
            buf.clear();
            buf.extend((0..set.scenarios).map(|s| set.get(h, s, j)));
            buf.sort_by(f64::total_cmp);
            data.extend(probs.iter().map(|&p| quantile_sorted(&buf, p)));
        }
    }
    Ok(QuantileTable {
        probs: probs.to_vec(),
        horizon: set.horizon,
        variables: set.variables,
        data,
    })
}
