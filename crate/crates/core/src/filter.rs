//! Kalman filtering: predictive states `a_t = E[α_t | Y_{t−1}]`, filtered
//! states `a_{t|t} = E[α_t | Y_t]`, innovations `v_t` and their covariances.
//!
//! Two variants share one output contract. The standard filter propagates
//! covariance matrices directly. The square-root filter propagates lower
//! triangular factors `S` with `P = S Sᵀ` through orthogonal
//! triangularization of stacked pre-arrays, so every covariance it reports is
//! positive semidefinite by construction.
//!
//! At a period where all variables are missing, `Z_t` is treated as zero:
//! `a_{t|t} = a_t`, `P_{t|t} = P_t`, and the innovation entries are NaN.
//! A partially missing period drops the missing rows of `y_t`, `Z_t` and `H`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, max_abs_diff, symmetrize};
use crate::model::{NoiseCovariances, StateSpaceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterVariant {
    #[default]
    Standard,
    SquareRoot,
}

impl FilterVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FilterVariant::Standard => "KalmanFilter",
            FilterVariant::SquareRoot => "SquareRootFilter",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "KalmanFilter" | "standard" => Some(FilterVariant::Standard),
            "SquareRootFilter" | "sqrt" => Some(FilterVariant::SquareRoot),
            _ => None,
        }
    }
}

/// Distribution of the first state.
#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    /// `a_1 = 0`, `P_1 = κ I` with `κ = FilterConfig::diffuse_scale`.
    Diffuse,
    /// Known prior mean and covariance.
    Known { mean: DVector<f64>, cov: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub variant: FilterVariant,
    pub diffuse_scale: f64,
    pub steady_state_tolerance: f64,
    pub initialization: Initialization,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            variant: FilterVariant::Standard,
            diffuse_scale: 1e6,
            steady_state_tolerance: 1e-5,
            initialization: Initialization::Diffuse,
        }
    }
}

impl FilterConfig {
    pub fn with_variant(variant: FilterVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn with_prior(mut self, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        self.initialization = Initialization::Known { mean, cov };
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.diffuse_scale > 0.0 && self.diffuse_scale.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "diffuse scale must be positive, got {}",
                self.diffuse_scale
            )));
        }
        if self.steady_state_tolerance.is_nan() || self.steady_state_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "steady-state tolerance must be positive, got {}",
                self.steady_state_tolerance
            )));
        }
        if let Initialization::Known { mean, cov } = &self.initialization {
            if mean.len() != m || cov.shape() != (m, m) {
                return Err(Error::DimensionMismatch {
                    left: "prior",
                    right: "T",
                    detail: alloc::format!(
                        "prior has length {} and covariance {}x{}, state dimension is {m}",
                        mean.len(),
                        cov.nrows(),
                        cov.ncols()
                    ),
                });
            }
        }
        Ok(())
    }

    fn prior(&self, m: usize) -> (DVector<f64>, DMatrix<f64>) {
        match &self.initialization {
            Initialization::Diffuse => (
                DVector::zeros(m),
                DMatrix::identity(m, m) * self.diffuse_scale,
            ),
            Initialization::Known { mean, cov } => (mean.clone(), cov.clone()),
        }
    }
}

/// Per-period filter results. Indices are 0-based periods.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    /// Predictive means `a_0 … a_n`; the last one is one step beyond the sample.
    pub a: Vec<DVector<f64>>,
    /// Predictive covariances, same indexing as `a`.
    pub p: Vec<DMatrix<f64>>,
    /// Filtered means `a_{t|t}`.
    pub att: Vec<DVector<f64>>,
    pub ptt: Vec<DMatrix<f64>>,
    /// Innovations; missing entries are NaN.
    pub v: Vec<DVector<f64>>,
    /// Innovation covariances; rows and columns of missing entries are NaN.
    pub f: Vec<DMatrix<f64>>,
    pub steady_state: bool,
    /// First period `t` at which `‖P_{t+1} − P_t‖_max` fell below the tolerance.
    pub steady_state_period: Option<usize>,
    /// Gaussian log-likelihood of the observed values.
    pub loglik: f64,
}

impl FilterOutput {
    pub fn n(&self) -> usize {
        self.att.len()
    }
}

/// A Kalman filter implementation. Estimation and forecasting only depend
/// on this contract, so other variants can be plugged in.
pub trait StateFilter {
    fn name(&self) -> &'static str;
    fn filter(
        &self,
        model: &StateSpaceModel,
        cov: &NoiseCovariances,
        config: &FilterConfig,
    ) -> Result<FilterOutput>;
}

impl StateFilter for FilterVariant {
    fn name(&self) -> &'static str {
        FilterVariant::name(self)
    }

    fn filter(
        &self,
        model: &StateSpaceModel,
        cov: &NoiseCovariances,
        config: &FilterConfig,
    ) -> Result<FilterOutput> {
        match self {
            FilterVariant::Standard => run_filter(model, cov, config),
            FilterVariant::SquareRoot => run_sqrt_filter(model, cov, config),
        }
    }
}

/// Runs the variant selected in `config`.
pub fn filter(
    model: &StateSpaceModel,
    cov: &NoiseCovariances,
    config: &FilterConfig,
) -> Result<FilterOutput> {
    config.variant.filter(model, cov, config)
}

/// First index `t` with `‖P_{t+1} − P_t‖_max < tolerance`.
pub fn detect_steady_state(p: &[DMatrix<f64>], tolerance: f64) -> Option<usize> {
    p.windows(2)
        .position(|w| max_abs_diff(&w[1], &w[0]) < tolerance)
}

// Freezing only kicks in once P is stationary to rounding level, so the
// frozen recursion agrees with the full one far below any test tolerance.
const FREEZE_RTOL: f64 = 1e-13;

fn half_log_2pi() -> f64 {
    0.5 * libm::log(2.0 * PI)
}

fn innovation_log_density(dim: usize, log_det: f64, quad: f64) -> f64 {
    -(dim as f64) * half_log_2pi() - 0.5 * (log_det + quad)
}

struct Frozen {
    f: DMatrix<f64>,
    chol_f: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
    gain: DMatrix<f64>,
    ptt: DMatrix<f64>,
    p: DMatrix<f64>,
}

fn check_inputs(model: &StateSpaceModel, cov: &NoiseCovariances, config: &FilterConfig) -> Result<()> {
    cov.check_dims(model.dims())?;
    config.validate(model.dims().m)
}

/// Standard Kalman filter.
pub fn run_filter(
    model: &StateSpaceModel,
    cov: &NoiseCovariances,
    config: &FilterConfig,
) -> Result<FilterOutput> {
    check_inputs(model, cov, config)?;
    let dims = model.dims();
    let (n, p_dim) = (dims.n, dims.p);
    let y = model.observations();
    let t_mat = model.transition();
    let t_tr = t_mat.transpose();
    let rqr = {
        let mut m = model.selection() * cov.q() * model.selection().transpose();
        symmetrize(&mut m);
        m
    };
    let can_freeze = !model.design().is_time_varying();

    let (mut a, mut p) = config.prior(dims.m);
    let mut out = FilterOutput {
        a: Vec::with_capacity(n + 1),
        p: Vec::with_capacity(n + 1),
        att: Vec::with_capacity(n),
        ptt: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        f: Vec::with_capacity(n),
        steady_state: false,
        steady_state_period: None,
        loglik: 0.0,
    };
    let mut frozen: Option<Frozen> = None;

    for t in 0..n {
        let obs = y.observed(t);
        let yt = y.row(t);
        let (att, ptt, a_next, p_next);

        if obs.is_empty() {
            frozen = None;
            att = a.clone();
            ptt = p.clone();
            a_next = t_mat * &a;
            let mut pn = t_mat * &p * &t_tr + &rqr;
            symmetrize(&mut pn);
            p_next = pn;
            out.v.push(linalg::nan_vector(p_dim));
            out.f.push(linalg::nan_matrix(p_dim));
        } else if obs.len() == p_dim && frozen.is_some() {
            let fz = frozen.as_ref().unwrap();
            let z = model.z_unchecked(t);
            let v = &yt - z * &a;
            let finv_v = fz.chol_f.solve(&v);
            out.loglik += innovation_log_density(p_dim, fz.log_det, v.dot(&finv_v));
            att = &a + &fz.gain * &v;
            ptt = fz.ptt.clone();
            a_next = t_mat * &att;
            p_next = fz.p.clone();
            out.v.push(v);
            out.f.push(fz.f.clone());
        } else {
            let full = obs.len() == p_dim;
            let z_full = model.z_unchecked(t);
            let (z, h, yo);
            if full {
                z = z_full.clone();
                h = cov.h().clone();
                yo = yt.clone();
            } else {
                frozen = None;
                z = linalg::select_rows(z_full, obs);
                h = linalg::select_square(cov.h(), obs);
                yo = linalg::select_entries(&yt, obs);
            }
            let v = &yo - &z * &a;
            let zp = &z * &p;
            let mut f = &zp * z.transpose() + &h;
            symmetrize(&mut f);
            let chol_f = linalg::cholesky(&f).ok_or(Error::SingularInnovation { t })?;
            let log_det = 2.0
                * chol_f
                    .l_dirty()
                    .diagonal()
                    .iter()
                    .map(|d| libm::log(*d))
                    .sum::<f64>();
            if !log_det.is_finite() {
                return Err(Error::SingularInnovation { t });
            }
            let finv_v = chol_f.solve(&v);
            out.loglik += innovation_log_density(obs.len(), log_det, v.dot(&finv_v));
            // K = P Zᵀ F⁻¹ = (F⁻¹ Z P)ᵀ
            let gain = chol_f.solve(&zp).transpose();
            att = &a + &gain * &v;
            let mut pt = &p - &gain * &zp;
            symmetrize(&mut pt);
            ptt = pt;
            a_next = t_mat * &att;
            let mut pn = t_mat * &ptt * &t_tr + &rqr;
            symmetrize(&mut pn);
            p_next = pn;

            if full {
                out.v.push(v);
                out.f.push(f.clone());
            } else {
                out.v.push(linalg::scatter_vector(&v, obs, p_dim));
                out.f.push(linalg::scatter_square(&f, obs, p_dim));
            }

            if full && can_freeze {
                let diff = max_abs_diff(&p_next, &p);
                if diff <= FREEZE_RTOL * (1.0 + max_abs(&p)) {
                    frozen = Some(Frozen {
                        f,
                        chol_f,
                        log_det,
                        gain,
                        ptt: ptt.clone(),
                        p: p_next.clone(),
                    });
                }
            }
        }

        if !out.steady_state
            && y.fully_observed(t)
            && max_abs_diff(&p_next, &p) < config.steady_state_tolerance
        {
            out.steady_state = true;
            out.steady_state_period = Some(t);
        }

        out.a.push(a);
        out.p.push(p);
        out.att.push(att);
        out.ptt.push(ptt);
        a = a_next;
        p = p_next;
    }
    out.a.push(a);
    out.p.push(p);
    Ok(out)
}

/// Square-root Kalman filter.
///
/// Measurement update: the pre-array `[[Z S_P, S_H], [S_P, 0]]` is
/// triangularized into `[[S_F, 0], [G, S_{P|t}]]`, giving
/// `a_{t|t} = a_t + G S_F⁻¹ v_t`. Time update: `[T S_{P|t}, R S_Q]` becomes
/// `[S_{P_{t+1}}, 0]`.
pub fn run_sqrt_filter(
    model: &StateSpaceModel,
    cov: &NoiseCovariances,
    config: &FilterConfig,
) -> Result<FilterOutput> {
    check_inputs(model, cov, config)?;
    let dims = model.dims();
    let (n, p_dim, m) = (dims.n, dims.p, dims.m);
    let y = model.observations();
    let t_mat = model.transition();
    let rsq = model.selection() * linalg::psd_sqrt(cov.q());
    let sh_full = linalg::psd_sqrt(cov.h());

    let (mut a, p1) = config.prior(m);
    let mut s = linalg::psd_sqrt(&p1);
    let mut p = &s * s.transpose();

    let mut out = FilterOutput {
        a: Vec::with_capacity(n + 1),
        p: Vec::with_capacity(n + 1),
        att: Vec::with_capacity(n),
        ptt: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        f: Vec::with_capacity(n),
        steady_state: false,
        steady_state_period: None,
        loglik: 0.0,
    };

    let r_cols = rsq.ncols();
    for t in 0..n {
        let obs = y.observed(t);
        let yt = y.row(t);
        let (att, ptt, s_tt);
        if obs.is_empty() {
            att = a.clone();
            ptt = p.clone();
            s_tt = s.clone();
            out.v.push(linalg::nan_vector(p_dim));
            out.f.push(linalg::nan_matrix(p_dim));
        } else {
            let po = obs.len();
            let full = po == p_dim;
            let z_full = model.z_unchecked(t);
            let (z, sh, yo) = if full {
                (z_full.clone(), sh_full.clone(), yt.clone())
            } else {
                (
                    linalg::select_rows(z_full, obs),
                    linalg::psd_sqrt(&linalg::select_square(cov.h(), obs)),
                    linalg::select_entries(&yt, obs),
                )
            };
            let mut pre = DMatrix::zeros(po + m, m + po);
            pre.view_mut((0, 0), (po, m)).copy_from(&(&z * &s));
            pre.view_mut((0, m), (po, po)).copy_from(&sh);
            pre.view_mut((po, 0), (m, m)).copy_from(&s);
            let post = linalg::lower_triangularize(&pre);
            let sf = post.view((0, 0), (po, po)).into_owned();
            let g = post.view((po, 0), (m, po)).into_owned();
            s_tt = post.view((po, po), (m, m)).into_owned();

            let v = &yo - &z * &a;
            let e = linalg::solve_lower(&sf, &v).ok_or(Error::SingularInnovation { t })?;
            let log_det = 2.0
                * sf.diagonal()
                    .iter()
                    .map(|d| libm::log(d.abs()))
                    .sum::<f64>();
            if !log_det.is_finite() {
                return Err(Error::SingularInnovation { t });
            }
            out.loglik += innovation_log_density(po, log_det, e.dot(&e));
            att = &a + &g * &e;
            ptt = &s_tt * s_tt.transpose();
            let f = &sf * sf.transpose();
            if full {
                out.v.push(v);
                out.f.push(f);
            } else {
                out.v.push(linalg::scatter_vector(&v, obs, p_dim));
                out.f.push(linalg::scatter_square(&f, obs, p_dim));
            }
        }

        let mut pre = DMatrix::zeros(m, m + r_cols);
        pre.view_mut((0, 0), (m, m)).copy_from(&(t_mat * &s_tt));
        pre.view_mut((0, m), (m, r_cols)).copy_from(&rsq);
        let s_next = linalg::lower_triangularize(&pre);
        let a_next = t_mat * &att;
        let p_next = &s_next * s_next.transpose();

        if !out.steady_state
            && y.fully_observed(t)
            && max_abs_diff(&p_next, &p) < config.steady_state_tolerance
        {
            out.steady_state = true;
            out.steady_state_period = Some(t);
        }

        out.a.push(a);
        out.p.push(p);
        out.att.push(att);
        out.ptt.push(ptt);
        a = a_next;
        p = p_next;
        s = s_next;
    }
    out.a.push(a);
    out.p.push(p);
    Ok(out)
}
