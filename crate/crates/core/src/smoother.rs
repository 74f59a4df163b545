//! Fixed-interval state smoothing: `α̂_t = E[α_t | Y_n]`, `V_t = V[α_t | Y_n]`.
//!
//! Backward recursion over the filter output, starting from `r_n = 0`,
//! `N_n = 0`:
//!
//! ```text
//! L_t     = T − T K_t Z_t
//! r_{t−1} = Z_tᵀ F_t⁻¹ v_t + L_tᵀ r_t
//! N_{t−1} = Z_tᵀ F_t⁻¹ Z_t + L_tᵀ N_t L_t
//! α̂_t     = a_t + P_t r_{t−1}
//! V_t     = P_t − P_t N_{t−1} P_t
//! ```
//!
//! with `Z_t = 0` at fully missing periods.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::FilterOutput;
use crate::linalg::{self, symmetrize};
use crate::model::StateSpaceModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOutput {
    /// Smoothed means, one per period.
    pub alpha: Vec<DVector<f64>>,
    /// Smoothed covariances.
    pub v: Vec<DMatrix<f64>>,
}

pub fn run_smoother(model: &StateSpaceModel, filter: &FilterOutput) -> Result<SmootherOutput> {
    let dims = model.dims();
    let (n, m) = (dims.n, dims.m);
    if filter.att.len() != n || filter.a.len() != n + 1 || filter.p.len() != n + 1 {
        return Err(Error::MismatchedFilterOutput(format!(
            "expected {n} periods, filter output has {}",
            filter.att.len()
        )));
    }
    if filter.a.first().map(DVector::len) != Some(m) {
        return Err(Error::MismatchedFilterOutput(format!(
            "expected state dimension {m}"
        )));
    }
    let y = model.observations();
    let t_mat = model.transition();
    let t_tr = t_mat.transpose();

    let mut r = DVector::zeros(m);
    let mut nn = DMatrix::zeros(m, m);
    let mut alpha = Vec::with_capacity(n);
    let mut v_out = Vec::with_capacity(n);

    for t in (0..n).rev() {
        let obs = y.observed(t);
        let p = &filter.p[t];
        if obs.is_empty() {
            r = &t_tr * &r;
            nn = &t_tr * &nn * t_mat;
        } else {
            let z = if obs.len() == dims.p {
                model.z_unchecked(t).clone()
            } else {
                linalg::select_rows(model.z_unchecked(t), obs)
            };
            let f = linalg::select_square(&filter.f[t], obs);
            let v = linalg::select_entries(&filter.v[t], obs);
            let chol = linalg::cholesky(&f).ok_or(Error::SingularInnovation { t })?;
            let finv_v = chol.solve(&v);
            let finv_z = chol.solve(&z);
            // K = P Zᵀ F⁻¹ = (F⁻¹ Z P)ᵀ
            let gain = (&finv_z * p).transpose();
            let l = t_mat - t_mat * &gain * &z;
            let z_tr = z.transpose();
            r = &z_tr * finv_v + l.transpose() * &r;
            nn = &z_tr * finv_z + l.transpose() * &nn * &l;
            symmetrize(&mut nn);
        }
        alpha.push(&filter.a[t] + p * &r);
        let mut vt = p - p * &nn * p;
        symmetrize(&mut vt);
        v_out.push(vt);
    }
    alpha.reverse();
    v_out.reverse();
    Ok(SmootherOutput { alpha, v: v_out })
}
