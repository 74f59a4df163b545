//! Brute-force reference for linear Gaussian state-space models.
//!
//! Stacks `(α_0, …, α_n, y_0, …, y_{n−1})` as an explicit linear map of the
//! independent sources `(α_0, η_0, …, η_{n−1}, ε_0, …, ε_{n−1})`, forms the
//! joint mean and covariance, and answers every filtering and smoothing
//! question by direct Gaussian conditioning. It shares no code with the
//! recursions it checks.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub struct Instance {
    /// `Z_t`, one per period.
    pub z: Vec<DMatrix<f64>>,
    pub t: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub a1: DVector<f64>,
    pub p1: DMatrix<f64>,
    /// `n × p`, NaN for missing.
    pub y: DMatrix<f64>,
}

pub struct Joint {
    n: usize,
    m: usize,
    p: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    y: DMatrix<f64>,
}

pub struct Conditional {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Joint {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.y.nrows();
        let p = inst.y.ncols();
        let m = inst.t.nrows();
        let r = inst.r.ncols();
        let n_src = m + n * r + n * p;
        let n_x = (n + 1) * m + n * p;

        // Each state as a map from sources.
        let mut state_maps: Vec<DMatrix<f64>> = Vec::with_capacity(n + 1);
        let mut first = DMatrix::zeros(m, n_src);
        first.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
        state_maps.push(first);
        for t in 0..n {
            let mut next = &inst.t * &state_maps[t];
            let eta = m + t * r;
            let block = next.view((0, eta), (m, r)) + &inst.r;
            next.view_mut((0, eta), (m, r)).copy_from(&block);
            state_maps.push(next);
        }
        let mut a = DMatrix::zeros(n_x, n_src);
        for (t, map) in state_maps.iter().enumerate() {
            a.view_mut((t * m, 0), (m, n_src)).copy_from(map);
        }
        for (t, map) in state_maps.iter().take(n).enumerate() {
            let mut obs = &inst.z[t] * map;
            let eps = m + n * r + t * p;
            let block = obs.view((0, eps), (p, p)) + DMatrix::<f64>::identity(p, p);
            obs.view_mut((0, eps), (p, p)).copy_from(&block);
            a.view_mut(((n + 1) * m + t * p, 0), (p, n_src)).copy_from(&obs);
        }
        let mut src_cov = DMatrix::zeros(n_src, n_src);
        src_cov.view_mut((0, 0), (m, m)).copy_from(&inst.p1);
        for t in 0..n {
            let i = m + t * r;
            src_cov.view_mut((i, i), (r, r)).copy_from(&inst.q);
            let j = m + n * r + t * p;
            src_cov.view_mut((j, j), (p, p)).copy_from(&inst.h);
        }
        let mut src_mean = DVector::zeros(n_src);
        src_mean.rows_mut(0, m).copy_from(&inst.a1);
        let mean = &a * src_mean;
        let cov = &a * src_cov * a.transpose();
        Self {
            n,
            m,
            p,
            mean,
            cov,
            y: inst.y.clone(),
        }
    }

    fn y_index(&self, t: usize, j: usize) -> usize {
        (self.n + 1) * self.m + t * self.p + j
    }

    /// Joint indices of observed `y` entries in periods `< upto`.
    fn observed_before(&self, upto: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for t in 0..upto {
            for j in 0..self.p {
                let v = self.y[(t, j)];
                if !v.is_nan() {
                    out.push((self.y_index(t, j), v));
                }
            }
        }
        out
    }

    fn condition(&self, target: &[usize], given: &[(usize, f64)]) -> Conditional {
        let k = target.len();
        let mu_t = DVector::from_iterator(k, target.iter().map(|&i| self.mean[i]));
        let s_tt = DMatrix::from_fn(k, k, |a, b| self.cov[(target[a], target[b])]);
        if given.is_empty() {
            return Conditional { mean: mu_t, cov: s_tt };
        }
        let g = given.len();
        let s_gg = DMatrix::from_fn(g, g, |a, b| self.cov[(given[a].0, given[b].0)]);
        let s_tg = DMatrix::from_fn(k, g, |a, b| self.cov[(target[a], given[b].0)]);
        let resid = DVector::from_iterator(g, given.iter().map(|(i, v)| v - self.mean[*i]));
        let lu = s_gg.clone().lu();
        let w = lu.solve(&resid).expect("observed covariance is singular");
        let x = lu.solve(&s_tg.transpose()).expect("observed covariance is singular");
        Conditional {
            mean: mu_t + &s_tg * w,
            cov: s_tt - &s_tg * x,
        }
    }

    fn state_indices(&self, t: usize) -> Vec<usize> {
        (t * self.m..(t + 1) * self.m).collect()
    }

    /// `α_t | y_0 … y_{t−1}` for `t = 0..=n`.
    pub fn predictive(&self, t: usize) -> Conditional {
        self.condition(&self.state_indices(t), &self.observed_before(t))
    }

    /// `α_t | y_0 … y_t`.
    pub fn filtered(&self, t: usize) -> Conditional {
        self.condition(&self.state_indices(t), &self.observed_before(t + 1))
    }

    /// `α_t | y_0 … y_{n−1}`.
    pub fn smoothed(&self, t: usize) -> Conditional {
        self.condition(&self.state_indices(t), &self.observed_before(self.n))
    }

    /// Observed indices of `y_t` with their innovation `y_t − E[y_t | Y_{t−1}]`
    /// and its covariance.
    pub fn innovation(&self, t: usize) -> (Vec<usize>, Conditional) {
        let cols: Vec<usize> = (0..self.p).filter(|&j| !self.y[(t, j)].is_nan()).collect();
        let target: Vec<usize> = cols.iter().map(|&j| self.y_index(t, j)).collect();
        let mut c = self.condition(&target, &self.observed_before(t));
        for (k, &j) in cols.iter().enumerate() {
            c.mean[k] = self.y[(t, j)] - c.mean[k];
        }
        (cols, c)
    }

    /// Log-density of all observed values.
    pub fn log_likelihood(&self) -> f64 {
        let given = self.observed_before(self.n);
        let g = given.len();
        if g == 0 {
            return 0.0;
        }
        let s = DMatrix::from_fn(g, g, |a, b| self.cov[(given[a].0, given[b].0)]);
        let resid = DVector::from_iterator(g, given.iter().map(|(i, v)| v - self.mean[*i]));
        let lu = s.clone().lu();
        let det = lu.determinant();
        let quad = resid.dot(&lu.solve(&resid).unwrap());
        -0.5 * (g as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * (det.ln() + quad)
    }
}
