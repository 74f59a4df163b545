//! Limited-memory BFGS minimizer with a backtracking Armijo line search.
//!
//! The objective may return `+∞` (or NaN) at infeasible points; the line
//! search treats those as rejected steps and backs off.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Value and gradient oracle for minimization.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> f64;
    /// Gradient at `x`, where `fx = value(x)` is already known.
    fn gradient(&mut self, x: &[f64], fx: f64) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub gradient_tolerance: f64,
    /// Stop when a step improves the objective by less than this, relative to `max(1, |f|)`.
    pub relative_f_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            gradient_tolerance: 1e-6,
            relative_f_tolerance: 1e-12,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Two-loop recursion: `d = −H g`.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `objective` from `x0`. `on_iteration(iter, f, ‖g‖∞)` is called
/// after every accepted step.
pub fn minimize(
    objective: &mut dyn Objective,
    x0: &[f64],
    settings: &LbfgsSettings,
    on_iteration: &mut dyn FnMut(usize, f64, f64),
) -> LbfgsResult {
    let mut x = x0.to_vec();
    let mut f = objective.value(&x);
    if !f.is_finite() {
        return LbfgsResult {
            x,
            f,
            iterations: 0,
            converged: false,
        };
    }
    let mut g = objective.gradient(&x, f);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iterations {
        let gnorm = inf_norm(&g);
        if !gnorm.is_finite() {
            break;
        }
        if gnorm < settings.gradient_tolerance {
            converged = true;
            break;
        }
        let mut d = direction(&g, &history);
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() {
            (1.0 / inf_norm(&d)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let ft = objective.value(&trial);
            if ft.is_finite() && ft <= f + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= BACKTRACK;
        }
        let Some((x_new, f_new)) = accepted else {
            if history.is_empty() {
                // No descent along the steepest direction: a stationary point
                // up to gradient noise.
                converged = true;
                break;
            }
            history.clear();
            continue;
        };
        let g_new = objective.gradient(&x_new, f_new);
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&yv, &yv)) && sy.is_finite() {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }

        let improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        on_iteration(iterations, f, inf_norm(&g));
        if improvement <= settings.relative_f_tolerance * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    LbfgsResult {
        x,
        f,
        iterations,
        converged,
    }
}

/// Central finite-difference gradient with steps `h_i = rel_step (1 + |x_i|)`.
/// Falls back to a one-sided difference when one side is infeasible.
pub fn central_gradient(
    value: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    fx: f64,
    rel_step: f64,
) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let fp = value(&probe);
        probe[i] = x[i] - h;
        let fm = value(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}
