//! Random model instances for the oracle and variant-agreement tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ssm_core::{DesignMatrix, FilterConfig, NoiseCovariances, ObservationSeries, StateSpaceModel};

use super::oracle::Instance;

pub struct Case {
    pub instance: Instance,
    pub model: StateSpaceModel,
    pub cov: NoiseCovariances,
    pub config: FilterConfig,
}

fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let a = normal(rng, n, n, 0.7);
    &a * a.transpose() + DMatrix::identity(n, n) * floor
}

pub struct Limits {
    pub max_p: usize,
    pub max_m: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub missing_prob: f64,
}

pub const ORACLE: Limits = Limits {
    max_p: 3,
    max_m: 3,
    min_n: 2,
    max_n: 8,
    missing_prob: 0.15,
};

/// Random instance with a finite prior.
pub fn random_case(seed: u64, limits: &Limits) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(1..=limits.max_p);
    let m = rng.random_range(1..=limits.max_m);
    let r = rng.random_range(1..=m);
    let n = rng.random_range(limits.min_n..=limits.max_n);
    let time_varying = rng.random_bool(0.5);

    // Keep the transition stable so long instances stay well conditioned.
    let mut t = normal(&mut rng, m, m, 0.4);
    let radius = t.clone().complex_eigenvalues().iter().map(|c| c.re.hypot(c.im)).fold(0.0, f64::max);
    if radius > 0.95 {
        t *= 0.95 / radius;
    }
    let r_mat = normal(&mut rng, m, r, 1.0);
    let h = spd(&mut rng, p, 0.3);
    let q = spd(&mut rng, r, 0.2);
    let a1 = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let p1 = spd(&mut rng, m, 0.5);
    let z_const = normal(&mut rng, p, m, 1.0);
    let z: Vec<DMatrix<f64>> = (0..n)
        .map(|_| {
            if time_varying {
                normal(&mut rng, p, m, 1.0)
            } else {
                z_const.clone()
            }
        })
        .collect();
    let mut y = normal(&mut rng, n, p, 2.0);
    for i in 0..n {
        for j in 0..p {
            if rng.random_bool(limits.missing_prob) {
                y[(i, j)] = f64::NAN;
            }
        }
    }
    if n > 3 && rng.random_bool(0.3) {
        let row = rng.random_range(1..n - 1);
        for j in 0..p {
            y[(row, j)] = f64::NAN;
        }
    }
    let design = if time_varying {
        DesignMatrix::TimeVarying(z.clone())
    } else {
        DesignMatrix::Constant(z_const)
    };
    let model = StateSpaceModel::new(
        ObservationSeries::new(y.clone()).unwrap(),
        design,
        t.clone(),
        r_mat.clone(),
    )
    .unwrap();
    let cov = NoiseCovariances::new(h.clone(), q.clone()).unwrap();
    let config = FilterConfig::default().with_prior(a1.clone(), p1.clone());
    Case {
        instance: Instance {
            z,
            t,
            r: r_mat,
            h,
            q,
            a1,
            p1,
            y,
        },
        model,
        cov,
        config,
    }
}
