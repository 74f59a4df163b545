//! Synthetic example data sets.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ssm_core::builders::StructuralLayout;
use ssm_core::linalg::kron_identity;
use ssm_core::{structural, ObservationSeries, StructuralSpec};

use crate::error::{Error, Result};
use crate::matrices::{matrix_to_nested, DesignJson, MatricesFile};
use crate::table::write_table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleName {
    LinearTrendGap,
    VehicleTracking,
    Consumption,
}

impl std::str::FromStr for ExampleName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_trend_gap" => Ok(ExampleName::LinearTrendGap),
            "vehicle_tracking" => Ok(ExampleName::VehicleTracking),
            "consumption" => Ok(ExampleName::Consumption),
            _ => Err(Error::UnknownExample(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleOptions {
    pub rng_seed: u64,
    /// Sample length; `None` uses the example's default.
    pub n: Option<usize>,
    /// Months of temperature beyond the sample (consumption only).
    pub horizon: usize,
    pub rho: f64,
    pub delta: f64,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            n: None,
            horizon: 24,
            rho: 0.1,
            delta: 1.0,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normals(rng: &mut ChaCha8Rng, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |_, _| normal(rng))
}

pub const GAP_LEN: usize = 77;
/// 0-based rows removed from the trend series.
pub const GAP: std::ops::RangeInclusive<usize> = 9..=19;

/// `1 + 0.25 t` plus N(0, 0.5²) noise for `t = 0..77`, rows 9 to 19 missing.
pub fn linear_trend_gap(rng_seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    DMatrix::from_fn(GAP_LEN, 1, |t, _| {
        let y = 1.0 + 0.25 * t as f64 + 0.5 * normal(&mut rng);
        if GAP.contains(&t) {
            f64::NAN
        } else {
            y
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTracking {
    pub z: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `n × 4`: position and velocity of the first axis, then the second.
    pub states: DMatrix<f64>,
    /// `n × 2` noisy positions.
    pub y: DMatrix<f64>,
}

/// System matrices of the damped-velocity tracking model on two axes.
pub fn vehicle_matrices(rho: f64, delta: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let t1 = DMatrix::from_row_slice(2, 2, &[1.0, (1.0 - rho * delta / 2.0) * delta, 0.0, 1.0 - rho]);
    let r1 = DMatrix::from_row_slice(2, 1, &[delta * delta / 2.0, delta]);
    let z1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    (kron_identity(2, &z1), kron_identity(2, &t1), kron_identity(2, &r1))
}

/// Simulates `n` periods with `H = 2 I`, `Q = 0.5 I`, starting at rest at
/// the origin.
pub fn vehicle_tracking(rng_seed: u64, n: usize, rho: f64, delta: f64) -> VehicleTracking {
    let (z, t, r) = vehicle_matrices(rho, delta);
    let h = DMatrix::identity(2, 2) * 2.0;
    let q = DMatrix::identity(2, 2) * 0.5;
    let (sh, sq) = (2.0_f64.sqrt(), 0.5_f64.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut states = DMatrix::zeros(n, 4);
    let mut y = DMatrix::zeros(n, 2);
    let mut alpha = DVector::zeros(4);
    for i in 0..n {
        let obs = &z * &alpha + normals(&mut rng, 2) * sh;
        states.row_mut(i).copy_from(&alpha.transpose());
        y.row_mut(i).copy_from(&obs.transpose());
        alpha = &t * &alpha + &r * (normals(&mut rng, 2) * sq);
    }
    VehicleTracking {
        z,
        t,
        r,
        h,
        q,
        states,
        y,
    }
}

/// True parameters of the synthetic consumption series.
pub mod consumption_truth {
    pub const PERIOD: usize = 12;
    pub const THETA: f64 = 1.5;
    pub const LEVEL: f64 = 100.0;
    pub const SLOPE: f64 = 0.2;
    pub const SEASONAL_AMPLITUDE: f64 = 6.0;
    pub const VAR_EPSILON: f64 = 1.0;
    pub const VAR_LEVEL: f64 = 0.1;
    pub const VAR_SLOPE: f64 = 1e-4;
    pub const VAR_SEASONAL: f64 = 0.01;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consumption {
    /// `n × 1`.
    pub y: DMatrix<f64>,
    /// `(n + horizon) × 1`.
    pub temperature: DMatrix<f64>,
}

/// Monthly temperature with an annual cycle.
fn temperature(rng: &mut ChaCha8Rng, rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, 1, |t, _| {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / 12.0;
        22.0 + 5.0 * phase.cos() + 1.5 * normal(rng)
    })
}

/// Stand-in for a monthly electricity consumption series: trend, period-12
/// seasonality and a linear temperature effect, simulated from the
/// structural model with the parameters in [`consumption_truth`].
pub fn consumption(rng_seed: u64, n: usize, horizon: usize) -> Result<Consumption> {
    use consumption_truth::*;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let x = temperature(&mut rng, n + horizon);
    let placeholder = ObservationSeries::new(DMatrix::zeros(n, 1))?;
    let model = structural(placeholder, &StructuralSpec::with_exogenous(PERIOD, x.clone()))?;
    let layout = StructuralLayout { s: PERIOD, k: 1 };
    let m = model.dims().m;
    let mut alpha = DVector::zeros(m);
    alpha[0] = THETA;
    alpha[layout.level()] = LEVEL;
    alpha[layout.slope()] = SLOPE;
    for j in 0..PERIOD - 1 {
        let phase = 2.0 * std::f64::consts::PI * j as f64 / PERIOD as f64;
        alpha[layout.seasonal() + j] = SEASONAL_AMPLITUDE * phase.sin();
    }
    let sd_eta = DVector::from_vec(vec![VAR_LEVEL.sqrt(), VAR_SLOPE.sqrt(), VAR_SEASONAL.sqrt()]);
    let mut y = DMatrix::zeros(n, 1);
    for t in 0..n {
        let z = model.z_at(t)?;
        y[(t, 0)] = (z * &alpha)[0] + VAR_EPSILON.sqrt() * normal(&mut rng);
        let eta = normals(&mut rng, 3).component_mul(&sd_eta);
        alpha = model.transition() * &alpha + model.selection() * eta;
    }
    Ok(Consumption { y, temperature: x })
}

fn numbered(n: usize) -> Vec<String> {
    (1..=n).map(|t| t.to_string()).collect()
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Writes the example files into `dir` and returns their paths.
pub fn generate_example(name: ExampleName, options: &ExampleOptions, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match name {
        ExampleName::LinearTrendGap => {
            let y = linear_trend_gap(options.rng_seed);
            let path = dir.join("linear_trend_gap.csv");
            write_table(&path, &names(&["t", "y"]), &numbered(y.nrows()), &y)?;
            written.push(path);
        }
        ExampleName::VehicleTracking => {
            let n = options.n.unwrap_or(400);
            if !(options.delta > 0.0 && options.delta.is_finite() && options.rho.is_finite()) {
                return Err(Error::Config("delta must be positive and rho finite".into()));
            }
            let v = vehicle_tracking(options.rng_seed, n, options.rho, options.delta);
            let path = dir.join("vehicle_tracking.csv");
            write_table(&path, &names(&["t", "y1", "y2"]), &numbered(n), &v.y)?;
            written.push(path);
            let path = dir.join("vehicle_tracking_states.csv");
            write_table(
                &path,
                &names(&["t", "position1", "velocity1", "position2", "velocity2"]),
                &numbered(n),
                &v.states,
            )?;
            written.push(path);
            let matrices = MatricesFile {
                z: DesignJson::Constant(matrix_to_nested(&v.z)),
                t: matrix_to_nested(&v.t),
                r: matrix_to_nested(&v.r),
            };
            let path = dir.join("vehicle_tracking_matrices.json");
            let mut text = serde_json::to_string_pretty(&matrices).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
            text.push('\n');
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        ExampleName::Consumption => {
            let n = options.n.unwrap_or(120);
            let c = consumption(options.rng_seed, n, options.horizon)?;
            let path = dir.join("consumption.csv");
            write_table(&path, &names(&["t", "consumption"]), &numbered(n), &c.y)?;
            written.push(path);
            let path = dir.join("temperature.csv");
            let rows = c.temperature.nrows();
            write_table(&path, &names(&["t", "temperature"]), &numbered(rows), &c.temperature)?;
            written.push(path);
        }
    }
    Ok(written)
}
