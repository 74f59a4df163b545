//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Run with
//! `cargo test -p ssm --test acceptance -- --nocapture` to see the details.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ssm::examples::{self, GAP};
use ssm_core::{
    estimate, fit, forecast, linear_trend, local_level, run_filter, run_smoother, run_sqrt_filter,
    simulate, structural, Component, DesignMatrix, FilterConfig, FilterOutput, FittedStateSpace,
    NoiseCovariances, ObservationSeries, OptimizerConfig, StateSpaceModel, StructuralSpec,
};
use support::instances::{random_case, Limits, ORACLE};
use support::oracle::Joint;
use support::{mat_diff, min_eig, vec_diff};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn quiet() -> OptimizerConfig {
    OptimizerConfig {
        verbosity: 0,
        ..OptimizerConfig::default()
    }
}

fn scalar(x: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, x)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn filter_error(out: &FilterOutput, joint: &Joint) -> f64 {
    let n = out.n();
    let mut err = 0.0_f64;
    for t in 0..=n {
        let pred = joint.predictive(t);
        err = err.max(vec_diff(&out.a[t], &pred.mean)).max(mat_diff(&out.p[t], &pred.cov));
    }
    for t in 0..n {
        let filt = joint.filtered(t);
        err = err.max(vec_diff(&out.att[t], &filt.mean)).max(mat_diff(&out.ptt[t], &filt.cov));
        let (cols, innov) = joint.innovation(t);
        for (k, &j) in cols.iter().enumerate() {
            err = err.max((out.v[t][j] - innov.mean[k]).abs());
            for (l, &i) in cols.iter().enumerate() {
                err = err.max((out.f[t][(j, i)] - innov.cov[(k, l)]).abs());
            }
        }
    }
    err
}

fn oracle_filter() -> Check {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for seed in 0..25 {
        let case = random_case(seed, &ORACLE);
        let out = run_filter(&case.model, &case.cov, &case.config).map_err(|e| e.to_string())?;
        worst = worst.max(filter_error(&out, &Joint::new(&case.instance)));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-9 && secs < 5.0,
        format!("max abs error {worst:.2e} (tol 1e-9), {secs:.3} s (limit 5 s)"),
    )
}

fn oracle_smoother() -> Check {
    let (mut smooth_err, mut ll_err) = (0.0_f64, 0.0_f64);
    for seed in 0..25 {
        let case = random_case(seed, &ORACLE);
        let joint = Joint::new(&case.instance);
        let out = run_filter(&case.model, &case.cov, &case.config).map_err(|e| e.to_string())?;
        let sm = run_smoother(&case.model, &out).map_err(|e| e.to_string())?;
        for t in 0..out.n() {
            let s = joint.smoothed(t);
            smooth_err = smooth_err.max(vec_diff(&sm.alpha[t], &s.mean)).max(mat_diff(&sm.v[t], &s.cov));
        }
        ll_err = ll_err.max((out.loglik - joint.log_likelihood()).abs());
    }
    ensure(
        smooth_err < 1e-9 && ll_err < 1e-9,
        format!("smoother max abs error {smooth_err:.2e}, log-likelihood error {ll_err:.2e} (tol 1e-9)"),
    )
}

const AGREEMENT: Limits = Limits {
    max_p: 3,
    max_m: 3,
    min_n: 10,
    max_n: 50,
    missing_prob: 0.1,
};

fn output_gap(a: &FilterOutput, b: &FilterOutput) -> f64 {
    let mut err = (a.loglik - b.loglik).abs();
    for t in 0..a.a.len() {
        err = err.max(vec_diff(&a.a[t], &b.a[t])).max(mat_diff(&a.p[t], &b.p[t]));
    }
    for t in 0..a.att.len() {
        err = err.max(vec_diff(&a.att[t], &b.att[t])).max(mat_diff(&a.ptt[t], &b.ptt[t]));
        for j in 0..a.v[t].len() {
            if !a.v[t][j].is_nan() {
                err = err.max((a.v[t][j] - b.v[t][j]).abs());
            }
        }
    }
    err
}

/// Three-state model whose prior covariance has condition number 1e12, with
/// nearly noiseless observations.
fn stress_instance() -> (StateSpaceModel, NoiseCovariances, FilterConfig, f64) {
    let n = 120;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<f64> = (0..n).map(|i| 1e3 * (i as f64 * 0.37).sin() + rng.sample::<f64, _>(StandardNormal)).collect();
    let z = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
    let t = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
    let model = StateSpaceModel::new(
        ObservationSeries::univariate(&y).unwrap(),
        DesignMatrix::Constant(z),
        t,
        DMatrix::identity(3, 3),
    )
    .unwrap();
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12, 1e-6]));
    let cov = NoiseCovariances::new(scalar(1e-8), q).unwrap();
    let rot = DMatrix::from_fn(3, 3, |i, j| ((i * 3 + j) as f64 * 0.7 + 0.3).cos())
        .qr()
        .q();
    let p1 = &rot * DMatrix::from_diagonal(&DVector::from_vec(vec![1e6, 1.0, 1e-6])) * rot.transpose();
    let p1 = (&p1 + p1.transpose()) * 0.5;
    let ev = p1.clone().symmetric_eigen().eigenvalues;
    let cond = ev.max() / ev.min();
    let config = FilterConfig::default().with_prior(DVector::zeros(3), p1);
    (model, cov, config, cond)
}

fn variant_agreement() -> Check {
    let mut worst = 0.0_f64;
    for seed in 1000..1025 {
        let case = random_case(seed, &AGREEMENT);
        let a = run_filter(&case.model, &case.cov, &case.config).map_err(|e| e.to_string())?;
        let b = run_sqrt_filter(&case.model, &case.cov, &case.config).map_err(|e| e.to_string())?;
        worst = worst.max(output_gap(&a, &b));
    }
    let (model, cov, config, cond) = stress_instance();
    let sq = run_sqrt_filter(&model, &cov, &config).map_err(|e| e.to_string())?;
    let min_sqrt = sq.p.iter().chain(&sq.ptt).map(min_eig).fold(f64::INFINITY, f64::min);
    let min_std = match run_filter(&model, &cov, &config) {
        Ok(st) => format!("{:.2e}", st.p.iter().chain(&st.ptt).map(min_eig).fold(f64::INFINITY, f64::min)),
        Err(e) => format!("error ({e})"),
    };
    ensure(
        worst < 1e-6 && min_sqrt >= -1e-10,
        format!(
            "max variant gap {worst:.2e} (tol 1e-6); stress cond(P1) {cond:.1e}: sqrt min eigenvalue {min_sqrt:.2e}, standard {min_std}"
        ),
    )
}

fn missing_data() -> Check {
    let y = examples::linear_trend_gap(0);
    let model = linear_trend(ObservationSeries::new(y).unwrap()).unwrap();
    let fitted = fit(model, &FilterConfig::default(), &quiet()).map_err(|e| e.to_string())?;
    let mut exact = true;
    let mut worst_z = 0.0_f64;
    for t in GAP {
        exact &= fitted.filter.att[t] == fitted.filter.a[t] && fitted.filter.ptt[t] == fitted.filter.p[t];
        let truth = 1.0 + 0.25 * t as f64;
        let level = fitted.smoother.alpha[t][0];
        let sd = fitted.smoother.v[t][(0, 0)].sqrt();
        worst_z = worst_z.max((level - truth).abs() / sd);
    }
    ensure(
        exact && worst_z < 3.0,
        format!("filtered == predictive at gap: {exact}; max |level - (1+0.25t)| / sd = {worst_z:.2} (limit 3)"),
    )
}

fn simulate_local_level(n: usize, var_eps: f64, var_xi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            let x: f64 = rng.sample(StandardNormal);
            let y = level + var_eps.sqrt() * e;
            level += var_xi.sqrt() * x;
            y
        })
        .collect()
}

fn parameter_recovery() -> Check {
    let y = simulate_local_level(2000, 2.0, 0.5, 42);
    let model = local_level(ObservationSeries::univariate(&y).unwrap()).unwrap();
    let start = Instant::now();
    let est = estimate(&model, &quiet(), &FilterConfig::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let h = est.covariances.h()[(0, 0)];
    let q = est.covariances.q()[(0, 0)];
    let (eh, eq) = ((h - 2.0).abs() / 2.0, (q - 0.5).abs() / 0.5);
    ensure(
        eh < 0.2 && eq < 0.2 && secs < 60.0 && est.trace.len() == 4,
        format!(
            "H {h:.4} ({:.1}%), Q {q:.4} ({:.1}%), limit 20%; {secs:.2} s with 3 seeds",
            100.0 * eh,
            100.0 * eq
        ),
    )
}

fn degenerate_seed() -> Check {
    let model = local_level(ObservationSeries::univariate(&[3.5; 60]).unwrap()).unwrap();
    let est = estimate(&model, &quiet(), &FilterConfig::default()).map_err(|e| e.to_string())?;
    let seed0 = est.trace[0].loglik;
    let (h, q) = (est.covariances.h()[(0, 0)], est.covariances.q()[(0, 0)]);
    ensure(
        seed0.is_finite() && h < 1e-4 && q < 1e-4,
        format!("seed 0 log-likelihood {seed0:.4}; H {h:.2e}, Q {q:.2e} (limit 1e-4)"),
    )
}

fn forecast_identity() -> Check {
    let horizon = 24;
    let c = examples::consumption(3, 96, horizon).map_err(|e| e.to_string())?;
    let spec = StructuralSpec::with_exogenous(12, c.temperature.clone());
    let model = structural(ObservationSeries::new(c.y.clone()).unwrap(), &spec).unwrap();
    let d = model.dims();
    let cov = NoiseCovariances::new(scalar(1.0), DMatrix::identity(3, 3) * 0.05).unwrap();
    let fitted = FittedStateSpace::from_covariances(model, cov.clone(), FilterConfig::default())
        .map_err(|e| e.to_string())?;
    let fc = forecast(&fitted, horizon).map_err(|e| e.to_string())?;

    let mut y_ext = DMatrix::from_element(d.n + horizon, 1, f64::NAN);
    y_ext.view_mut((0, 0), (d.n, 1)).copy_from(&c.y);
    let ext = structural(ObservationSeries::new(y_ext).unwrap(), &spec).unwrap();
    let out = run_filter(&ext, &cov, &FilterConfig::default()).map_err(|e| e.to_string())?;
    let mut equal = true;
    for h in 0..horizon {
        let t = d.n + h;
        let z = ext.z_at(t).unwrap();
        equal &= fc.mean[(h, 0)] == (z * &out.a[t])[0];
        equal &= fc.covariance[h] == z * &out.p[t] * z.transpose() + cov.h();
    }
    ensure(
        equal,
        format!("{horizon}-step structural forecast with regressor equals refiltered predictive mean and covariance bit for bit: {equal}"),
    )
}

fn simulation_consistency() -> Check {
    let y = simulate_local_level(300, 0.8, 0.3, 17);
    let model = local_level(ObservationSeries::univariate(&y).unwrap()).unwrap();
    let fitted = fit(model, &FilterConfig::default(), &quiet()).map_err(|e| e.to_string())?;
    let (horizon, s) = (12, 10_000);
    let fc = forecast(&fitted, horizon).map_err(|e| e.to_string())?;
    let sims = simulate(&fitted, horizon, s, 99).map_err(|e| e.to_string())?;
    let mean = sims.mean();
    let mut worst = 0.0_f64;
    for h in 0..horizon {
        let bound = 4.0 * fc.std(h, 0) / (s as f64).sqrt();
        worst = worst.max((mean[(h, 0)] - fc.mean[(h, 0)]).abs() / bound);
    }

    let mut degenerate = fitted.clone();
    let n = degenerate.model.dims().n;
    degenerate.covariances = NoiseCovariances::new(scalar(0.0), scalar(0.0)).unwrap();
    degenerate.filter.p[n] = scalar(0.0);
    let flat = simulate(&degenerate, horizon, s, 5).map_err(|e| e.to_string())?;
    let identical = (0..horizon).all(|h| (1..s).all(|k| flat.get(h, k, 0) == flat.get(h, 0, 0)));
    ensure(
        worst <= 1.0 && identical,
        format!("max |scenario mean - forecast| = {worst:.3} of the 4 sd/sqrt(S) bound; zero-noise scenarios identical: {identical}"),
    )
}

fn lag_autocorrelation(x: &[f64], lag: usize) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = (lag..x.len()).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
    num / denom
}

fn airline() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/airpassengers.csv");
    let table = ssm::load_csv(&path).map_err(|e| e.to_string())?;
    let logy = table.values.map(f64::ln);
    let (lo, hi) = (logy.min(), logy.max());
    let model = structural(ObservationSeries::new(logy).unwrap(), &StructuralSpec::new(12)).unwrap();
    let fitted = fit(model, &FilterConfig::default(), &quiet()).map_err(|e| e.to_string())?;
    let best = fitted
        .trace
        .iter()
        .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
        .unwrap();
    let seasonal = fitted.components(Component::Seasonal).map_err(|e| e.to_string())?;
    let acf = lag_autocorrelation(seasonal.mean.as_slice(), 12);
    let fc = forecast(&fitted, 24).map_err(|e| e.to_string())?;
    let inside = fc.mean.iter().all(|m| *m >= lo - 0.2 && *m <= hi + 0.2);
    ensure(
        best.converged && fitted.loglik.is_finite() && acf > 0.8 && inside,
        format!(
            "loglik {:.4}, best seed converged: {}; seasonal lag-12 autocorrelation {acf:.3} (> 0.8); 24-month forecasts span [{:.3}, {:.3}] within limits [{:.3}, {:.3}]: {inside}",
            fitted.loglik,
            best.converged,
            fc.mean.min(),
            fc.mean.max(),
            lo - 0.2,
            hi + 0.2
        ),
    )
}

fn vehicle_tracking() -> Check {
    let v = examples::vehicle_tracking(1, 400, 0.1, 1.0);
    let model = StateSpaceModel::new(
        ObservationSeries::new(v.y.clone()).unwrap(),
        DesignMatrix::Constant(v.z.clone()),
        v.t.clone(),
        v.r.clone(),
    )
    .unwrap();
    let fitted = fit(model, &FilterConfig::default(), &quiet()).map_err(|e| e.to_string())?;
    let (h, q) = (fitted.covariances.h(), fitted.covariances.q());
    let rel = [
        (h[(0, 0)] - 2.0).abs() / 2.0,
        (h[(1, 1)] - 2.0).abs() / 2.0,
        (q[(0, 0)] - 0.5).abs() / 0.5,
        (q[(1, 1)] - 0.5).abs() / 0.5,
    ];
    let worst = rel.iter().copied().fold(0.0, f64::max);
    let n = v.y.nrows();
    let (mut se_smooth, mut se_meas) = (0.0, 0.0);
    for t in 0..n {
        for (obs, state) in [(0, 0), (1, 2)] {
            let truth = v.states[(t, state)];
            se_smooth += (fitted.smoother.alpha[t][state] - truth).powi(2);
            se_meas += (v.y[(t, obs)] - truth).powi(2);
        }
    }
    let rmse_smooth = (se_smooth / (2 * n) as f64).sqrt();
    let rmse_meas = (se_meas / (2 * n) as f64).sqrt();
    ensure(
        worst < 0.3 && rmse_smooth < rmse_meas,
        format!(
            "H diag ({:.3}, {:.3}), Q diag ({:.3}, {:.3}), worst relative error {:.1}% (limit 30%); position RMSE smoothed {rmse_smooth:.3} vs measured {rmse_meas:.3}",
            h[(0, 0)],
            h[(1, 1)],
            q[(0, 0)],
            q[(1, 1)],
            100.0 * worst
        ),
    )
}

fn ssm_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ssm"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("ssm {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn collect_files(dir: &Path, base: &Path, acc: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, base, acc);
        } else {
            acc.push(path.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

fn cli_session(dir: &Path) -> std::result::Result<(), String> {
    let steps: &[&[&str]] = &[
        &["generate-example", "consumption", "--rng-seed", "4", "--n", "96", "--out", "data"],
        &["generate-example", "linear_trend_gap", "--rng-seed", "4", "--out", "data"],
        &["generate-example", "vehicle_tracking", "--rng-seed", "4", "--n", "150", "--out", "data"],
        &[
            "fit", "--input", "data/consumption.csv", "--model", "structural", "--s", "12", "--exog",
            "data/temperature.csv", "--seeds", "2", "--rng-seed", "8", "--verbosity", "0", "--out", "fit",
        ],
        &["forecast", "--artifact", "fit/model.json", "--N", "24", "--out", "forecast"],
        &[
            "simulate", "--artifact", "fit/model.json", "--N", "24", "--S", "300", "--quantiles",
            "0.05,0.5,0.95", "--rng-seed", "3", "--out", "simulate",
        ],
        &["components", "--artifact", "fit/model.json", "--out", "components"],
        &[
            "simulate", "--input", "data/linear_trend_gap.csv", "--model", "linear-trend", "--filter",
            "sqrt", "--N", "10", "--S", "50", "--verbosity", "0", "--out", "trend",
        ],
        &[
            "fit", "--input", "data/vehicle_tracking.csv", "--model", "user", "--matrices",
            "data/vehicle_tracking_matrices.json", "--seeds", "1", "--verbosity", "0", "--out", "vehicle",
        ],
    ];
    for args in steps {
        ssm_cli(dir, args)?;
    }
    Ok(())
}

fn determinism() -> Check {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for r in &runs {
        cli_session(r.path())?;
    }
    let mut files = Vec::new();
    collect_files(runs[0].path(), runs[0].path(), &mut files);
    files.sort();
    let mut other = Vec::new();
    collect_files(runs[1].path(), runs[1].path(), &mut other);
    other.sort();
    if files != other {
        return Err(format!("file sets differ: {files:?} vs {other:?}"));
    }
    let differing: Vec<_> = files
        .iter()
        .filter(|f| std::fs::read(runs[0].path().join(f)).unwrap() != std::fs::read(runs[1].path().join(f)).unwrap())
        .collect();
    ensure(
        differing.is_empty() && files.len() >= 10,
        format!("{} output files from 9 seeded commands compared byte for byte; differing: {differing:?}", files.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 11] = [
        ("filter matches joint-Gaussian conditioning", oracle_filter),
        ("smoother and log-likelihood match conditioning", oracle_smoother),
        ("standard and square-root filters agree", variant_agreement),
        ("missing-data contract on linear_trend_gap", missing_data),
        ("local-level parameter recovery", parameter_recovery),
        ("degenerate seed on a constant series", degenerate_seed),
        ("forecast equals refiltering with missing rows", forecast_identity),
        ("simulation consistency", simulation_consistency),
        ("airline structural workflow", airline),
        ("vehicle tracking", vehicle_tracking),
        ("CLI determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        // Written to the process stdout directly so the summary is visible
        // without --nocapture.
        writeln!(stdout, "acceptance {:>2} {status}: {name}: {detail}", i + 1).unwrap();
        if result.is_err() {
            failed.push(i + 1);
        }
    }
    stdout.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
