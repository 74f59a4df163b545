use nalgebra::DMatrix;
use ssm_core::{
    local_level, smoothed_components, structural, Component, Error, FilterConfig,
    FittedStateSpace, NoiseCovariances, ObservationSeries, StructuralSpec,
};

fn seasonal_series(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| 5.0 + 0.02 * t as f64 + (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())
        .collect()
}

fn fitted(model: ssm_core::StateSpaceModel) -> FittedStateSpace {
    let d = model.dims();
    let cov = NoiseCovariances::new(
        DMatrix::from_element(1, 1, 0.01),
        DMatrix::identity(d.r, d.r) * 1e-4,
    )
    .unwrap();
    FittedStateSpace::from_covariances(model, cov, FilterConfig::default()).unwrap()
}

#[test]
fn structural_components_select_state_dimensions() {
    let y = ObservationSeries::univariate(&seasonal_series(72)).unwrap();
    let f = fitted(structural(y, &StructuralSpec::new(12)).unwrap());
    let level = smoothed_components(&f, Component::Level).unwrap();
    let seasonal = smoothed_components(&f, Component::Seasonal).unwrap();
    for t in 0..72 {
        assert_eq!(level.mean[(t, 0)], f.smoother.alpha[t][0]);
        assert_eq!(seasonal.mean[(t, 0)], f.smoother.alpha[t][2]);
        assert_eq!(seasonal.variance[(t, 0)], f.smoother.v[t][(2, 2)]);
    }
    assert!(matches!(
        smoothed_components(&f, Component::Regression),
        Err(Error::MissingComponent { component: "regression", .. })
    ));
}

#[test]
fn local_level_has_no_slope() {
    let y = ObservationSeries::univariate(&seasonal_series(20)).unwrap();
    let f = fitted(local_level(y).unwrap());
    assert!(f.components(Component::Level).is_ok());
    assert_eq!(
        f.components(Component::Slope).unwrap_err(),
        Error::MissingComponent { component: "slope", kind: "local_level" }
    );
}

#[test]
fn regression_effect_is_coefficient_times_regressor() {
    let n = 48;
    let x = DMatrix::from_fn(n, 1, |t, _| (t as f64 * 0.4).cos() * 3.0);
    let y: Vec<f64> = seasonal_series(n)
        .iter()
        .enumerate()
        .map(|(t, v)| v + 1.5 * x[(t, 0)])
        .collect();
    let model = structural(
        ObservationSeries::univariate(&y).unwrap(),
        &StructuralSpec::with_exogenous(12, x.clone()),
    )
    .unwrap();
    let f = fitted(model);
    let reg = f.components(Component::Regression).unwrap();
    for t in 0..n {
        let theta = f.smoother.alpha[t][0];
        assert!((reg.mean[(t, 0)] - theta * x[(t, 0)]).abs() < 1e-12);
        assert!((reg.variance[(t, 0)] - x[(t, 0)].powi(2) * f.smoother.v[t][(0, 0)]).abs() < 1e-12);
    }
    // Level moves to the slot after the coefficient.
    let level = f.components(Component::Level).unwrap();
    assert_eq!(level.mean[(5, 0)], f.smoother.alpha[5][1]);
}
