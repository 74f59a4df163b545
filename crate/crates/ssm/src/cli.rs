//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use ssm_core::fitted::available_components;
use ssm_core::{
    fit_with, forecast, linear_trend, local_level, scenario_quantiles, simulate, structural,
    FilterConfig, FilterVariant, FittedStateSpace, ModelKind, ObservationSeries, OptimizerConfig,
    RandomSeedsLbfgs, StateSpaceModel, StructuralSpec,
};

use crate::artifact::{spec_for, Artifact, ConfigEcho, SeriesMeta};
use crate::error::{Error, Result};
use crate::examples::{generate_example, ExampleName, ExampleOptions};
use crate::matrices::MatricesFile;
use crate::progress::ConsoleMonitor;
use crate::table::{load_csv, CsvOut, Table};

pub const ARTIFACT_FILE: &str = "model.json";
pub const COMPONENTS_FILE: &str = "components.csv";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const SCENARIOS_FILE: &str = "scenarios.csv";

#[derive(Debug, Parser)]
#[command(name = "ssm", version, about = "Estimate, smooth, forecast and simulate linear Gaussian state-space models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Estimate H and Q; writes model.json and components.csv.
    Fit(FitArgs),
    /// Forecast means and standard deviations; writes forecast.csv.
    Forecast {
        #[command(flatten)]
        source: SourceArgs,
        /// Forecast horizon.
        #[arg(long = "N")]
        horizon: usize,
    },
    /// Monte Carlo scenarios and quantiles; writes scenarios.csv.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long = "N")]
        horizon: usize,
        /// Number of scenarios.
        #[arg(long = "S")]
        scenarios: usize,
        /// Comma-separated probabilities.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.95")]
        quantiles: Vec<f64>,
    },
    /// Smoothed components of a fitted model; writes components.csv.
    Components {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic data set.
    GenerateExample {
        /// linear_trend_gap, vehicle_tracking or consumption.
        name: String,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Sample length (vehicle_tracking and consumption).
        #[arg(long)]
        n: Option<usize>,
        /// Months of temperature past the sample (consumption).
        #[arg(long = "N", default_value_t = 24)]
        horizon: usize,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    LocalLevel,
    LinearTrend,
    Structural,
    /// System matrices from --matrices.
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterChoice {
    Standard,
    Sqrt,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Data CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "local-level")]
    pub model: ModelChoice,
    /// Seasonal period (structural model).
    #[arg(long)]
    pub s: Option<usize>,
    /// Exogenous regressors CSV (structural model); rows past the sample are
    /// used for forecasting.
    #[arg(long)]
    pub exog: Option<PathBuf>,
    /// Z, T and R as JSON (user model).
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    /// Take the natural log of the data.
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value = "standard")]
    pub filter: FilterChoice,
    /// Random starts in addition to seed 0.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// 0 silent, 1 progress table, 2 optimizer iterations.
    #[arg(long, default_value_t = 1)]
    pub verbosity: u8,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// A fitted model from an artifact, or data to fit first.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// model.json written by `fit`.
    #[arg(long, conflicts_with_all = ["input", "exog", "matrices", "log"])]
    pub artifact: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "local-level")]
    pub model: ModelChoice,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub exog: Option<PathBuf>,
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value = "standard")]
    pub filter: FilterChoice,
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    /// Seeds both the optimizer starts and the scenario draws.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub verbosity: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Forecast,
    Simulate,
    Components,
    GenerateExample(ExampleName),
}

/// Fully specified run. Built from the command line or directly.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub exog: Option<PathBuf>,
    pub matrices: Option<PathBuf>,
    pub artifact: Option<PathBuf>,
    pub model: ModelChoice,
    pub s: Option<usize>,
    pub log: bool,
    pub filter: FilterVariant,
    pub seeds: usize,
    pub rng_seed: u64,
    pub horizon: Option<usize>,
    pub scenarios: Option<usize>,
    pub quantiles: Vec<f64>,
    pub verbosity: u8,
    pub out: PathBuf,
    pub example: ExampleOptions,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: None,
            exog: None,
            matrices: None,
            artifact: None,
            model: ModelChoice::LocalLevel,
            s: None,
            log: false,
            filter: FilterVariant::Standard,
            seeds: 3,
            rng_seed: 0,
            horizon: None,
            scenarios: None,
            quantiles: vec![0.05, 0.95],
            verbosity: 1,
            out: out.into(),
            example: ExampleOptions::default(),
        }
    }

    fn from_fit(command: Command, a: FitArgs) -> Self {
        Self {
            input: Some(a.input),
            exog: a.exog,
            matrices: a.matrices,
            model: a.model,
            s: a.s,
            log: a.log,
            filter: filter_variant(a.filter),
            seeds: a.seeds,
            rng_seed: a.rng_seed,
            verbosity: a.verbosity,
            ..Self::new(command, a.out)
        }
    }

    fn from_source(command: Command, a: SourceArgs) -> Self {
        Self {
            input: a.input,
            artifact: a.artifact,
            exog: a.exog,
            matrices: a.matrices,
            model: a.model,
            s: a.s,
            log: a.log,
            filter: filter_variant(a.filter),
            seeds: a.seeds,
            rng_seed: a.rng_seed,
            verbosity: a.verbosity,
            ..Self::new(command, a.out)
        }
    }

    /// Checks the command-specific requirements.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        let fits = match self.command {
            Command::Fit => true,
            Command::Forecast | Command::Simulate => self.artifact.is_none(),
            Command::Components => {
                if self.artifact.is_none() {
                    return bad("components requires --artifact");
                }
                false
            }
            Command::GenerateExample(_) => {
                if !(self.example.delta > 0.0 && self.example.rho.is_finite()) {
                    return bad("--delta must be positive and --rho finite");
                }
                return Ok(());
            }
        };
        if fits {
            if self.input.is_none() {
                return bad("--input (or --artifact) is required");
            }
            match self.model {
                ModelChoice::Structural => match self.s {
                    Some(s) if s >= 2 => {}
                    Some(_) => return bad("--s must be at least 2"),
                    None => return bad("--model structural requires --s"),
                },
                ModelChoice::User if self.matrices.is_none() => {
                    return bad("--model user requires --matrices")
                }
                _ => {}
            }
            if self.exog.is_some() && self.model != ModelChoice::Structural {
                return bad("--exog is only supported with --model structural");
            }
            if self.matrices.is_some() && self.model != ModelChoice::User {
                return bad("--matrices is only used with --model user");
            }
            if self.seeds == 0 {
                return bad("--seeds must be at least 1");
            }
            if self.verbosity > 2 {
                return bad("--verbosity must be 0, 1 or 2");
            }
        }
        match self.command {
            Command::Forecast | Command::Simulate => match self.horizon {
                Some(h) if h >= 1 => {}
                _ => return bad("--N must be at least 1"),
            },
            _ => {}
        }
        if self.command == Command::Simulate {
            match self.scenarios {
                Some(s) if s >= 1 => {}
                _ => return bad("--S must be at least 1"),
            }
            if self.quantiles.is_empty() {
                return bad("--quantiles needs at least one probability");
            }
            if self.quantiles.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                return bad("--quantiles must lie strictly between 0 and 1");
            }
        }
        Ok(())
    }
}

fn filter_variant(f: FilterChoice) -> FilterVariant {
    match f {
        FilterChoice::Standard => FilterVariant::Standard,
        FilterChoice::Sqrt => FilterVariant::SquareRoot,
    }
}

fn model_name(m: ModelChoice) -> &'static str {
    match m {
        ModelChoice::LocalLevel => "local_level",
        ModelChoice::LinearTrend => "linear_trend",
        ModelChoice::Structural => "structural",
        ModelChoice::User => "user",
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = Error;
    fn try_from(cli: Cli) -> Result<Self> {
        let config = match cli.command {
            CliCommand::Fit(a) => RunConfig::from_fit(Command::Fit, a),
            CliCommand::Forecast { source, horizon } => RunConfig {
                horizon: Some(horizon),
                ..RunConfig::from_source(Command::Forecast, source)
            },
            CliCommand::Simulate {
                source,
                horizon,
                scenarios,
                quantiles,
            } => RunConfig {
                horizon: Some(horizon),
                scenarios: Some(scenarios),
                quantiles,
                ..RunConfig::from_source(Command::Simulate, source)
            },
            CliCommand::Components { artifact, out } => RunConfig {
                artifact: Some(artifact),
                ..RunConfig::new(Command::Components, out)
            },
            CliCommand::GenerateExample {
                name,
                rng_seed,
                n,
                horizon,
                rho,
                delta,
                out,
            } => RunConfig {
                example: ExampleOptions {
                    rng_seed,
                    n,
                    horizon,
                    rho,
                    delta,
                },
                ..RunConfig::new(Command::GenerateExample(name.parse()?), out)
            },
        };
        config.validate()?;
        Ok(config)
    }
}

fn load_data(config: &RunConfig) -> Result<Table> {
    let path = config.input.as_deref().expect("validated");
    let mut table = load_csv(path)?;
    if config.log {
        if let Some(v) = table.values.iter().find(|v| **v <= 0.0) {
            return Err(Error::Config(format!(
                "--log needs positive data, found {v} in {}",
                path.display()
            )));
        }
        table.values.apply(|v| *v = v.ln());
    }
    Ok(table)
}

fn build_model(config: &RunConfig, y: ObservationSeries) -> Result<(StateSpaceModel, Option<DMatrix<f64>>)> {
    Ok(match config.model {
        ModelChoice::LocalLevel => (local_level(y)?, None),
        ModelChoice::LinearTrend => (linear_trend(y)?, None),
        ModelChoice::Structural => {
            let s = config.s.expect("validated");
            match &config.exog {
                None => (structural(y, &StructuralSpec::new(s))?, None),
                Some(path) => {
                    let x = load_csv(path)?.values;
                    let model = structural(y, &StructuralSpec::with_exogenous(s, x.clone()))?;
                    (model, Some(x))
                }
            }
        }
        ModelChoice::User => {
            let path = config.matrices.as_deref().expect("validated");
            (MatricesFile::load(path)?.build(y, path)?, None)
        }
    })
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn estimate(config: &RunConfig, progress: &mut dyn Write) -> Result<(FittedStateSpace, Artifact)> {
    let table = load_data(config)?;
    let (model, exog) = build_model(config, table.series()?)?;
    let filter_config = FilterConfig::with_variant(config.filter);
    let optimizer = RandomSeedsLbfgs::new(OptimizerConfig {
        n_seeds: config.seeds,
        rng_seed: config.rng_seed,
        verbosity: config.verbosity,
        ..OptimizerConfig::default()
    });
    let mut monitor = ConsoleMonitor::new(progress, config.verbosity);
    let spec = spec_for(&model, exog.as_ref());
    let fitted = fit_with(model, &config.filter, &filter_config, &optimizer, &mut monitor)?;
    let meta = SeriesMeta {
        variables: table.names.clone(),
        label_name: table.label_name.clone(),
        labels: table.labels.clone(),
    };
    let echo = ConfigEcho {
        input: path_string(&config.input).unwrap_or_default(),
        exog: path_string(&config.exog),
        matrices: path_string(&config.matrices),
        model: model_name(config.model).to_string(),
        s: config.s,
        log: config.log,
        filter: config.filter.name().to_string(),
        seeds: config.seeds,
        rng_seed: config.rng_seed,
    };
    let artifact = Artifact::new(&fitted, spec, &meta, echo);
    Ok((fitted, artifact))
}

fn fitted_source(config: &RunConfig, progress: &mut dyn Write) -> Result<(FittedStateSpace, SeriesMeta)> {
    match &config.artifact {
        Some(path) => {
            let artifact = Artifact::load(path)?;
            Ok((artifact.fitted(path)?, artifact.meta()))
        }
        None => {
            let (fitted, artifact) = estimate(config, progress)?;
            Ok((fitted, artifact.meta()))
        }
    }
}

/// Smoothed component table. User-defined models list every state.
pub fn write_components(fitted: &FittedStateSpace, meta: &SeriesMeta, path: &Path) -> Result<()> {
    let n = fitted.model.dims().n;
    let mut header = vec![meta.label_header()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if fitted.model.kind() == ModelKind::UserDefined {
        let m = fitted.model.dims().m;
        for i in 0..m {
            header.push(format!("state{}", i + 1));
            header.push(format!("state{}_var", i + 1));
            columns.push((0..n).map(|t| fitted.smoother.alpha[t][i]).collect());
            columns.push((0..n).map(|t| fitted.smoother.v[t][(i, i)]).collect());
        }
    } else {
        let comps = available_components(fitted.model.kind())
            .iter()
            .map(|c| Ok((c.name(), fitted.components(*c)?)))
            .collect::<Result<Vec<_>>>()?;
        for (j, var) in meta.variables.iter().enumerate() {
            for (name, series) in &comps {
                header.push(format!("{var}_{name}"));
                header.push(format!("{var}_{name}_var"));
                columns.push(series.mean.column(j).iter().copied().collect());
                columns.push(series.variance.column(j).iter().copied().collect());
            }
        }
    }
    let mut out = CsvOut::create(path, &header)?;
    for (t, label) in meta.period_labels(n).iter().enumerate() {
        let row: Vec<f64> = columns.iter().map(|c| c[t]).collect();
        out.row(label, &row)?;
    }
    out.finish()
}

pub fn write_forecast(fitted: &FittedStateSpace, meta: &SeriesMeta, horizon: usize, path: &Path) -> Result<()> {
    let fc = forecast(fitted, horizon)?;
    let mut header = vec!["h".to_string()];
    for var in &meta.variables {
        header.push(format!("{var}_mean"));
        header.push(format!("{var}_std"));
    }
    let mut out = CsvOut::create(path, &header)?;
    for h in 0..horizon {
        let row: Vec<f64> = (0..meta.variables.len())
            .flat_map(|j| [fc.mean[(h, j)], fc.std(h, j)])
            .collect();
        out.row(&(h + 1).to_string(), &row)?;
    }
    out.finish()
}

/// Column name of a quantile: 0.05 → `q05`, 0.5 → `q50`, 0.025 → `q025`.
pub fn quantile_name(p: f64) -> String {
    let pct = format!("{:.6}", p * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    let (int, frac) = pct.split_once('.').unwrap_or((pct, ""));
    format!("q{int:0>2}{frac}")
}

pub fn write_scenarios(
    fitted: &FittedStateSpace,
    meta: &SeriesMeta,
    horizon: usize,
    scenarios: usize,
    probs: &[f64],
    rng_seed: u64,
    path: &Path,
) -> Result<()> {
    let set = simulate(fitted, horizon, scenarios, rng_seed)?;
    let quant = scenario_quantiles(&set, probs)?;
    let mean = set.mean();
    let mut header = vec!["h".to_string(), "variable".to_string(), "mean".to_string()];
    header.extend(probs.iter().map(|p| quantile_name(*p)));
    header.extend((1..=scenarios).map(|s| format!("s{s}")));
    let mut out = CsvOut::create(path, &header)?;
    for h in 0..horizon {
        for (j, var) in meta.variables.iter().enumerate() {
            let mut row = vec![var.clone(), crate::table::format_number(mean[(h, j)])];
            row.extend((0..probs.len()).map(|k| crate::table::format_number(quant.get(h, j, k))));
            row.extend((0..scenarios).map(|s| crate::table::format_number(set.get(h, s, j))));
            out.text_row(&(h + 1).to_string(), &row)?;
        }
    }
    out.finish()
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs one command and returns the files it wrote. Progress goes to
/// `progress`.
pub fn run(config: &RunConfig, progress: &mut dyn Write) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let dir = &config.out;
    match config.command {
        Command::GenerateExample(name) => generate_example(name, &config.example, dir),
        Command::Fit => {
            let (fitted, artifact) = estimate(config, progress)?;
            create_out(dir)?;
            let model_path = dir.join(ARTIFACT_FILE);
            artifact.save(&model_path)?;
            let comp_path = dir.join(COMPONENTS_FILE);
            write_components(&fitted, &artifact.meta(), &comp_path)?;
            Ok(vec![model_path, comp_path])
        }
        Command::Components => {
            let path = config.artifact.as_deref().expect("validated");
            let artifact = Artifact::load(path)?;
            let fitted = artifact.fitted(path)?;
            create_out(dir)?;
            let comp_path = dir.join(COMPONENTS_FILE);
            write_components(&fitted, &artifact.meta(), &comp_path)?;
            Ok(vec![comp_path])
        }
        Command::Forecast => {
            let (fitted, meta) = fitted_source(config, progress)?;
            create_out(dir)?;
            let path = dir.join(FORECAST_FILE);
            write_forecast(&fitted, &meta, config.horizon.expect("validated"), &path)?;
            Ok(vec![path])
        }
        Command::Simulate => {
            let (fitted, meta) = fitted_source(config, progress)?;
            create_out(dir)?;
            let path = dir.join(SCENARIOS_FILE);
            write_scenarios(
                &fitted,
                &meta,
                config.horizon.expect("validated"),
                config.scenarios.expect("validated"),
                &config.quantiles,
                config.rng_seed,
                &path,
            )?;
            Ok(vec![path])
        }
    }
}
