use thiserror::Error;

use crate::changepoint::ChangepointError;
use crate::evaluate::EvaluateError;
use crate::features::FeatureError;
use crate::forecast::ForecastError;
use crate::series::SeriesError;
use crate::solvers::SolverError;
use crate::volatility::VolatilityError;

/// Crate-level error; wraps the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Changepoint(#[from] ChangepointError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Volatility(#[from] VolatilityError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Model,
}

fn series_kind(e: &SeriesError) -> ErrorKind {
    match e {
        SeriesError::NotCoarser { .. } | SeriesError::Misaligned { .. } => ErrorKind::Config,
        _ => ErrorKind::Data,
    }
}

fn feature_kind(e: &FeatureError) -> ErrorKind {
    match e {
        FeatureError::PatternUnmatched(_)
        | FeatureError::DuplicateColumnName(_)
        | FeatureError::ChangepointOutOfRange(_)
        | FeatureError::InvalidSpec(_) => ErrorKind::Config,
        FeatureError::UnknownRegressor(_) | FeatureError::ShapeMismatch { .. } => ErrorKind::Data,
    }
}

fn changepoint_kind(e: &ChangepointError) -> ErrorKind {
    match e {
        ChangepointError::Series(s) => series_kind(s),
        ChangepointError::InvalidConfig(_) => ErrorKind::Config,
        ChangepointError::TooShort { .. } => ErrorKind::Data,
        ChangepointError::Solver(_) => ErrorKind::Model,
    }
}

fn forecast_kind(e: &ForecastError) -> ErrorKind {
    match e {
        ForecastError::HorizonNonPositive | ForecastError::InvalidConfig(_) => ErrorKind::Config,
        ForecastError::MissingRegressorFuture(_)
        | ForecastError::RegressorMissing(_)
        | ForecastError::MissingInputs(_)
        | ForecastError::InsufficientHistory { .. } => ErrorKind::Data,
        ForecastError::Series(s) => series_kind(s),
        ForecastError::Feature(f) => feature_kind(f),
        ForecastError::Changepoint(c) => changepoint_kind(c),
        ForecastError::Volatility(VolatilityError::UnknownFeature(_)) => ErrorKind::Config,
        ForecastError::Solver(_) | ForecastError::Volatility(_) => ErrorKind::Model,
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. } => ErrorKind::Data,
            Error::Series(e) => series_kind(e),
            Error::Feature(e) => feature_kind(e),
            Error::Solver(_) => ErrorKind::Model,
            Error::Changepoint(e) => changepoint_kind(e),
            Error::Forecast(e) => forecast_kind(e),
            Error::Volatility(VolatilityError::UnknownFeature(_)) => ErrorKind::Config,
            Error::Volatility(_) => ErrorKind::Model,
            Error::Evaluate(EvaluateError::Metric(_)) => ErrorKind::Data,
            Error::Evaluate(EvaluateError::InfeasiblePlan(_)) | Error::Evaluate(EvaluateError::InvalidPlan(_)) => {
                ErrorKind::Config
            }
        }
    }

    /// Short machine-readable code for the `ERROR <code>:` line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Series(e) | Error::Changepoint(ChangepointError::Series(e)) => e.code(),
            Error::Forecast(ForecastError::Series(e)) => e.code(),
            Error::Feature(_) | Error::Forecast(ForecastError::Feature(_)) => "feature",
            Error::Solver(_) | Error::Forecast(ForecastError::Solver(_)) => "solver",
            Error::Changepoint(_) | Error::Forecast(ForecastError::Changepoint(_)) => "changepoint",
            Error::Volatility(_) | Error::Forecast(ForecastError::Volatility(_)) => "volatility",
            Error::Forecast(ForecastError::InsufficientHistory { .. }) => "InsufficientHistory",
            Error::Forecast(ForecastError::HorizonNonPositive) => "HorizonNonPositive",
            Error::Forecast(ForecastError::MissingRegressorFuture(_)) => "MissingRegressorFuture",
            Error::Forecast(_) => "forecast",
            Error::Evaluate(EvaluateError::InfeasiblePlan(_)) => "InfeasiblePlan",
            Error::Evaluate(EvaluateError::Metric(_)) => "metric",
            Error::Evaluate(_) => "evaluate",
        }
    }
}
