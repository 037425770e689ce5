//! Interpretable additive time-series forecasting.
//!
//! The conditional mean of a series is modeled as a sum of groups of
//! covariates: growth with changepoints, Fourier seasonality (optionally
//! with seasonality changepoints), holiday and calendar indicators,
//! autoregression, regressors and interactions. The groups are assembled
//! into a [`features::DesignMatrix`] and fit with one of the in-house
//! [`solvers`]. Prediction intervals come from a separate
//! [`volatility`] model fit on the residuals, conditioned on categorical
//! calendar features.
//!
//! The crate also provides automatic trend and seasonality changepoint
//! detection ([`changepoint`]), rolling-origin backtesting and scale-free
//! accuracy metrics ([`evaluate`]), bundled benchmark data ([`datasets`])
//! and the batch command-line front end ([`cli`]).

pub mod changepoint;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod forecast;
pub mod holidays;
pub mod series;
pub mod solvers;
pub mod stats;
pub mod volatility;

pub use error::{Error, Result};
pub use forecast::{fit, ForecastConfig, ForecastResult, FittedForecastModel};
pub use series::{Frequency, FrequencyUnit, TimeSeries, Timestamp};
