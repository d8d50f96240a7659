//! Ensemble quadratic echo state networks for nonlinear spatio-temporal
//! forecasting.
//!
//! The model drives a fixed, sparse, randomly drawn recurrent reservoir with
//! delay-embedded lagged inputs and reads it out through a ridge-estimated
//! map that is linear in the hidden state and its element-wise square. An
//! ensemble over independent reservoir draws yields forecast means and
//! empirical prediction intervals.
//!
//! Pipeline pieces:
//!
//! - [`reservoir`]: weight generation, spectral-radius rescaling and the
//!   leaky state recursion;
//! - [`embedding`]: lead-lagged, delay-embedded, standardized inputs;
//! - [`readout`]: quadratic feature map and ridge regression;
//! - [`ensemble`]: the K-member fit/forecast loop with interval reduction;
//! - [`lorenz96`]: the 40-variable benchmark data generator;
//! - [`eof`]: anomalies, EOF bases and regional averages for gridded data;
//! - [`metrics`]: MSE, ensemble CRPS and interval coverage;
//! - [`tuning`]: grid search on a contiguous holdout window.
//!
//! All numerics are generic over the scalar type through [`Real`]
//! (`f32` or `f64`); the `*64` aliases below name the double-precision
//! instantiations used by the command-line tools.

pub mod embedding;
pub mod ensemble;
pub mod eof;
pub mod error;
pub mod lorenz96;
pub mod metrics;
pub mod readout;
pub mod reservoir;
pub mod scalar;
pub mod tuning;

pub use embedding::{build_embedded_inputs, fit_normalization, EmbeddingSpec, NormalizationStats};
pub use ensemble::{fit_member, forecast_member, run_ensemble, EnsembleForecast, FittedMember, QesnConfig};
pub use eof::{compute_anomalies, eof_decompose, nino34_average, project, reconstruct, EofBasis, GriddedField};
pub use error::{Error, Result};
pub use lorenz96::{derivative, simulate, Lorenz96Config, Lorenz96Run};
pub use metrics::{crps_ensemble, crps_fields, interval_coverage, mse, CrpsVariant, ScoreReport};
pub use readout::{fit_ridge, predict, quadratic_features, ridge_solve, FeatureMatrix, ReadoutWeights};
pub use reservoir::{generate_weights, run_reservoir, spectral_radius, Activation, HiddenStateSequence, ReservoirSpec, ReservoirWeights};
pub use scalar::Real;
pub use tuning::{grid_search, GridPoint, Objective, RegionalScorer, TuningGrid, TuningResult};

/// Double-precision instantiations.
pub type ReservoirSpec64 = ReservoirSpec<f64>;
pub type ReservoirWeights64 = ReservoirWeights<f64>;
pub type QesnConfig64 = QesnConfig<f64>;
pub type EnsembleForecast64 = EnsembleForecast<f64>;
pub type Lorenz96Config64 = Lorenz96Config<f64>;
pub type GriddedField64 = GriddedField<f64>;
pub type EofBasis64 = EofBasis<f64>;
pub type TuningGrid64 = TuningGrid<f64>;
pub type ScoreReport64 = ScoreReport<f64>;
