//! Ensemble fitting and forecasting.
//!
//! Each of the `K` members draws its own reservoir from an independent RNG
//! stream, runs the hidden-state recursion over the training rows, estimates
//! its readout by ridge regression, then continues the recursion through the
//! forecast window without resetting the hidden state. Member trajectories
//! are reduced to a mean and empirical prediction intervals.
//!
//! Members are independent given the data, so fitting runs in parallel;
//! results are gathered in member order, making the output identical to a
//! sequential run regardless of the worker count.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rayon::prelude::*;
use std::ops::Range;

use crate::embedding::{build_embedded_inputs, fit_normalization, EmbeddingSpec, NormalizationStats};
use crate::error::{Error, Result};
use crate::readout::{fit_ridge, quadratic_features, ReadoutWeights};
use crate::reservoir::{generate_weights, run_reservoir, stream_rng, ReservoirSpec, ReservoirWeights, NOISE_STREAM_TAG};
use crate::scalar::{conv, to_f64, Real};

/// Full model configuration for one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct QesnConfig<T> {
    pub reservoir: ReservoirSpec<T>,
    pub embedding: EmbeddingSpec,
    /// Ridge penalty for the readout.
    pub r_v: T,
    /// Ensemble size `K`.
    pub ensemble_size: usize,
    /// Forecast horizon `n_f` in evaluation periods.
    pub horizon: usize,
    /// Keep the squared-state block of the readout; disabling it is the M2
    /// ablation.
    pub include_quadratic: bool,
    /// Keep the extra lags of the embedded input; disabling it forces
    /// `m = 0`, the M1 ablation. Disabling both gives the plain leaky ESN
    /// (M3).
    pub include_embedding: bool,
    /// Add one `N(0, diag(R))` draw per member and forecast time.
    pub add_residual_noise: bool,
    /// Leading hidden states excluded from readout fitting.
    pub washout: usize,
}

impl<T: Real> Default for QesnConfig<T> {
    /// The Lorenz-96 configuration selected by validation: `n_h = 60`,
    /// `nu = 0.55`, `r_v = 0.001`, `m = 4`, `tau = 1`, lead 6, `K = 500`.
    fn default() -> Self {
        QesnConfig {
            reservoir: ReservoirSpec::default(),
            embedding: EmbeddingSpec {
                lead: 6,
                tau: 1,
                m: 4,
                include_intercept: true,
                normalize: true,
            },
            r_v: conv(0.001),
            ensemble_size: 500,
            horizon: 99,
            include_quadratic: true,
            include_embedding: true,
            add_residual_noise: true,
            washout: 0,
        }
    }
}

impl<T: Real> QesnConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        self.embedding.validate()?;
        if self.ensemble_size == 0 {
            return Err(Error::param("ensemble_size", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if self.r_v < T::zero() {
            return Err(Error::param("r_v", "must be non-negative"));
        }
        Ok(())
    }

    /// Embedding actually used: ablating the embedding forces `m = 0`.
    pub fn effective_embedding(&self) -> EmbeddingSpec {
        let mut spec = self.embedding;
        if !self.include_embedding {
            spec.m = 0;
        }
        spec
    }
}

/// One fitted ensemble member: fixed reservoir, estimated readout, frozen
/// normalization and the hidden state at the end of training.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedMember<T> {
    pub config: QesnConfig<T>,
    pub weights: ReservoirWeights<T>,
    pub readout: ReadoutWeights<T>,
    pub stats: Option<NormalizationStats<T>>,
    pub final_state: DVector<T>,
    /// Number of training rows the member was fit on.
    pub train_len: usize,
    /// First time index with a complete embedded input.
    pub first_input_time: usize,
}

/// Fit one member on the training responses (Algorithm 1 loop body).
pub fn fit_member<T: Real>(
    config: &QesnConfig<T>,
    train_responses: &DMatrix<T>,
    member_index: usize,
) -> Result<FittedMember<T>> {
    config.validate()?;
    let emb = config.effective_embedding();
    let t_len = train_responses.nrows();
    let t0 = emb.history_depth();
    if t0 >= t_len {
        return Err(Error::InsufficientHistory {
            t: t0,
            required: t0 as i64 - t_len as i64,
        });
    }

    let stats = if emb.normalize {
        Some(fit_normalization(train_responses)?)
    } else {
        None
    };
    let inputs = build_embedded_inputs(train_responses, &emb, stats.as_ref(), t0..t_len)?;
    let weights = generate_weights(&config.reservoir, inputs.ncols(), member_index)?;
    let states = run_reservoir(&weights, &inputs, &DVector::zeros(weights.n_h()), config.washout)?;

    let features = quadratic_features(&states, config.include_quadratic);
    let fit_targets = train_responses.rows(t0, t_len - t0).clone_owned();
    let readout = fit_ridge(&features, &fit_targets, config.r_v, config.washout)?;

    let last = states.len() - 1;
    let final_state = DVector::from_fn(weights.n_h(), |j, _| states.states[(last, j)]);

    Ok(FittedMember {
        config: config.clone(),
        weights,
        readout,
        stats,
        final_state,
        train_len: t_len,
        first_input_time: t0,
    })
}

/// Continue a member's recursion and emit predictions for `forecast_times`.
///
/// `all_responses` must extend the member's training series row for row;
/// holdout observations may feed later forecast inputs since each embedded
/// row only reads data at least `lead` steps before its valid time. Forecast
/// windows that start at or after the training end continue from the stored
/// end-of-training state; earlier windows replay the recursion from the
/// start, which reproduces the training states exactly.
pub fn forecast_member<T: Real>(
    member: &FittedMember<T>,
    all_responses: &DMatrix<T>,
    forecast_times: Range<usize>,
) -> Result<DMatrix<T>> {
    let config = &member.config;
    let emb = config.effective_embedding();
    let n_y = member.readout.n_y();
    if all_responses.ncols() != n_y {
        return Err(Error::dim(format!(
            "responses have {} variables but the member was fit on {}",
            all_responses.ncols(),
            n_y
        )));
    }
    if all_responses.nrows() < member.train_len {
        return Err(Error::dim(format!(
            "response matrix has {} rows, fewer than the {} training rows",
            all_responses.nrows(),
            member.train_len
        )));
    }

    let mut out = DMatrix::zeros(forecast_times.len(), n_y);
    if forecast_times.is_empty() {
        return Ok(out);
    }
    if forecast_times.start < member.first_input_time {
        return Err(Error::InsufficientHistory {
            t: forecast_times.start,
            required: forecast_times.start as i64 - member.first_input_time as i64,
        });
    }

    // Roll from the end of training when possible, otherwise replay from the
    // first embeddable time.
    let (roll_start, mut h) = if forecast_times.start >= member.train_len {
        (member.train_len, member.final_state.clone_owned())
    } else {
        (member.first_input_time, DVector::zeros(member.weights.n_h()))
    };

    let inputs = build_embedded_inputs(
        all_responses,
        &emb,
        member.stats.as_ref(),
        roll_start..forecast_times.end,
    )?;

    let mut noise_rng = stream_rng(
        config.reservoir.seed,
        NOISE_STREAM_TAG | member.weights.member_index as u64,
    );
    let noise_sd: Option<DVector<T>> = config
        .add_residual_noise
        .then(|| member.readout.r_diag.map(Float::sqrt));

    let mut x = DVector::zeros(inputs.ncols());
    for t in roll_start..forecast_times.end {
        for j in 0..inputs.ncols() {
            x[j] = inputs[(t - roll_start, j)];
        }
        h = member.weights.step(&h, &x);
        if t >= forecast_times.start {
            let mut pred = member.readout.predict_state(&h, config.include_quadratic);
            if let Some(sd) = &noise_sd {
                for j in 0..n_y {
                    pred[j] += sd[j] * T::standard_normal(&mut noise_rng);
                }
            }
            let row = t - forecast_times.start;
            for j in 0..n_y {
                out[(row, j)] = pred[j];
            }
        }
    }
    Ok(out)
}

/// Member trajectories with their mean and empirical prediction intervals.
///
/// Quantiles use the type-7 interpolation convention (linear in the order
/// statistics, as in the default of most statistical software).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast<T> {
    /// `K` member trajectories, each `n_f x n_y`.
    pub members: Vec<DMatrix<T>>,
    pub mean: DMatrix<T>,
    /// 2.5% member quantile per (time, variable).
    pub lower: DMatrix<T>,
    /// 97.5% member quantile per (time, variable).
    pub upper: DMatrix<T>,
    pub config: QesnConfig<T>,
}

fn quantile_type7<T: Real>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = conv::<T>((n - 1) as f64) * p;
    let lo = to_f64(Float::floor(h)) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - Float::floor(h);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn member_quantiles<T: Real>(members: &[DMatrix<T>], p: T) -> DMatrix<T> {
    let (rows, cols) = members[0].shape();
    let mut values = vec![T::zero(); members.len()];
    DMatrix::from_fn(rows, cols, |i, j| {
        for (k, m) in members.iter().enumerate() {
            values[k] = m[(i, j)];
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite member values"));
        quantile_type7(&values, p)
    })
}

impl<T: Real> EnsembleForecast<T> {
    /// Reduce gathered member trajectories to moments and 95% intervals.
    pub fn from_members(members: Vec<DMatrix<T>>, config: QesnConfig<T>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let shape = members[0].shape();
        if members.iter().any(|m| m.shape() != shape) {
            return Err(Error::dim("member trajectories differ in shape".to_string()));
        }
        if members
            .iter()
            .any(|m| m.iter().any(|v| !Float::is_finite(*v)))
        {
            return Err(Error::NonFinite {
                context: "member trajectories",
            });
        }
        let k = conv::<T>(members.len() as f64);
        let mut mean = DMatrix::zeros(shape.0, shape.1);
        for m in &members {
            mean += m;
        }
        mean /= k;
        let lower = member_quantiles(&members, conv(0.025));
        let upper = member_quantiles(&members, conv(0.975));
        Ok(EnsembleForecast {
            members,
            mean,
            lower,
            upper,
            config,
        })
    }

    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }

    /// Central interval at the given coverage level (e.g. `0.8`).
    pub fn interval(&self, level: T) -> Result<(DMatrix<T>, DMatrix<T>)> {
        if !(level > T::zero() && level < T::one()) {
            return Err(Error::param("level", "must lie strictly inside (0, 1)"));
        }
        let half = conv::<T>(0.5);
        let tail = (T::one() - level) * half;
        Ok((
            member_quantiles(&self.members, tail),
            member_quantiles(&self.members, T::one() - tail),
        ))
    }
}

/// Algorithm 1: fit and forecast `K` members with `member_index = 1..=K`,
/// then reduce to moments and intervals.
///
/// `all_responses` must begin with exactly the rows of `train_responses`;
/// rows beyond them are holdout observations that only serve as lagged
/// inputs. Any member failure aborts the whole ensemble (a silently smaller
/// `K` would change the quantile estimates).
pub fn run_ensemble<T: Real>(
    config: &QesnConfig<T>,
    train_responses: &DMatrix<T>,
    all_responses: &DMatrix<T>,
    forecast_times: Range<usize>,
) -> Result<EnsembleForecast<T>> {
    config.validate()?;
    if train_responses.ncols() != all_responses.ncols()
        || all_responses.nrows() < train_responses.nrows()
    {
        return Err(Error::dim(format!(
            "training block {:?} does not prefix the full series {:?}",
            train_responses.shape(),
            all_responses.shape()
        )));
    }
    for t in 0..train_responses.nrows() {
        for j in 0..train_responses.ncols() {
            if train_responses[(t, j)] != all_responses[(t, j)] {
                return Err(Error::dim(format!(
                    "training responses diverge from the full series at row {t}"
                )));
            }
        }
    }

    let results: Vec<Result<DMatrix<T>>> = (1..=config.ensemble_size)
        .into_par_iter()
        .map(|k| {
            let member = fit_member(config, train_responses, k)?;
            forecast_member(&member, all_responses, forecast_times.clone())
        })
        .collect();

    let mut members = Vec::with_capacity(results.len());
    for r in results {
        members.push(r?);
    }
    EnsembleForecast::from_members(members, config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::predict;
    use crate::reservoir::Activation;
    use approx::assert_relative_eq;

    /// Small but non-degenerate test configuration over a smooth 2-variable
    /// series.
    fn test_config() -> QesnConfig<f64> {
        QesnConfig {
            reservoir: ReservoirSpec {
                n_h: 15,
                nu: 0.55,
                pi_w: 0.5,
                pi_u: 0.5,
                a_w: 0.1,
                a_u: 0.1,
                alpha: 1.0,
                activation: Activation::Tanh,
                seed: 42,
            },
            embedding: EmbeddingSpec {
                lead: 2,
                tau: 1,
                m: 1,
                include_intercept: true,
                normalize: true,
            },
            r_v: 0.001,
            ensemble_size: 4,
            horizon: 5,
            include_quadratic: true,
            include_embedding: true,
            add_residual_noise: false,
            washout: 0,
        }
    }

    fn wave_series(len: usize) -> DMatrix<f64> {
        DMatrix::from_fn(len, 2, |t, j| {
            if j == 0 {
                (t as f64 * 0.31).sin()
            } else {
                (t as f64 * 0.17).cos() * 0.8 + 0.2
            }
        })
    }

    #[test]
    fn fitting_is_deterministic() {
        let config = test_config();
        let train = wave_series(60);
        let a = fit_member(&config, &train, 1).unwrap();
        let b = fit_member(&config, &train, 1).unwrap();
        assert_eq!(a.weights.w, b.weights.w);
        assert_eq!(a.readout.v1, b.readout.v1);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn members_differ_in_their_draws() {
        let config = test_config();
        let train = wave_series(60);
        let a = fit_member(&config, &train, 1).unwrap();
        let b = fit_member(&config, &train, 2).unwrap();
        assert_ne!(a.weights.w, b.weights.w);
        assert_ne!(a.weights.u, b.weights.u);
    }

    #[test]
    fn quadratic_ablation_zeroes_v2() {
        let config = QesnConfig {
            include_quadratic: false,
            ..test_config()
        };
        let member = fit_member(&config, &wave_series(60), 1).unwrap();
        assert!(member.readout.v2.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn embedding_ablation_shrinks_the_input() {
        let full = fit_member(&test_config(), &wave_series(60), 1).unwrap();
        let m1 = fit_member(
            &QesnConfig {
                include_embedding: false,
                ..test_config()
            },
            &wave_series(60),
            1,
        )
        .unwrap();
        // m = 1 gives (1+1)*2+1 = 5 input columns; the ablation keeps 3.
        assert_eq!(full.weights.u.ncols(), 5);
        assert_eq!(m1.weights.u.ncols(), 3);
    }

    #[test]
    fn plain_esn_ablation_is_linear_in_current_lag() {
        // M3: no embedding, no quadratic readout, which is the basic leaky
        // ESN with identity output activation.
        let config = QesnConfig {
            include_embedding: false,
            include_quadratic: false,
            ..test_config()
        };
        let member = fit_member(&config, &wave_series(60), 1).unwrap();
        assert!(member.readout.v2.iter().all(|v| *v == 0.0));
        assert_eq!(member.weights.u.ncols(), 3);
        assert_eq!(member.first_input_time, 2);
    }

    #[test]
    fn within_training_forecast_reproduces_predict() {
        let config = test_config();
        let train = wave_series(60);
        let member = fit_member(&config, &train, 1).unwrap();

        let emb = config.effective_embedding();
        let t0 = emb.history_depth();
        let inputs = build_embedded_inputs(&train, &emb, member.stats.as_ref(), t0..60).unwrap();
        let states = run_reservoir(&member.weights, &inputs, &DVector::zeros(15), 0).unwrap();
        let fitted = predict(&member.readout, &states, true).unwrap();

        let window = 10..20;
        let replay = forecast_member(&member, &train, window.clone()).unwrap();
        for (r, t) in window.enumerate() {
            for j in 0..2 {
                assert_relative_eq!(replay[(r, j)], fitted[(t - t0, j)], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn forecasts_are_deterministic_with_and_without_noise() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        for noise in [false, true] {
            let config = QesnConfig {
                add_residual_noise: noise,
                ..test_config()
            };
            let member = fit_member(&config, &train, 3).unwrap();
            let a = forecast_member(&member, &all, 60..65).unwrap();
            let b = forecast_member(&member, &all, 60..65).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noise_perturbs_the_trajectory() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let quiet = fit_member(&test_config(), &train, 3).unwrap();
        let noisy_config = QesnConfig {
            add_residual_noise: true,
            ..test_config()
        };
        let noisy = fit_member(&noisy_config, &train, 3).unwrap();
        let a = forecast_member(&quiet, &all, 60..65).unwrap();
        let b = forecast_member(&noisy, &all, 60..65).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn straddling_window_agrees_with_the_continued_recursion() {
        // A window crossing the training boundary: the replayed states match
        // the continue-from-final-state path exactly on the overlap.
        let all = wave_series(80);
        let train = all.rows(0, 60).clone_owned();
        let member = fit_member(&test_config(), &train, 2).unwrap();

        let straddle = forecast_member(&member, &all, 55..68).unwrap();
        let tail = forecast_member(&member, &all, 60..68).unwrap();
        for (r, t) in (60..68).enumerate() {
            for j in 0..2 {
                assert_eq!(straddle[(t - 55, j)], tail[(r, j)]);
            }
        }
    }

    #[test]
    fn windows_before_the_first_embeddable_time_error() {
        let train = wave_series(60);
        let member = fit_member(&test_config(), &train, 1).unwrap();
        // history_depth = 3; time 1 has no complete embedded input.
        assert!(matches!(
            forecast_member(&member, &train, 1..5),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn holdout_rows_feed_later_forecast_inputs() {
        let all = wave_series(80);
        let train = all.rows(0, 60).clone_owned();
        let config = test_config();
        let member = fit_member(&config, &train, 1).unwrap();
        // Times 60..75 need inputs up to row 73, inside the holdout block.
        let out = forecast_member(&member, &all, 60..75).unwrap();
        assert_eq!(out.shape(), (15, 2));
        // Restricting the series to training rows only must fail for the
        // same window.
        assert!(forecast_member(&member, &train, 60..75).is_err());
    }

    #[test]
    fn ensemble_mean_and_intervals_are_consistent() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let config = QesnConfig {
            ensemble_size: 8,
            add_residual_noise: true,
            ..test_config()
        };
        let forecast = run_ensemble(&config, &train, &all, 60..66).unwrap();
        assert_eq!(forecast.members.len(), 8);
        for i in 0..6 {
            for j in 0..2 {
                let lo = forecast.lower[(i, j)];
                let hi = forecast.upper[(i, j)];
                let mean = forecast.mean[(i, j)];
                assert!(lo <= hi);
                let min = forecast
                    .members
                    .iter()
                    .map(|m| m[(i, j)])
                    .fold(f64::INFINITY, f64::min);
                let max = forecast
                    .members
                    .iter()
                    .map(|m| m[(i, j)])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(min <= mean && mean <= max);
                assert!(min <= lo && hi <= max);
            }
        }
    }

    #[test]
    fn single_member_intervals_collapse() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let config = QesnConfig {
            ensemble_size: 1,
            ..test_config()
        };
        let forecast = run_ensemble(&config, &train, &all, 60..66).unwrap();
        assert_eq!(forecast.lower, forecast.members[0]);
        assert_eq!(forecast.upper, forecast.members[0]);
        assert_eq!(forecast.mean, forecast.members[0]);
    }

    #[test]
    fn quantiles_are_invariant_to_member_order() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let config = QesnConfig {
            ensemble_size: 6,
            add_residual_noise: true,
            ..test_config()
        };
        let forecast = run_ensemble(&config, &train, &all, 60..66).unwrap();

        let mut shuffled = forecast.members.clone();
        shuffled.rotate_left(2);
        shuffled.swap(0, 4);
        let reordered = EnsembleForecast::from_members(shuffled, config).unwrap();
        assert_eq!(forecast.mean.shape(), reordered.mean.shape());
        assert!((&forecast.mean - &reordered.mean).norm() < 1e-13);
        assert_eq!(forecast.lower, reordered.lower);
        assert_eq!(forecast.upper, reordered.upper);
    }

    #[test]
    fn narrower_intervals_nest_inside_wider_ones() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let config = QesnConfig {
            ensemble_size: 9,
            add_residual_noise: true,
            ..test_config()
        };
        let forecast = run_ensemble(&config, &train, &all, 60..66).unwrap();
        let (lo80, hi80) = forecast.interval(0.8).unwrap();
        for i in 0..6 {
            for j in 0..2 {
                assert!(forecast.lower[(i, j)] <= lo80[(i, j)]);
                assert!(hi80[(i, j)] <= forecast.upper[(i, j)]);
            }
        }
    }

    #[test]
    fn parallel_and_sequential_runs_agree_bitwise() {
        let all = wave_series(70);
        let train = all.rows(0, 60).clone_owned();
        let config = QesnConfig {
            ensemble_size: 6,
            add_residual_noise: true,
            ..test_config()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_ensemble(&config, &train, &all, 60..66))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run_ensemble(&config, &train, &all, 60..66))
            .unwrap();
        assert_eq!(single.mean, multi.mean);
        assert_eq!(single.lower, multi.lower);
        assert_eq!(single.upper, multi.upper);
        for (a, b) in single.members.iter().zip(multi.members.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mismatched_prefix_is_rejected() {
        let all = wave_series(70);
        let mut train = all.rows(0, 60).clone_owned();
        train[(10, 0)] += 0.5;
        let err = run_ensemble(&test_config(), &train, &all, 60..66);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn short_training_series_is_rejected() {
        let config = test_config();
        // history_depth = lead + m*tau = 3; 3 rows leave nothing to fit.
        let tiny = wave_series(3);
        assert!(matches!(
            fit_member(&config, &tiny, 1),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn quantile_interpolation_matches_hand_values() {
        // Type-7 on {1, 2, 3, 4}: q(0.5) = 2.5, q(0.25) = 1.75.
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile_type7(&sorted, 0.5), 2.5);
        assert_relative_eq!(quantile_type7(&sorted, 0.25), 1.75);
        assert_relative_eq!(quantile_type7(&sorted, 0.0), 1.0);
        assert_relative_eq!(quantile_type7(&sorted, 1.0), 4.0);
    }
}
