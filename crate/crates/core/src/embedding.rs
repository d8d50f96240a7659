//! Lead-lagged, delay-embedded, normalized input construction.
//!
//! The input paired with the response at time `t` is the observation made
//! `lead` steps earlier, together with `m` additional lags spaced `tau`
//! apart:
//!
//! ```text
//! x~_t = [1?, Y_{t-lead}, Y_{t-lead-tau}, ..., Y_{t-lead-m*tau}]
//! ```
//!
//! so every embedded row only sees data at least `lead` steps before its
//! response. Standardization statistics are fit on training rows once and
//! frozen for validation and forecasting.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::{conv, Real};

/// Embedding layout: forecast lead, lag spacing and count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingSpec {
    /// Forecast lead `L` in time steps.
    pub lead: usize,
    /// Embedding lag `tau`.
    pub tau: usize,
    /// Number of extra lags `m`; `m = 0` keeps only the single lagged input.
    pub m: usize,
    /// Prepend a constant 1 to every embedded row.
    pub include_intercept: bool,
    /// Standardize inputs with training statistics.
    pub normalize: bool,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            lead: 1,
            tau: 1,
            m: 0,
            include_intercept: true,
            normalize: true,
        }
    }
}

impl EmbeddingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lead == 0 {
            return Err(Error::param("lead", "must be at least 1"));
        }
        if self.tau == 0 {
            return Err(Error::param("tau", "must be at least 1"));
        }
        Ok(())
    }

    /// Oldest lag offset used by one embedded row.
    pub fn history_depth(&self) -> usize {
        self.lead + self.m * self.tau
    }

    /// Embedded row width for `n_x` input variables.
    pub fn width(&self, n_x: usize) -> usize {
        (self.m + 1) * n_x + usize::from(self.include_intercept)
    }
}

/// Per-variable means and standard deviations from training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats<T> {
    pub means: DVector<T>,
    pub sds: DVector<T>,
}

impl<T: Real> NormalizationStats<T> {
    pub fn n_vars(&self) -> usize {
        self.means.len()
    }

    #[inline]
    fn standardize(&self, column: usize, value: T) -> T {
        (value - self.means[column]) / self.sds[column]
    }
}

/// Column means and standard deviations (denominator `T - 1`).
///
/// Rejects zero-variance columns, which cannot be standardized.
pub fn fit_normalization<T: Real>(training_rows: &DMatrix<T>) -> Result<NormalizationStats<T>> {
    let n = training_rows.nrows();
    if n < 2 {
        return Err(Error::param(
            "training_rows",
            format!("need at least 2 rows to estimate a standard deviation, got {n}"),
        ));
    }
    let n_t = conv::<T>(n as f64);
    let means = DVector::from_fn(training_rows.ncols(), |j, _| {
        training_rows.column(j).sum() / n_t
    });
    let denom = conv::<T>((n - 1) as f64);
    let mut sds = DVector::zeros(training_rows.ncols());
    for j in 0..training_rows.ncols() {
        let mut acc = T::zero();
        for i in 0..n {
            let d = training_rows[(i, j)] - means[j];
            acc += d * d;
        }
        let sd = Float::sqrt(acc / denom);
        if sd == T::zero() {
            return Err(Error::ConstantColumn { column: j });
        }
        sds[j] = sd;
    }
    Ok(NormalizationStats { means, sds })
}

/// Build embedded input rows `x~_t` for every `t` in `t_range`.
///
/// `series` holds the observed responses; the row for time `t` reads only
/// series rows at `t - lead` and earlier. `stats` is required when
/// `spec.normalize` is set and must come from training rows.
pub fn build_embedded_inputs<T: Real>(
    series: &DMatrix<T>,
    spec: &EmbeddingSpec,
    stats: Option<&NormalizationStats<T>>,
    t_range: Range<usize>,
) -> Result<DMatrix<T>> {
    spec.validate()?;
    let n_x = series.ncols();
    let stats = if spec.normalize {
        let s = stats.ok_or_else(|| {
            Error::param("stats", "normalization requested but no statistics supplied")
        })?;
        if s.n_vars() != n_x {
            return Err(Error::dim(format!(
                "normalization statistics cover {} variables but the series has {}",
                s.n_vars(),
                n_x
            )));
        }
        Some(s)
    } else {
        None
    };

    if !t_range.is_empty() {
        let earliest = t_range.start as i64 - spec.history_depth() as i64;
        if earliest < 0 {
            return Err(Error::InsufficientHistory {
                t: t_range.start,
                required: earliest,
            });
        }
        let latest_used = t_range.end - 1 - spec.lead;
        if latest_used >= series.nrows() {
            return Err(Error::dim(format!(
                "time {} needs series row {} but only {} rows exist",
                t_range.end - 1,
                latest_used,
                series.nrows()
            )));
        }
    }

    let width = spec.width(n_x);
    let mut out = DMatrix::zeros(t_range.len(), width);
    for (row, t) in t_range.enumerate() {
        let mut col = 0;
        if spec.include_intercept {
            out[(row, col)] = T::one();
            col += 1;
        }
        for lag in 0..=spec.m {
            let src = t - spec.lead - lag * spec.tau;
            for v in 0..n_x {
                let raw = series[(src, v)];
                out[(row, col)] = match stats {
                    Some(s) => s.standardize(v, raw),
                    None => raw,
                };
                col += 1;
            }
        }
    }
    Ok(out)
}
