//! Forecast verification: mean squared error, ensemble CRPS and
//! prediction-interval coverage.

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{conv, Real};

/// Empirical CRPS estimator variant.
///
/// `Plain` is `mean_k |x_k - y| - (1 / 2K^2) sum_{k,j} |x_k - x_j|`; `Fair`
/// replaces the second denominator with `2 K (K - 1)`, removing the finite-
/// ensemble bias. For `K = 1` both reduce to the absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrpsVariant {
    #[default]
    Plain,
    Fair,
}

/// Scores for one forecast run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport<T> {
    pub overall_mse: T,
    /// Regional summary (e.g. the Nino 3.4 average), when applicable.
    pub regional_mse: Option<T>,
    /// CRPS averaged over locations and forecast times.
    pub crps: T,
    /// Fraction of truths inside the 95% prediction intervals.
    pub coverage_95: T,
}

impl<T: Real> ScoreReport<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| Float::is_finite(v) && v >= T::zero();
        if !ok(self.overall_mse) || !ok(self.crps) || !ok(self.coverage_95) {
            return Err(Error::NonFinite {
                context: "score report",
            });
        }
        if let Some(r) = self.regional_mse {
            if !ok(r) {
                return Err(Error::NonFinite {
                    context: "regional mse",
                });
            }
        }
        if self.coverage_95 > T::one() {
            return Err(Error::param("coverage_95", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn check_shapes<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.is_empty() {
        return Err(Error::dim(format!("{what}: empty matrices")));
    }
    Ok(())
}

/// Mean of squared element-wise differences.
pub fn mse<T: Real>(pred: &DMatrix<T>, truth: &DMatrix<T>) -> Result<T> {
    check_shapes(pred, truth, "mse")?;
    let n = conv::<T>(pred.len() as f64);
    let sum = pred
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| {
            let d = *p - *t;
            d * d
        })
        .fold(T::zero(), |a, b| a + b);
    Ok(sum / n)
}

/// CRPS of one ensemble against one observation.
pub fn crps_ensemble<T: Real>(members: &[T], observation: T, variant: CrpsVariant) -> Result<T> {
    if members.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if members.iter().any(|v| !Float::is_finite(*v)) || !Float::is_finite(observation) {
        return Err(Error::NonFinite {
            context: "crps inputs",
        });
    }
    let k = members.len();
    let k_t = conv::<T>(k as f64);

    let abs_err = members
        .iter()
        .map(|x| Float::abs(*x - observation))
        .fold(T::zero(), |a, b| a + b)
        / k_t;

    if k == 1 {
        return Ok(abs_err);
    }

    // sum_{k,j} |x_k - x_j| = 2 * sum_i (2i - K + 1) x_(i) on sorted values,
    // evaluated in O(K log K) instead of the quadratic double sum.
    let mut sorted = members.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut pair_half_sum = T::zero();
    for (i, x) in sorted.iter().enumerate() {
        let weight = conv::<T>((2 * i) as f64 - (k as f64) + 1.0);
        pair_half_sum += weight * *x;
    }

    let spread = match variant {
        CrpsVariant::Plain => pair_half_sum / (k_t * k_t),
        CrpsVariant::Fair => pair_half_sum / (k_t * (k_t - T::one())),
    };
    Ok(abs_err - spread)
}

/// CRPS averaged over every (time, location) cell of a forecast field.
pub fn crps_fields<T: Real>(
    member_fields: &[DMatrix<T>],
    truth: &DMatrix<T>,
    variant: CrpsVariant,
) -> Result<T> {
    if member_fields.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    for m in member_fields {
        check_shapes(m, truth, "crps member")?;
    }
    let mut values = vec![T::zero(); member_fields.len()];
    let mut total = T::zero();
    for t in 0..truth.nrows() {
        for j in 0..truth.ncols() {
            for (k, m) in member_fields.iter().enumerate() {
                values[k] = m[(t, j)];
            }
            total += crps_ensemble(&values, truth[(t, j)], variant)?;
        }
    }
    Ok(total / conv::<T>(truth.len() as f64))
}

/// Fraction of cells with `lower <= truth <= upper`.
pub fn interval_coverage<T: Real>(
    lower: &DMatrix<T>,
    upper: &DMatrix<T>,
    truth: &DMatrix<T>,
) -> Result<T> {
    check_shapes(lower, truth, "interval lower")?;
    check_shapes(upper, truth, "interval upper")?;
    if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
        return Err(Error::param("lower", "exceeds upper somewhere"));
    }
    let hits = lower
        .iter()
        .zip(upper.iter())
        .zip(truth.iter())
        .filter(|((l, u), t)| **l <= **t && **t <= **u)
        .count();
    Ok(conv::<T>(hits as f64) / conv::<T>(truth.len() as f64))
}
