//! Quadratic feature map and ridge-regression readout.
//!
//! The readout models `Y_t = c + V1 h_t + V2 (h_t o h_t) + eps_t` with
//! `eps_t ~ N(0, diag(R))`. Coefficients minimize the penalized squared
//! error with an unpenalized intercept, obtained by centering features and
//! responses before solving the `p x p` normal equations
//! `(Fc' Fc + r_v I) B = Fc' Yc` with a symmetric positive-definite
//! factorization. `p` is at most `2 n_h`, so direct solves are exact and
//! cheap at the scales used here.

use nalgebra::{Cholesky, DMatrix, DVector, RowDVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::reservoir::HiddenStateSequence;
use crate::scalar::{conv, Real};

/// Readout features: hidden states, optionally augmented with their
/// element-wise squares. `washout` is carried over from the state sequence
/// for downstream fitting to skip.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: DMatrix<T>,
    pub n_h: usize,
    pub quadratic: bool,
    pub washout: usize,
}

/// Estimated readout: output matrices, unpenalized intercept and diagonal
/// residual covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights<T> {
    /// Linear term, `n_y x n_h`.
    pub v1: DMatrix<T>,
    /// Quadratic term, `n_y x n_h`; identically zero when the quadratic map
    /// was ablated.
    pub v2: DMatrix<T>,
    pub intercept: DVector<T>,
    /// Per-output residual variances (the diagonal of `R`).
    pub r_diag: DVector<T>,
    pub r_v: T,
}

impl<T: Real> ReadoutWeights<T> {
    pub fn n_h(&self) -> usize {
        self.v1.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.v1.nrows()
    }

    /// Mean prediction for a single hidden state.
    pub fn predict_state(&self, h: &DVector<T>, include_quadratic: bool) -> DVector<T> {
        let mut out = self.intercept.clone_owned();
        out.gemv(T::one(), &self.v1, h, T::one());
        if include_quadratic {
            let squared = h.map(|v| v * v);
            out.gemv(T::one(), &self.v2, &squared, T::one());
        }
        out
    }
}

/// Stack `[h_t', (h_t o h_t)']` rows (or plain `h_t'` rows when the
/// quadratic block is disabled).
pub fn quadratic_features<T: Real>(
    states: &HiddenStateSequence<T>,
    include_quadratic: bool,
) -> FeatureMatrix<T> {
    let n_h = states.n_h();
    let rows = states.len();
    let p = if include_quadratic { 2 * n_h } else { n_h };
    let mut values = DMatrix::zeros(rows, p);
    for t in 0..rows {
        for j in 0..n_h {
            let v = states.states[(t, j)];
            values[(t, j)] = v;
            if include_quadratic {
                values[(t, n_h + j)] = v * v;
            }
        }
    }
    FeatureMatrix {
        values,
        n_h,
        quadratic: include_quadratic,
        washout: states.washout,
    }
}

/// Solve the uncentered, no-intercept ridge problem
/// `(F'F + r_v I) B = F'Y`, returning the `p x n_y` coefficient matrix.
pub fn ridge_solve<T: Real>(
    features: &DMatrix<T>,
    responses: &DMatrix<T>,
    r_v: T,
) -> Result<DMatrix<T>> {
    if features.nrows() != responses.nrows() {
        return Err(Error::dim(format!(
            "{} feature rows vs {} response rows",
            features.nrows(),
            responses.nrows()
        )));
    }
    if r_v < T::zero() {
        return Err(Error::param("r_v", "must be non-negative"));
    }
    if features.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::NonFinite {
            context: "ridge features",
        });
    }
    if responses.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::NonFinite {
            context: "ridge responses",
        });
    }

    let p = features.ncols();
    let mut gram = features.tr_mul(features);
    for i in 0..p {
        gram[(i, i)] += r_v;
    }
    let rhs = features.tr_mul(responses);
    let max_diag = gram
        .diagonal()
        .iter()
        .fold(T::zero(), |a, v| Float::max(a, *v));
    let chol = Cholesky::new(gram).ok_or(Error::SingularSystem)?;
    if r_v == T::zero() {
        // A rank-deficient Gram matrix can slip through the factorization
        // with rounding-level pivots; treat those as singular.
        let tol = max_diag * <T as Float>::epsilon() * conv(100.0 * p as f64);
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(<T as Float>::infinity(), |a, v| Float::min(a, *v));
        if min_pivot * min_pivot <= tol {
            return Err(Error::SingularSystem);
        }
    }
    Ok(chol.solve(&rhs))
}

/// Fit the readout by centered ridge regression, skipping the first
/// `skip_rows` (washout) rows.
///
/// The intercept absorbs the feature and response means and is not
/// penalized. `r_diag` is the per-output mean squared training residual.
pub fn fit_ridge<T: Real>(
    features: &FeatureMatrix<T>,
    responses: &DMatrix<T>,
    r_v: T,
    skip_rows: usize,
) -> Result<ReadoutWeights<T>> {
    let total = features.values.nrows();
    if responses.nrows() != total {
        return Err(Error::dim(format!(
            "{} feature rows vs {} response rows",
            total,
            responses.nrows()
        )));
    }
    if skip_rows >= total {
        return Err(Error::param(
            "skip_rows",
            format!("skipping {skip_rows} of {total} rows leaves nothing to fit"),
        ));
    }

    let n_fit = total - skip_rows;
    let f = features.values.rows(skip_rows, n_fit);
    let y = responses.rows(skip_rows, n_fit);
    let inv_n = T::one() / conv::<T>(n_fit as f64);

    let f_mean = RowDVector::from_fn(f.ncols(), |_, j| f.column(j).sum() * inv_n);
    let y_mean = RowDVector::from_fn(y.ncols(), |_, j| y.column(j).sum() * inv_n);
    let mut fc = f.clone_owned();
    for mut row in fc.row_iter_mut() {
        row -= &f_mean;
    }
    let mut yc = y.clone_owned();
    for mut row in yc.row_iter_mut() {
        row -= &y_mean;
    }

    let coef = ridge_solve(&fc, &yc, r_v)?;

    let n_y = y.ncols();
    let n_h = features.n_h;
    let intercept = DVector::from_fn(n_y, |i, _| {
        y_mean[i] - (&f_mean * coef.column(i))[(0, 0)]
    });

    let residuals = &yc - &fc * &coef;
    let r_diag = DVector::from_fn(n_y, |j, _| {
        residuals.column(j).iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b) * inv_n
    });

    let v1 = coef.rows(0, n_h).transpose();
    let v2 = if features.quadratic {
        coef.rows(n_h, n_h).transpose()
    } else {
        DMatrix::zeros(n_y, n_h)
    };

    Ok(ReadoutWeights {
        v1,
        v2,
        intercept,
        r_diag,
        r_v,
    })
}

/// Mean predictions for every state row.
pub fn predict<T: Real>(
    readout: &ReadoutWeights<T>,
    states: &HiddenStateSequence<T>,
    include_quadratic: bool,
) -> Result<DMatrix<T>> {
    if states.n_h() != readout.n_h() {
        return Err(Error::dim(format!(
            "states have {} hidden units but the readout expects {}",
            states.n_h(),
            readout.n_h()
        )));
    }
    let rows = states.len();
    let n_y = readout.n_y();
    let mut out = DMatrix::zeros(rows, n_y);
    let mut h = DVector::zeros(states.n_h());
    for t in 0..rows {
        for j in 0..states.n_h() {
            h[j] = states.states[(t, j)];
        }
        let pred = readout.predict_state(&h, include_quadratic);
        for j in 0..n_y {
            out[(t, j)] = pred[j];
        }
    }
    Ok(out)
}
