//! Empirical orthogonal functions for gridded fields.
//!
//! A field is a `T x n_loc` matrix of monthly values over fixed grid cells.
//! Anomalies remove each cell's calendar-month climatology. The EOF
//! decomposition column-centers the data and factors it by SVD, giving an
//! orthonormal spatial basis `Psi` and coefficient time series `beta_t` with
//! `Z_t ~= Psi beta_t`; coefficients drive the forecasting model and fields
//! are recovered by `reconstruct`.
//!
//! The sign of each basis column is fixed so its largest-magnitude entry is
//! positive, making decompositions reproducible bit for bit.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{conv, to_f64, Real};

/// Gridded monthly values: rows are months, columns are grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedField<T> {
    pub values: DMatrix<T>,
    /// Cell latitudes in degrees, one per column.
    pub lats: Vec<T>,
    /// Cell longitudes in degrees, 0-360 convention.
    pub lons: Vec<T>,
    /// `(year, month)` per row, months 1-12.
    pub time_index: Vec<(i32, u32)>,
}

impl<T: Real> GriddedField<T> {
    pub fn n_locations(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lats.len() != self.n_locations() || self.lons.len() != self.n_locations() {
            return Err(Error::dim(format!(
                "{} columns but {} latitudes / {} longitudes",
                self.n_locations(),
                self.lats.len(),
                self.lons.len()
            )));
        }
        if self.time_index.len() != self.n_times() {
            return Err(Error::dim(format!(
                "{} rows but {} time labels",
                self.n_times(),
                self.time_index.len()
            )));
        }
        let ninety = conv::<T>(90.0);
        if self.lats.iter().any(|l| Float::abs(*l) > ninety) {
            return Err(Error::param("lats", "latitudes must lie in [-90, 90]"));
        }
        if self.time_index.iter().any(|(_, m)| *m == 0 || *m > 12) {
            return Err(Error::param("time_index", "months must lie in 1..=12"));
        }
        if self.values.iter().any(|v| !Float::is_finite(*v)) {
            return Err(Error::NonFinite {
                context: "gridded field values",
            });
        }
        Ok(())
    }
}

/// EOF basis, its coefficient series and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EofBasis<T> {
    /// Orthonormal spatial patterns, `n_loc x n_eof`.
    pub psi: DMatrix<T>,
    /// Expansion coefficients of the decomposed data, `T x n_eof`.
    pub coefficients: DMatrix<T>,
    /// Fraction of total variance captured by each retained component,
    /// non-increasing.
    pub explained_variance: Vec<T>,
    /// Column means removed before the decomposition.
    pub column_means: DVector<T>,
}

impl<T: Real> EofBasis<T> {
    pub fn n_eof(&self) -> usize {
        self.psi.ncols()
    }

    pub fn n_locations(&self) -> usize {
        self.psi.nrows()
    }
}

/// Subtract each cell's calendar-month mean computed over the climatology
/// years `clim_start..=clim_end`.
pub fn compute_anomalies<T: Real>(
    raw: &GriddedField<T>,
    clim_start: i32,
    clim_end: i32,
) -> Result<GriddedField<T>> {
    raw.validate()?;
    let n_loc = raw.n_locations();

    // Calendar-month climatologies over the window.
    let mut month_means: Vec<RowDVector<T>> = Vec::with_capacity(12);
    for month in 1..=12u32 {
        let rows: Vec<usize> = raw
            .time_index
            .iter()
            .enumerate()
            .filter(|(_, (y, m))| *m == month && (clim_start..=clim_end).contains(y))
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(Error::MissingClimatologyMonth {
                month,
                start: clim_start,
                end: clim_end,
            });
        }
        let inv = T::one() / conv::<T>(rows.len() as f64);
        let mut mean = RowDVector::zeros(n_loc);
        for &r in &rows {
            mean += raw.values.row(r) * inv;
        }
        month_means.push(mean);
    }

    let mut values = raw.values.clone();
    for (r, (_, month)) in raw.time_index.iter().enumerate() {
        let mut row = values.row_mut(r);
        row -= &month_means[(*month - 1) as usize];
    }

    Ok(GriddedField {
        values,
        lats: raw.lats.clone(),
        lons: raw.lons.clone(),
        time_index: raw.time_index.clone(),
    })
}

/// Decompose a field into its leading `n_eof` EOFs.
pub fn eof_decompose<T: Real>(field: &GriddedField<T>, n_eof: usize) -> Result<EofBasis<T>> {
    field.validate()?;
    if n_eof == 0 {
        return Err(Error::param("n_eof", "must be at least 1"));
    }
    let t_len = field.n_times();
    let n_loc = field.n_locations();
    let r = t_len.min(n_loc);
    if n_eof > r {
        return Err(Error::RankDeficient {
            requested: n_eof,
            rank: r,
        });
    }

    let column_means = DVector::from_fn(n_loc, |j, _| {
        field.values.column(j).sum() / conv::<T>(t_len as f64)
    });
    let mut centered = field.values.clone();
    for mut row in centered.row_iter_mut() {
        for j in 0..n_loc {
            row[j] -= column_means[j];
        }
    }

    let svd = centered.svd(true, true);
    let sigma = &svd.singular_values;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");

    let sigma_max = sigma[0];
    let tol = sigma_max * conv::<T>(t_len.max(n_loc) as f64) * <T as Float>::epsilon();
    let rank = sigma.iter().filter(|s| **s > tol).count();
    if n_eof > rank {
        return Err(Error::RankDeficient {
            requested: n_eof,
            rank,
        });
    }

    let total: T = sigma.iter().map(|s| *s * *s).fold(T::zero(), |a, b| a + b);
    let explained_variance: Vec<T> = (0..n_eof).map(|i| sigma[i] * sigma[i] / total).collect();

    let mut psi = DMatrix::zeros(n_loc, n_eof);
    let mut coefficients = DMatrix::zeros(t_len, n_eof);
    for k in 0..n_eof {
        for j in 0..n_loc {
            psi[(j, k)] = v_t[(k, j)];
        }
        for t in 0..t_len {
            coefficients[(t, k)] = u[(t, k)] * sigma[k];
        }
    }

    // Sign convention: the largest-magnitude entry of each pattern is
    // positive (first such entry on ties).
    for k in 0..n_eof {
        let mut best = 0;
        for j in 1..n_loc {
            if Float::abs(psi[(j, k)]) > Float::abs(psi[(best, k)]) {
                best = j;
            }
        }
        if psi[(best, k)] < T::zero() {
            for j in 0..n_loc {
                psi[(j, k)] = -psi[(j, k)];
            }
            for t in 0..t_len {
                coefficients[(t, k)] = -coefficients[(t, k)];
            }
        }
    }

    Ok(EofBasis {
        psi,
        coefficients,
        explained_variance,
        column_means,
    })
}

/// Project field rows onto the basis: `(rows - means) Psi`.
pub fn project<T: Real>(basis: &EofBasis<T>, field_rows: &DMatrix<T>) -> Result<DMatrix<T>> {
    if field_rows.ncols() != basis.n_locations() {
        return Err(Error::dim(format!(
            "rows have {} locations but the basis covers {}",
            field_rows.ncols(),
            basis.n_locations()
        )));
    }
    let mut centered = field_rows.clone();
    for mut row in centered.row_iter_mut() {
        for j in 0..basis.n_locations() {
            row[j] -= basis.column_means[j];
        }
    }
    Ok(centered * &basis.psi)
}

/// Map coefficient rows back to field rows: `coeffs Psi' + means`.
pub fn reconstruct<T: Real>(basis: &EofBasis<T>, coefficient_rows: &DMatrix<T>) -> Result<DMatrix<T>> {
    if coefficient_rows.ncols() != basis.n_eof() {
        return Err(Error::dim(format!(
            "rows have {} coefficients but the basis holds {}",
            coefficient_rows.ncols(),
            basis.n_eof()
        )));
    }
    let mut fields = coefficient_rows * basis.psi.transpose();
    for mut row in fields.row_iter_mut() {
        for j in 0..basis.n_locations() {
            row[j] += basis.column_means[j];
        }
    }
    Ok(fields)
}

/// True when a cell lies in the Nino 3.4 box (5S-5N, 120W-70W).
#[inline]
fn in_nino34<T: Real>(lat: T, lon: T) -> bool {
    let lat_f = to_f64(lat);
    let lon_f = to_f64(lon);
    (-5.0..=5.0).contains(&lat_f) && (190.0..=290.0).contains(&lon_f)
}

/// Unweighted mean of a field row over the Nino 3.4 region.
pub fn nino34_average<T: Real>(field_row: &[T], lats: &[T], lons: &[T]) -> Result<T> {
    if field_row.len() != lats.len() || field_row.len() != lons.len() {
        return Err(Error::dim(format!(
            "{} values vs {} lats / {} lons",
            field_row.len(),
            lats.len(),
            lons.len()
        )));
    }
    let mut sum = T::zero();
    let mut count = 0usize;
    for ((v, lat), lon) in field_row.iter().zip(lats).zip(lons) {
        if in_nino34(*lat, *lon) {
            sum += *v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(sum / conv::<T>(count as f64))
}
