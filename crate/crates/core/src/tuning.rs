//! Grid-search hyper-parameter selection on a contiguous holdout window.
//!
//! Every grid point runs the full ensemble on the training window with the
//! same base seed (so score differences reflect hyper-parameters, not RNG
//! luck), forecasts the validation window and is scored by the grid's
//! objective. Failures at individual points are recorded in the result
//! table instead of aborting the sweep.

use nalgebra::DMatrix;
use num_traits::Float;
use rayon::prelude::*;
use std::ops::Range;

use crate::ensemble::{run_ensemble, QesnConfig};
use crate::eof::{nino34_average, reconstruct, EofBasis};
use crate::error::{Error, Result};
use crate::metrics::mse;
use crate::scalar::{conv, Real};

/// Validation objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// MSE over all validation periods and variables.
    #[default]
    OverallMse,
    /// MSE of the Nino 3.4 regional average of the reconstructed fields;
    /// requires a [`RegionalScorer`].
    RegionalMse,
}

/// Candidate values for the tuned hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid<T> {
    pub n_h_values: Vec<usize>,
    pub nu_values: Vec<T>,
    pub r_v_values: Vec<T>,
    pub m_values: Vec<usize>,
    /// Usually just `{1.0}`.
    pub alpha_values: Vec<T>,
    pub objective: Objective,
}

impl<T: Real> TuningGrid<T> {
    pub fn len(&self) -> usize {
        self.n_h_values.len()
            * self.nu_values.len()
            * self.r_v_values.len()
            * self.m_values.len()
            * self.alpha_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::param("grid", "every candidate list must be non-empty"));
        }
        Ok(())
    }
}

impl<T: Real> Default for TuningGrid<T> {
    /// The validation grid used for the Lorenz-96 study:
    /// `n_h in {30 + 15 q : q = 0..5}`, `nu in {0.05 q : q = 1..20}`,
    /// `r_v in {0.001, 0.005, 0.01}`, `m in {2 q : q = 1..5}`, `alpha = 1`.
    fn default() -> Self {
        TuningGrid {
            n_h_values: (0..=5).map(|q| 30 + 15 * q).collect(),
            nu_values: (1..=20).map(|q| conv(0.05 * q as f64)).collect(),
            r_v_values: vec![conv(0.001), conv(0.005), conv(0.01)],
            m_values: (1..=5).map(|q| 2 * q).collect(),
            alpha_values: vec![T::one()],
            objective: Objective::OverallMse,
        }
    }
}

/// Maps coefficient-space forecasts to the Nino 3.4 index through an EOF
/// basis, for the regional objective.
#[derive(Debug, Clone)]
pub struct RegionalScorer<T> {
    basis: EofBasis<T>,
    lats: Vec<T>,
    lons: Vec<T>,
}

impl<T: Real> RegionalScorer<T> {
    pub fn new(basis: EofBasis<T>, lats: Vec<T>, lons: Vec<T>) -> Result<Self> {
        if lats.len() != basis.n_locations() || lons.len() != basis.n_locations() {
            return Err(Error::dim(format!(
                "basis covers {} locations but {} lats / {} lons given",
                basis.n_locations(),
                lats.len(),
                lons.len()
            )));
        }
        Ok(RegionalScorer { basis, lats, lons })
    }

    /// Nino 3.4 averages of the fields reconstructed from coefficient rows.
    pub fn index_series(&self, coefficient_rows: &DMatrix<T>) -> Result<Vec<T>> {
        let fields = reconstruct(&self.basis, coefficient_rows)?;
        let mut series = Vec::with_capacity(fields.nrows());
        for t in 0..fields.nrows() {
            let row: Vec<T> = fields.row(t).iter().copied().collect();
            series.push(nino34_average(&row, &self.lats, &self.lons)?);
        }
        Ok(series)
    }
}

/// One evaluated grid point; failures keep their diagnostic text.
#[derive(Debug, Clone)]
pub struct GridPoint<T> {
    pub config: QesnConfig<T>,
    pub score: std::result::Result<T, String>,
}

/// Search outcome: the winning configuration plus the full score table in
/// deterministic grid order.
#[derive(Debug, Clone)]
pub struct TuningResult<T> {
    pub best_config: QesnConfig<T>,
    pub best_score: T,
    pub table: Vec<GridPoint<T>>,
}

/// True when `candidate` should replace `incumbent`: strictly lower score,
/// or an exact tie broken toward smaller `n_h`, then smaller `m`, then
/// larger `r_v` (the simpler, more regularized model).
pub(crate) fn candidate_wins<T: Real>(
    candidate_score: T,
    candidate: &QesnConfig<T>,
    incumbent_score: T,
    incumbent: &QesnConfig<T>,
) -> bool {
    if candidate_score < incumbent_score {
        return true;
    }
    if candidate_score > incumbent_score {
        return false;
    }
    if candidate.reservoir.n_h != incumbent.reservoir.n_h {
        return candidate.reservoir.n_h < incumbent.reservoir.n_h;
    }
    if candidate.embedding.m != incumbent.embedding.m {
        return candidate.embedding.m < incumbent.embedding.m;
    }
    if candidate.r_v != incumbent.r_v {
        return candidate.r_v > incumbent.r_v;
    }
    false
}

fn score_point<T: Real>(
    config: &QesnConfig<T>,
    responses: &DMatrix<T>,
    train_window: &Range<usize>,
    validation_window: &Range<usize>,
    regional: Option<&RegionalScorer<T>>,
) -> Result<T> {
    let train = responses.rows(0, train_window.end).clone_owned();
    let through_validation = responses.rows(0, validation_window.end).clone_owned();
    let forecast = run_ensemble(config, &train, &through_validation, validation_window.clone())?;
    let truth = responses
        .rows(validation_window.start, validation_window.len())
        .clone_owned();

    let score = match regional {
        None => mse(&forecast.mean, &truth)?,
        Some(scorer) => {
            let pred_index = scorer.index_series(&forecast.mean)?;
            let true_index = scorer.index_series(&truth)?;
            let n = conv::<T>(pred_index.len() as f64);
            pred_index
                .iter()
                .zip(&true_index)
                .map(|(p, t)| {
                    let d = *p - *t;
                    d * d
                })
                .fold(T::zero(), |a, b| a + b)
                / n
        }
    };
    if !Float::is_finite(score) {
        return Err(Error::NonFinite {
            context: "validation score",
        });
    }
    Ok(score)
}

/// Evaluate every grid point and return the argmin with the full table.
///
/// The training window must start at row 0; the validation window must
/// start exactly where training ends. Points are enumerated with `n_h`
/// outermost, then `nu`, `r_v`, `m` and `alpha`.
pub fn grid_search<T: Real>(
    grid: &TuningGrid<T>,
    base_config: &QesnConfig<T>,
    responses: &DMatrix<T>,
    train_window: Range<usize>,
    validation_window: Range<usize>,
    regional: Option<&RegionalScorer<T>>,
) -> Result<TuningResult<T>> {
    grid.validate()?;
    if train_window.start != 0 {
        return Err(Error::param("train_window", "must start at row 0"));
    }
    if train_window.is_empty() || validation_window.is_empty() {
        return Err(Error::param("windows", "training and validation must be non-empty"));
    }
    if validation_window.start != train_window.end {
        return Err(Error::param(
            "validation_window",
            "must start exactly where the training window ends",
        ));
    }
    if validation_window.end > responses.nrows() {
        return Err(Error::param(
            "validation_window",
            format!(
                "extends to row {} but the series has {} rows",
                validation_window.end,
                responses.nrows()
            ),
        ));
    }
    if matches!(grid.objective, Objective::RegionalMse) && regional.is_none() {
        return Err(Error::param(
            "objective",
            "regional_mse needs a RegionalScorer",
        ));
    }
    let regional = match grid.objective {
        Objective::OverallMse => None,
        Objective::RegionalMse => regional,
    };

    let mut configs = Vec::with_capacity(grid.len());
    for &n_h in &grid.n_h_values {
        for &nu in &grid.nu_values {
            for &r_v in &grid.r_v_values {
                for &m in &grid.m_values {
                    for &alpha in &grid.alpha_values {
                        let mut config = base_config.clone();
                        config.reservoir.n_h = n_h;
                        config.reservoir.nu = nu;
                        config.reservoir.alpha = alpha;
                        config.r_v = r_v;
                        config.embedding.m = m;
                        config.horizon = validation_window.len();
                        configs.push(config);
                    }
                }
            }
        }
    }

    let table: Vec<GridPoint<T>> = configs
        .into_par_iter()
        .map(|config| {
            let score = score_point(&config, responses, &train_window, &validation_window, regional)
                .map_err(|e| e.to_string());
            GridPoint { config, score }
        })
        .collect();

    let mut best: Option<(T, &QesnConfig<T>)> = None;
    for point in &table {
        if let Ok(score) = point.score {
            let wins = match &best {
                None => true,
                Some((inc_score, inc_config)) => {
                    candidate_wins(score, &point.config, *inc_score, inc_config)
                }
            };
            if wins {
                best = Some((score, &point.config));
            }
        }
    }

    match best {
        Some((score, config)) => Ok(TuningResult {
            best_config: config.clone(),
            best_score: score,
            table,
        }),
        None => {
            let first = table
                .iter()
                .find_map(|p| p.score.as_ref().err().cloned())
                .unwrap_or_else(|| "empty grid".to_string());
            Err(Error::AllGridPointsFailed { first })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSpec;
    use crate::eof::{eof_decompose, GriddedField};
    use crate::reservoir::{Activation, ReservoirSpec};
    use nalgebra::DMatrix;

    fn base_config() -> QesnConfig<f64> {
        QesnConfig {
            reservoir: ReservoirSpec {
                n_h: 12,
                nu: 0.5,
                pi_w: 0.5,
                pi_u: 0.5,
                a_w: 0.1,
                a_u: 0.1,
                alpha: 1.0,
                activation: Activation::Tanh,
                seed: 7,
            },
            embedding: EmbeddingSpec {
                lead: 2,
                tau: 1,
                m: 1,
                include_intercept: true,
                normalize: true,
            },
            r_v: 0.001,
            ensemble_size: 3,
            horizon: 6,
            include_quadratic: true,
            include_embedding: true,
            add_residual_noise: false,
            washout: 0,
        }
    }

    fn series(len: usize) -> DMatrix<f64> {
        DMatrix::from_fn(len, 2, |t, j| {
            let x = t as f64;
            if j == 0 {
                (x * 0.29).sin()
            } else {
                (x * 0.13).cos()
            }
        })
    }

    fn small_grid() -> TuningGrid<f64> {
        TuningGrid {
            n_h_values: vec![10, 14],
            nu_values: vec![0.4, 0.6],
            r_v_values: vec![0.001],
            m_values: vec![1, 2],
            alpha_values: vec![1.0],
            objective: Objective::OverallMse,
        }
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let grid = TuningGrid {
            n_h_values: vec![12],
            nu_values: vec![0.5],
            r_v_values: vec![0.001],
            m_values: vec![1],
            alpha_values: vec![1.0],
            objective: Objective::OverallMse,
        };
        let result = grid_search(&grid, &base_config(), &series(60), 0..50, 50..56, None).unwrap();
        assert_eq!(result.table.len(), 1);
        assert_eq!(result.best_config.reservoir.n_h, 12);
        assert_eq!(result.best_score, *result.table[0].score.as_ref().unwrap());
    }

    #[test]
    fn table_covers_the_cartesian_product_in_order() {
        let grid = small_grid();
        let result = grid_search(&grid, &base_config(), &series(60), 0..50, 50..56, None).unwrap();
        assert_eq!(result.table.len(), 8);
        // n_h outermost, then nu, r_v, m.
        let seen: Vec<(usize, f64, usize)> = result
            .table
            .iter()
            .map(|p| (p.config.reservoir.n_h, p.config.reservoir.nu, p.config.embedding.m))
            .collect();
        assert_eq!(seen[0], (10, 0.4, 1));
        assert_eq!(seen[1], (10, 0.4, 2));
        assert_eq!(seen[2], (10, 0.6, 1));
        assert_eq!(seen[7], (14, 0.6, 2));
    }

    #[test]
    fn best_score_is_the_table_minimum() {
        let result =
            grid_search(&small_grid(), &base_config(), &series(60), 0..50, 50..56, None).unwrap();
        for point in &result.table {
            let score = point.score.as_ref().unwrap();
            assert!(result.best_score <= *score);
        }
    }

    #[test]
    fn repeated_searches_are_identical() {
        let a = grid_search(&small_grid(), &base_config(), &series(60), 0..50, 50..56, None)
            .unwrap();
        let b = grid_search(&small_grid(), &base_config(), &series(60), 0..50, 50..56, None)
            .unwrap();
        for (pa, pb) in a.table.iter().zip(b.table.iter()) {
            assert_eq!(pa.score.as_ref().unwrap(), pb.score.as_ref().unwrap());
        }
        assert_eq!(a.best_score, b.best_score);
    }

    #[test]
    fn ties_prefer_small_n_h_then_small_m_then_large_r_v() {
        let mut a = base_config();
        let mut b = base_config();
        a.reservoir.n_h = 10;
        b.reservoir.n_h = 20;
        assert!(candidate_wins(1.0, &a, 1.0, &b));
        assert!(!candidate_wins(1.0, &b, 1.0, &a));

        b.reservoir.n_h = 10;
        a.embedding.m = 2;
        b.embedding.m = 4;
        assert!(candidate_wins(1.0, &a, 1.0, &b));

        b.embedding.m = 2;
        a.r_v = 0.01;
        b.r_v = 0.001;
        assert!(candidate_wins(1.0, &a, 1.0, &b));
        // Lower score always dominates the preferences.
        assert!(candidate_wins(0.9, &b, 1.0, &a));
        // Full tie keeps the incumbent.
        assert!(!candidate_wins(1.0, &a, 1.0, &a.clone()));
    }

    #[test]
    fn failed_points_are_recorded_not_fatal() {
        // A degenerate base reservoir makes every member fail.
        let mut config = base_config();
        config.reservoir.pi_w = 1e-9;
        let grid = TuningGrid {
            n_h_values: vec![8],
            nu_values: vec![0.5],
            r_v_values: vec![0.001],
            m_values: vec![1],
            alpha_values: vec![1.0],
            objective: Objective::OverallMse,
        };
        let err = grid_search(&grid, &config, &series(60), 0..50, 50..56, None);
        match err {
            Err(Error::AllGridPointsFailed { first }) => {
                assert!(first.contains("degenerate"), "diagnostic: {first}");
            }
            other => panic!("expected AllGridPointsFailed, got {other:?}"),
        }
    }

    #[test]
    fn window_validation() {
        let grid = small_grid();
        let config = base_config();
        let data = series(60);
        assert!(grid_search(&grid, &config, &data, 5..50, 50..56, None).is_err());
        assert!(grid_search(&grid, &config, &data, 0..50, 51..56, None).is_err());
        assert!(grid_search(&grid, &config, &data, 0..50, 50..61, None).is_err());
        assert!(grid_search(&grid, &config, &data, 0..0, 0..6, None).is_err());
    }

    #[test]
    fn regional_objective_needs_a_scorer() {
        let grid = TuningGrid {
            objective: Objective::RegionalMse,
            ..small_grid()
        };
        let err = grid_search(&grid, &base_config(), &series(60), 0..50, 50..56, None);
        assert!(matches!(err, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn regional_objective_scores_through_the_basis() {
        // Low-rank gridded data whose coefficients drive the model.
        let n_loc = 12;
        let lats: Vec<f64> = (0..n_loc).map(|c| -4.0 + (c % 4) as f64 * 2.0).collect();
        let lons: Vec<f64> = (0..n_loc).map(|c| 200.0 + (c / 4) as f64 * 10.0).collect();
        let t_len = 70;
        let values = DMatrix::from_fn(t_len, n_loc, |t, c| {
            let a = (t as f64 * 0.25).sin();
            let b = (t as f64 * 0.11).cos();
            a * (c as f64 * 0.4).cos() + 0.5 * b * (c as f64 * 0.15).sin()
        });
        let field = GriddedField {
            values,
            lats: lats.clone(),
            lons: lons.clone(),
            time_index: (0..t_len)
                .map(|t| (2000 + (t / 12) as i32, (t % 12 + 1) as u32))
                .collect(),
        };
        let basis = eof_decompose(&field, 2).unwrap();
        let responses = basis.coefficients.clone();
        let scorer = RegionalScorer::new(basis, lats, lons).unwrap();

        let grid = TuningGrid {
            n_h_values: vec![10],
            nu_values: vec![0.5],
            r_v_values: vec![0.001],
            m_values: vec![1],
            alpha_values: vec![1.0],
            objective: Objective::RegionalMse,
        };
        let result =
            grid_search(&grid, &base_config(), &responses, 0..60, 60..66, Some(&scorer)).unwrap();
        assert!(result.best_score.is_finite());
        assert_eq!(result.table.len(), 1);
    }
}
