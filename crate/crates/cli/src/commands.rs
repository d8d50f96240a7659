//! Subcommand implementations tying the pipeline together.

use nalgebra::DMatrix;
use std::ops::Range;
use std::path::PathBuf;

use qesn::tuning::RegionalScorer;
use qesn::{
    compute_anomalies, crps_fields, eof_decompose, interval_coverage, mse, nino34_average,
    project, reconstruct, run_ensemble, CrpsVariant, EnsembleForecast, EofBasis64, GriddedField64,
    ScoreReport64,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io;

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Simulate the benchmark system and write observed/latent matrices.
pub fn cmd_simulate(ctx: &Ctx) -> CliResult<()> {
    let config = ctx.config.lorenz96_config()?;
    let run = qesn::simulate(&config)?;
    let ids = io::variable_ids(config.n_sites);
    let labels = io::index_labels(0..config.n_periods);
    io::write_matrix_csv(&ctx.out("observed.csv"), &ids, &labels, &run.observed)?;
    io::write_matrix_csv(&ctx.out("latent.csv"), &ids, &labels, &run.latent)?;
    println!(
        "simulate: wrote {} periods x {} sites to {}",
        config.n_periods,
        config.n_sites,
        ctx.out_dir.display()
    );
    Ok(())
}

fn read_gridded_input(ctx: &Ctx) -> CliResult<GriddedField64> {
    let data = ctx.config.data()?;
    let path = data
        .gridded
        .as_ref()
        .ok_or_else(|| CliError::config("this pipeline needs data.gridded"))?;
    if !path.exists() {
        return Err(CliError::config(format!(
            "data.gridded path {} does not exist",
            path.display()
        )));
    }
    io::read_gridded_csv(path)
}

fn anomalies_of(ctx: &Ctx, raw: &GriddedField64) -> CliResult<(GriddedField64, bool)> {
    let eof_cfg = ctx
        .config
        .eof
        .as_ref()
        .ok_or_else(|| CliError::config("gridded pipelines need an [eof] section"))?;
    match (eof_cfg.climatology_start, eof_cfg.climatology_end) {
        (Some(start), Some(end)) => Ok((compute_anomalies(raw, start, end)?, true)),
        (None, None) => Ok((raw.clone(), false)),
        _ => Err(CliError::config(
            "set both climatology_start and climatology_end, or neither",
        )),
    }
}

fn field_rows(field: &GriddedField64, range: Range<usize>) -> GriddedField64 {
    GriddedField64 {
        values: field.values.rows(range.start, range.len()).clone_owned(),
        lats: field.lats.clone(),
        lons: field.lons.clone(),
        time_index: field.time_index[range].to_vec(),
    }
}

/// Compute anomalies and the EOF basis of a gridded field; standalone
/// analysis over every row.
pub fn cmd_eof(ctx: &Ctx) -> CliResult<()> {
    let raw = read_gridded_input(ctx)?;
    let (anomalies, removed_cycle) = anomalies_of(ctx, &raw)?;
    let n_eof = ctx.config.eof.as_ref().expect("checked above").n_eof;

    if removed_cycle {
        io::write_gridded_csv(&ctx.out("anomalies.csv"), &anomalies)?;
    }
    let basis = eof_decompose(&anomalies, n_eof)?;
    io::write_basis_csv(&ctx.out("basis.csv"), &anomalies.lats, &anomalies.lons, &basis)?;

    let coeff_ids: Vec<String> = (1..=n_eof).map(|k| format!("eof{k}")).collect();
    let labels = io::month_labels(&anomalies.time_index);
    io::write_matrix_csv(
        &ctx.out("coefficients.csv"),
        &coeff_ids,
        &labels,
        &basis.coefficients,
    )?;

    let ev = DMatrix::from_fn(n_eof, 1, |k, _| basis.explained_variance[k]);
    io::write_matrix_csv(
        &ctx.out("explained_variance.csv"),
        &["fraction".to_string()],
        &coeff_ids,
        &ev,
    )?;

    let spanned = project(&basis, &reconstruct(&basis, &basis.coefficients)?)?;
    let round_trip =
        (&spanned - &basis.coefficients).norm() / basis.coefficients.norm().max(1e-300);
    println!(
        "eof: {} components over {} cells; leading share {:.4}, project/reconstruct round trip {:.3e}",
        n_eof,
        anomalies.n_locations(),
        basis.explained_variance[0],
        round_trip
    );
    Ok(())
}

/// Responses ready for the model, with everything needed to score and write
/// outputs afterwards.
#[allow(clippy::large_enum_variant)]
enum LoadedData {
    Plain {
        responses: DMatrix<f64>,
        labels: Vec<String>,
    },
    Gridded {
        anomalies: GriddedField64,
        basis: EofBasis64,
        responses: DMatrix<f64>,
    },
}

impl LoadedData {
    fn responses(&self) -> &DMatrix<f64> {
        match self {
            LoadedData::Plain { responses, .. } => responses,
            LoadedData::Gridded { responses, .. } => responses,
        }
    }
}

/// Load [data] for modelling. Gridded inputs are reduced to EOF
/// coefficients with the basis fit on the first `train_end` rows only, so
/// holdout rows never shape the basis.
fn load_data(ctx: &Ctx, train_end: usize) -> CliResult<LoadedData> {
    let data = ctx.config.data()?;
    match (&data.responses, &data.gridded) {
        (Some(path), None) => {
            if !path.exists() {
                return Err(CliError::config(format!(
                    "data.responses path {} does not exist",
                    path.display()
                )));
            }
            let (_, labels, responses) = io::read_matrix_csv(path)?;
            Ok(LoadedData::Plain { responses, labels })
        }
        (None, Some(_)) => {
            let raw = read_gridded_input(ctx)?;
            let (anomalies, _) = anomalies_of(ctx, &raw)?;
            let n_eof = ctx.config.eof.as_ref().expect("checked above").n_eof;
            if train_end == 0 || train_end > anomalies.n_times() {
                return Err(CliError::config(format!(
                    "train_end {} outside the {} available rows",
                    train_end,
                    anomalies.n_times()
                )));
            }
            let basis = eof_decompose(&field_rows(&anomalies, 0..train_end), n_eof)?;
            let responses = project(&basis, &anomalies.values)?;
            Ok(LoadedData::Gridded {
                anomalies,
                basis,
                responses,
            })
        }
        (Some(_), Some(_)) => Err(CliError::config(
            "set either data.responses or data.gridded, not both",
        )),
        (None, None) => Err(CliError::config(
            "the [data] section needs responses or gridded",
        )),
    }
}

/// Grid-search hyper-parameters on the holdout validation window.
pub fn cmd_tune(ctx: &Ctx) -> CliResult<()> {
    let windows = ctx.config.windows()?;
    let validation_len = windows.validation_len.ok_or_else(|| {
        CliError::config("tune needs windows.validation_len")
    })?;
    let train_end = windows.train_end;
    let grid = ctx.config.tuning_grid()?;
    let base = ctx.config.qesn_config()?;

    let data = load_data(ctx, train_end)?;
    let scorer = match &data {
        LoadedData::Gridded {
            anomalies, basis, ..
        } => Some(RegionalScorer::new(
            basis.clone(),
            anomalies.lats.clone(),
            anomalies.lons.clone(),
        )?),
        LoadedData::Plain { .. } => None,
    };

    let result = qesn::grid_search(
        &grid,
        &base,
        data.responses(),
        0..train_end,
        train_end..train_end + validation_len,
        scorer.as_ref(),
    )
    .map_err(|e| match e {
        qesn::Error::InvalidParameter { .. } => CliError::config(e.to_string()),
        other => CliError::from(other),
    })?;

    io::write_tuning_table_csv(&ctx.out("tuning_table.csv"), &result)?;
    std::fs::write(
        ctx.out("best_config.toml"),
        ctx.config.best_config_toml(&result),
    )
    .map_err(|e| CliError::data(format!("writing best_config.toml: {e}")))?;

    let c = &result.best_config;
    println!(
        "tune: {} points; best n_h={} nu={} r_v={} m={} alpha={} score={:.6}",
        result.table.len(),
        c.reservoir.n_h,
        c.reservoir.nu,
        c.r_v,
        c.embedding.m,
        c.reservoir.alpha,
        result.best_score
    );
    Ok(())
}

fn nino34_series(field: &GriddedField64, rows: &DMatrix<f64>) -> CliResult<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.nrows());
    for t in 0..rows.nrows() {
        let row: Vec<f64> = rows.row(t).iter().copied().collect();
        out.push(nino34_average(&row, &field.lats, &field.lons)?);
    }
    Ok(out)
}

fn series_mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64
}

/// Fit the ensemble, forecast the holdout window and score it.
pub fn cmd_forecast(ctx: &Ctx) -> CliResult<()> {
    let windows = ctx.config.windows()?;
    let train_end = windows.train_end;
    let config = ctx.config.qesn_config()?;
    let n_f = config.horizon;
    let forecast_start = windows.forecast_start.unwrap_or(train_end);
    let forecast_times = forecast_start..forecast_start + n_f;

    let data = load_data(ctx, train_end)?;
    let responses = data.responses();
    if train_end == 0 || train_end > responses.nrows() {
        return Err(CliError::config(format!(
            "train_end {} outside the {} available rows",
            train_end,
            responses.nrows()
        )));
    }
    if forecast_times.end > responses.nrows() {
        return Err(CliError::config(format!(
            "forecast window {}..{} needs truth rows; the series has only {}",
            forecast_times.start,
            forecast_times.end,
            responses.nrows()
        )));
    }

    let train = responses.rows(0, train_end).clone_owned();
    let forecast = run_ensemble(&config, &train, responses, forecast_times.clone())?;

    let report = match &data {
        LoadedData::Plain { responses, labels } => {
            let truth = responses.rows(forecast_times.start, n_f).clone_owned();
            let ids = io::variable_ids(truth.ncols());
            let time_labels: Vec<String> = if labels.len() >= forecast_times.end {
                labels[forecast_times.clone()].to_vec()
            } else {
                io::index_labels(forecast_times.clone())
            };

            io::write_members_csv(&ctx.out("members.csv"), &ids, &time_labels, &forecast.members)?;
            io::write_matrix_csv(&ctx.out("mean.csv"), &ids, &time_labels, &forecast.mean)?;
            io::write_matrix_csv(&ctx.out("lower.csv"), &ids, &time_labels, &forecast.lower)?;
            io::write_matrix_csv(&ctx.out("upper.csv"), &ids, &time_labels, &forecast.upper)?;
            io::write_matrix_csv(&ctx.out("truth.csv"), &ids, &time_labels, &truth)?;

            ScoreReport64 {
                overall_mse: mse(&forecast.mean, &truth)?,
                regional_mse: None,
                crps: crps_fields(&forecast.members, &truth, CrpsVariant::Plain)?,
                coverage_95: interval_coverage(&forecast.lower, &forecast.upper, &truth)?,
            }
        }
        LoadedData::Gridded {
            anomalies, basis, ..
        } => {
            // Score in field space: reconstruct every member trajectory and
            // reduce those to the mean and intervals.
            let coeff_members = &forecast.members;
            let field_members: Vec<DMatrix<f64>> = coeff_members
                .iter()
                .map(|m| reconstruct(basis, m))
                .collect::<Result<_, _>>()?;
            let fields = EnsembleForecast::from_members(field_members, config.clone())?;
            let truth_field = field_rows(anomalies, forecast_times.clone());

            let coeff_ids: Vec<String> = (1..=basis.n_eof()).map(|k| format!("eof{k}")).collect();
            let time_labels = io::month_labels(&truth_field.time_index);
            io::write_members_csv(
                &ctx.out("members.csv"),
                &coeff_ids,
                &time_labels,
                coeff_members,
            )?;
            io::write_basis_csv(&ctx.out("basis.csv"), &anomalies.lats, &anomalies.lons, basis)?;
            for (name, values) in [
                ("mean.csv", &fields.mean),
                ("lower.csv", &fields.lower),
                ("upper.csv", &fields.upper),
                ("truth.csv", &truth_field.values),
            ] {
                let gridded = GriddedField64 {
                    values: values.clone(),
                    lats: anomalies.lats.clone(),
                    lons: anomalies.lons.clone(),
                    time_index: truth_field.time_index.clone(),
                };
                io::write_gridded_csv(&ctx.out(name), &gridded)?;
            }

            // Plot-ready regional index table: truth, mean and interval of
            // the member index distribution.
            let true_index = nino34_series(anomalies, &truth_field.values)?;
            let index_members: Vec<DMatrix<f64>> = fields
                .members
                .iter()
                .map(|m| {
                    nino34_series(anomalies, m).map(|s| DMatrix::from_fn(s.len(), 1, |t, _| s[t]))
                })
                .collect::<CliResult<_>>()?;
            let index = EnsembleForecast::from_members(index_members, config.clone())?;
            let mut table = DMatrix::zeros(n_f, 4);
            for t in 0..n_f {
                table[(t, 0)] = true_index[t];
                table[(t, 1)] = index.mean[(t, 0)];
                table[(t, 2)] = index.lower[(t, 0)];
                table[(t, 3)] = index.upper[(t, 0)];
            }
            let cols = ["truth", "mean", "lower", "upper"].map(String::from);
            io::write_matrix_csv(&ctx.out("nino34.csv"), &cols, &time_labels, &table)?;

            let mean_index: Vec<f64> = (0..n_f).map(|t| table[(t, 1)]).collect();
            ScoreReport64 {
                overall_mse: mse(&fields.mean, &truth_field.values)?,
                regional_mse: Some(series_mse(&mean_index, &true_index)),
                crps: crps_fields(&fields.members, &truth_field.values, CrpsVariant::Plain)?,
                coverage_95: interval_coverage(&fields.lower, &fields.upper, &truth_field.values)?,
            }
        }
    };

    report.validate()?;
    io::write_score_csv(&ctx.out("score.csv"), &report)?;
    match report.regional_mse {
        Some(r) => println!(
            "forecast: K={} over {}..{}; mse={:.6} nino34_mse={:.6} crps={:.6} coverage={:.4}",
            forecast.ensemble_size(),
            forecast_times.start,
            forecast_times.end,
            report.overall_mse,
            r,
            report.crps,
            report.coverage_95
        ),
        None => println!(
            "forecast: K={} over {}..{}; mse={:.6} crps={:.6} coverage={:.4}",
            forecast.ensemble_size(),
            forecast_times.start,
            forecast_times.end,
            report.overall_mse,
            report.crps,
            report.coverage_95
        ),
    }
    Ok(())
}
