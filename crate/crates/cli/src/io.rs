//! CSV file formats.
//!
//! Matrix CSV: a header row of variable identifiers with `time` first, then
//! one row per period; values are written in round-trip-exact scientific
//! notation. Gridded CSV adds two metadata lines after the header carrying
//! the latitude and longitude of every column, and labels rows `YYYY-MM`.
//! Score reports and tuning tables are flat key/value and one-row-per-point
//! CSV blocks.

use nalgebra::DMatrix;
use qesn::tuning::TuningResult;
use qesn::{GriddedField64, ScoreReport64};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Round-trip-exact float formatting for data values.
pub fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))
}

fn parse_value(field: &str, path: &Path, line_no: usize) -> CliResult<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        CliError::data(format!(
            "{} line {line_no}: cannot parse `{field}` as a number",
            path.display()
        ))
    })
}

/// Write a plain matrix with `time` labels and one column per identifier.
pub fn write_matrix_csv(
    path: &Path,
    ids: &[String],
    time_labels: &[String],
    values: &DMatrix<f64>,
) -> CliResult<()> {
    assert_eq!(ids.len(), values.ncols());
    assert_eq!(time_labels.len(), values.nrows());
    let mut out = String::new();
    out.push_str("time");
    for id in ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (t, label) in time_labels.iter().enumerate() {
        out.push_str(label);
        for j in 0..values.ncols() {
            let _ = write!(out, ",{}", fmt_float(values[(t, j)]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Read a plain matrix CSV back as identifiers, time labels and values.
pub fn read_matrix_csv(path: &Path) -> CliResult<(Vec<String>, Vec<String>, DMatrix<f64>)> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{} is empty", path.display())))?;
    let ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    if ids.is_empty() {
        return Err(CliError::data(format!(
            "{} has no variable columns",
            path.display()
        )));
    }

    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("").trim().to_string();
        let row: CliResult<Vec<f64>> = fields.map(|f| parse_value(f, path, i + 1)).collect();
        let row = row?;
        if row.len() != ids.len() {
            return Err(CliError::data(format!(
                "{} line {}: expected {} values, found {}",
                path.display(),
                i + 1,
                ids.len(),
                row.len()
            )));
        }
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{} has no data rows", path.display())));
    }
    let values = DMatrix::from_fn(rows.len(), ids.len(), |i, j| rows[i][j]);
    Ok((ids, labels, values))
}

fn format_month(year: i32, month: u32) -> String {
    format!("{year:04}-{month:02}")
}

fn parse_month(label: &str, path: &Path, line_no: usize) -> CliResult<(i32, u32)> {
    let bad = || {
        CliError::data(format!(
            "{} line {line_no}: time label `{label}` is not YYYY-MM",
            path.display()
        ))
    };
    let (y, m) = label.trim().split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    Ok((year, month))
}

/// Write a gridded field: header, `lat` and `lon` metadata lines, then
/// `YYYY-MM`-labelled rows.
pub fn write_gridded_csv(path: &Path, field: &GriddedField64) -> CliResult<()> {
    let n = field.n_locations();
    let mut out = String::new();
    out.push_str("time");
    for c in 0..n {
        let _ = write!(out, ",c{:04}", c + 1);
    }
    out.push('\n');
    out.push_str("lat");
    for lat in &field.lats {
        let _ = write!(out, ",{lat}");
    }
    out.push('\n');
    out.push_str("lon");
    for lon in &field.lons {
        let _ = write!(out, ",{lon}");
    }
    out.push('\n');
    for (t, (year, month)) in field.time_index.iter().enumerate() {
        out.push_str(&format_month(*year, *month));
        for j in 0..n {
            let _ = write!(out, ",{}", fmt_float(field.values[(t, j)]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Read a gridded CSV produced by [`write_gridded_csv`] (or following the
/// same schema).
pub fn read_gridded_csv(path: &Path) -> CliResult<GriddedField64> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{} is empty", path.display())))?;
    let n = header.split(',').count() - 1;
    if n == 0 {
        return Err(CliError::data(format!("{} has no cells", path.display())));
    }

    let mut expect_meta = |name: &str| -> CliResult<Vec<f64>> {
        let (i, line) = lines.next().ok_or_else(|| {
            CliError::data(format!("{}: missing `{name}` metadata line", path.display()))
        })?;
        let mut fields = line.split(',');
        let tag = fields.next().unwrap_or("").trim();
        if tag != name {
            return Err(CliError::data(format!(
                "{} line {}: expected `{name}` metadata line, found `{tag}`",
                path.display(),
                i + 1
            )));
        }
        let vals: CliResult<Vec<f64>> = fields.map(|f| parse_value(f, path, i + 1)).collect();
        let vals = vals?;
        if vals.len() != n {
            return Err(CliError::data(format!(
                "{} line {}: `{name}` has {} entries for {} cells",
                path.display(),
                i + 1,
                vals.len(),
                n
            )));
        }
        Ok(vals)
    };
    let lats = expect_meta("lat")?;
    let lons = expect_meta("lon")?;

    let mut time_index = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("");
        time_index.push(parse_month(label, path, i + 1)?);
        let row: CliResult<Vec<f64>> = fields.map(|f| parse_value(f, path, i + 1)).collect();
        let row = row?;
        if row.len() != n {
            return Err(CliError::data(format!(
                "{} line {}: expected {} values, found {}",
                path.display(),
                i + 1,
                n,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{} has no data rows", path.display())));
    }

    let field = GriddedField64 {
        values: DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]),
        lats,
        lons,
        time_index,
    };
    field.validate().map_err(CliError::from)?;
    Ok(field)
}

/// Write the EOF basis with cell coordinates, the removed column means and
/// one column per component.
pub fn write_basis_csv(path: &Path, field_lats: &[f64], field_lons: &[f64], basis: &qesn::EofBasis64) -> CliResult<()> {
    let mut out = String::new();
    out.push_str("cell,lat,lon,mean");
    for k in 0..basis.n_eof() {
        let _ = write!(out, ",eof{}", k + 1);
    }
    out.push('\n');
    for j in 0..basis.n_locations() {
        let _ = write!(
            out,
            "c{:04},{},{},{}",
            j + 1,
            field_lats[j],
            field_lons[j],
            fmt_float(basis.column_means[j])
        );
        for k in 0..basis.n_eof() {
            let _ = write!(out, ",{}", fmt_float(basis.psi[(j, k)]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Write member trajectories in long layout: `member,time,<ids...>`.
pub fn write_members_csv(
    path: &Path,
    ids: &[String],
    time_labels: &[String],
    members: &[DMatrix<f64>],
) -> CliResult<()> {
    let mut out = String::new();
    out.push_str("member,time");
    for id in ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (k, m) in members.iter().enumerate() {
        for (t, label) in time_labels.iter().enumerate() {
            let _ = write!(out, "{},{}", k + 1, label);
            for j in 0..m.ncols() {
                let _ = write!(out, ",{}", fmt_float(m[(t, j)]));
            }
            out.push('\n');
        }
    }
    write_file(path, &out)
}

/// Read member trajectories written by [`write_members_csv`].
pub fn read_members_csv(path: &Path) -> CliResult<Vec<DMatrix<f64>>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{} is empty", path.display())))?;
    let n_vars = header.split(',').count() - 2;

    let mut members: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let member: usize = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| CliError::data(format!("{} line {}: bad member id", path.display(), i + 1)))?;
        let _time = fields.next();
        let row: CliResult<Vec<f64>> = fields.map(|f| parse_value(f, path, i + 1)).collect();
        if member == 0 || member > members.len() + 1 {
            return Err(CliError::data(format!(
                "{} line {}: member ids must be contiguous from 1",
                path.display(),
                i + 1
            )));
        }
        if member == members.len() + 1 {
            members.push(Vec::new());
        }
        members[member - 1].push(row?);
    }
    members
        .into_iter()
        .map(|rows| {
            if rows.is_empty() {
                return Err(CliError::data(format!("{}: empty member block", path.display())));
            }
            Ok(DMatrix::from_fn(rows.len(), n_vars, |i, j| rows[i][j]))
        })
        .collect()
}

/// Write a score report as a flat `metric,value` block.
pub fn write_score_csv(path: &Path, report: &ScoreReport64) -> CliResult<()> {
    let mut out = String::from("metric,value\n");
    let _ = writeln!(out, "overall_mse,{}", fmt_float(report.overall_mse));
    if let Some(r) = report.regional_mse {
        let _ = writeln!(out, "nino34_mse,{}", fmt_float(r));
    }
    let _ = writeln!(out, "crps,{}", fmt_float(report.crps));
    let _ = writeln!(out, "coverage_95,{}", fmt_float(report.coverage_95));
    write_file(path, &out)
}

/// Read a score report block back as `(metric, value)` pairs.
pub fn read_score_csv(path: &Path) -> CliResult<Vec<(String, f64)>> {
    let text = read_file(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (name, value) = line.split_once(',').ok_or_else(|| {
            CliError::data(format!("{} line {}: expected metric,value", path.display(), i + 1))
        })?;
        pairs.push((name.to_string(), parse_value(value, path, i + 1)?));
    }
    Ok(pairs)
}

/// Write the full tuning table, one grid point per row; failed points keep
/// an empty score and a diagnostic message.
pub fn write_tuning_table_csv(path: &Path, result: &TuningResult<f64>) -> CliResult<()> {
    let mut out = String::from("n_h,nu,r_v,m,alpha,score,error\n");
    for point in &result.table {
        let c = &point.config;
        let (score, error) = match &point.score {
            Ok(s) => (fmt_float(*s), String::new()),
            Err(e) => (String::new(), e.replace(',', ";")),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{score},{error}",
            c.reservoir.n_h,
            fmt_float(c.reservoir.nu),
            fmt_float(c.r_v),
            c.embedding.m,
            fmt_float(c.reservoir.alpha),
        );
    }
    write_file(path, &out)
}

/// Integer time labels for plain response matrices.
pub fn index_labels(range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|t| t.to_string()).collect()
}

/// `v1..vN` identifiers for unnamed variables.
pub fn variable_ids(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("v{j}")).collect()
}

/// `YYYY-MM` labels for a slice of a gridded time index.
pub fn month_labels(time_index: &[(i32, u32)]) -> Vec<String> {
    time_index
        .iter()
        .map(|(y, m)| format_month(*y, *m))
        .collect()
}
