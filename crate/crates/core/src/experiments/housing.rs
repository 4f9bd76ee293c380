//! Median house-price prediction on the Boston housing data.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::methods::{Estimator, Layouts, Method, Solver};
use super::rng::{stream, RNG_ALGORITHM};
use super::table::{param, ResultTable};
use crate::error::{Error, Result};
use crate::types::LinearSystem;

/// Thirteen features plus the price.
pub const HOUSING_COLUMNS: usize = 14;

/// Feature rows and prices, one house per row.
#[derive(Debug, Clone, PartialEq)]
pub struct HousingDataset {
    pub features: DMatrix<f64>,
    pub prices: DVector<f64>,
    pub names: Vec<String>,
}

impl HousingDataset {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

fn default_names() -> Vec<String> {
    (1..HOUSING_COLUMNS).map(|i| format!("x{i}")).collect()
}

/// Parses housing CSV text. A first line with any non-numeric cell is taken
/// as the header. Rows in errors are line numbers in the input, from 1.
pub fn parse_housing(text: &str) -> Result<HousingDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names = None;
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: idx + 1,
            column: 0,
            message: e.to_string(),
        })?;
        let row = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != HOUSING_COLUMNS {
            return Err(Error::WrongColumnCount {
                row,
                expected: HOUSING_COLUMNS,
                found: record.len(),
            });
        }
        if idx == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            names = Some(record.iter().take(HOUSING_COLUMNS - 1).map(str::to_string).collect());
            continue;
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: col + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: col + 1,
                    message: "value is not finite".into(),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "no data rows".into(),
        });
    }
    let all = DMatrix::from_row_slice(rows, HOUSING_COLUMNS, &values);
    Ok(HousingDataset {
        features: all.columns(0, HOUSING_COLUMNS - 1).into_owned(),
        prices: all.column(HOUSING_COLUMNS - 1).into_owned(),
        names: names.unwrap_or_else(default_names),
    })
}

pub fn load_housing(path: &Path) -> Result<HousingDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_housing(&text)
}

/// Column means and standard deviations of `rows` (constant columns get 1).
fn moments(x: &DMatrix<f64>, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let k = rows.len() as f64;
    (0..x.ncols())
        .map(|c| {
            let mean = rows.iter().map(|&r| x[(r, c)]).sum::<f64>() / k;
            let var = rows.iter().map(|&r| (x[(r, c)] - mean).powi(2)).sum::<f64>() / k;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .unzip()
}

/// Standardized features of `rows` with a trailing intercept column.
fn design(x: &DMatrix<f64>, rows: &[usize], mean: &[f64], sd: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    DMatrix::from_fn(rows.len(), p + 1, |i, c| {
        if c == p {
            1.0
        } else {
            (x[(rows[i], c)] - mean[c]) / sd[c]
        }
    })
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Train/test split for one trial: `round(rho · N)` training rows drawn
/// uniformly, the rest for testing. Both lists are sorted.
pub fn split(len: usize, rho: f64, seed: u64, trial: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut stream(seed, trial as u64));
    let n_train = ((rho * len as f64).round() as usize).min(len);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Absolute error of the predicted test-set median and fit seconds, or
/// `None` when the training split is too small to fit.
fn one_trial(
    data: &HousingDataset,
    rho: f64,
    seed: u64,
    trial: usize,
    estimators: &[Box<dyn Estimator>],
) -> Result<Option<Vec<(f64, f64)>>> {
    let (train, test) = split(data.len(), rho, seed, trial);
    if train.len() < HOUSING_COLUMNS || test.is_empty() {
        return Ok(None);
    }
    let (mean, sd) = moments(&data.features, &train);
    let w_train = design(&data.features, &train, &mean, &sd);
    let w_test = design(&data.features, &test, &mean, &sd);
    let y = DVector::from_iterator(train.len(), train.iter().map(|&r| data.prices[r]));
    let mut truth: Vec<f64> = test.iter().map(|&r| data.prices[r]).collect();
    let true_median = median(&mut truth);
    let system = LinearSystem::new(w_train, y)?;
    let layouts = Layouts::default();
    let mut out = Vec::with_capacity(estimators.len());
    for e in estimators {
        let est = e.estimate(&system, &layouts)?;
        let mut pred: Vec<f64> = (&w_test * &est.x_hat).iter().copied().collect();
        out.push(((median(&mut pred) - true_median).abs(), est.seconds));
    }
    Ok(Some(out))
}

/// Mean absolute error of the predicted median price and mean fit time per
/// method, over `trials` random splits.
pub fn run_housing(
    data: &HousingDataset,
    rho: f64,
    trials: usize,
    seed: u64,
    methods: &[Method],
) -> Result<ResultTable> {
    let estimators: Vec<Box<dyn Estimator>> = methods
        .iter()
        .map(|&m| Box::new(Solver::new(m)) as Box<dyn Estimator>)
        .collect();
    run_housing_with(data, rho, trials, seed, &estimators)
}

pub fn run_housing_with(
    data: &HousingDataset,
    rho: f64,
    trials: usize,
    seed: u64,
    estimators: &[Box<dyn Estimator>],
) -> Result<ResultTable> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("rho must lie in (0, 1), got {rho}")));
    }
    let results: Vec<Result<Option<Vec<(f64, f64)>>>> = (0..trials)
        .into_par_iter()
        .map(|t| one_trial(data, rho, seed, t, estimators))
        .collect();
    let mut kept = Vec::new();
    for r in results {
        if let Some(v) = r? {
            kept.push(v);
        }
    }
    let skipped = trials - kept.len();
    if skipped > 0 {
        log::warn!("housing: skipped {skipped} trial(s) with fewer than {HOUSING_COLUMNS} training rows");
    }
    let mut table = ResultTable::default();
    table.meta.insert("rng".into(), RNG_ALGORITHM.into());
    table.meta.insert("experiment".into(), "housing".into());
    let p = param(rho);
    let done = kept.len();
    for (k, e) in estimators.iter().enumerate() {
        let name = e.name();
        let (err, secs) = if done == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let d = done as f64;
            (
                kept.iter().map(|v| v[k].0).sum::<f64>() / d,
                kept.iter().map(|v| v[k].1).sum::<f64>() / d,
            )
        };
        table.push(p.clone(), name.clone(), "mean_abs_error", err, done, seed);
        table.push(p.clone(), name.clone(), "mean_seconds", secs, done, seed);
        table.push(p.clone(), name, "skipped_trials", skipped as f64, trials, seed);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> String {
        (0..HOUSING_COLUMNS).map(|c| format!("{}", v + c as f64)).collect::<Vec<_>>().join(",")
    }

    #[test]
    fn header_is_optional() {
        let header: String = (0..HOUSING_COLUMNS).map(|c| format!("c{c}")).collect::<Vec<_>>().join(",");
        let body = format!("{}\n{}\n", row(0.0), row(1.0));
        let a = parse_housing(&body).unwrap();
        let b = parse_housing(&format!("{header}\n{body}")).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.len(), 2);
        assert_eq!(b.names[0], "c0");
        assert_eq!(a.prices[1], 1.0 + 13.0);
    }

    #[test]
    fn thirteen_columns_rejected() {
        let line: String = (0..13).map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match parse_housing(&line) {
            Err(Error::WrongColumnCount { expected: 14, found: 13, row: 1 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let mut lines: Vec<String> = (0..9).map(|i| row(i as f64)).collect();
        lines[6] = lines[6].replacen("6", "abc", 1);
        match parse_housing(&lines.join("\n")) {
            Err(Error::Parse { row: 7, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_partitions_rows() {
        let (train, test) = split(506, 0.5, 3, 0);
        assert_eq!(train.len(), 253);
        let mut all = train.clone();
        all.extend(&test);
        all.sort_unstable();
        assert_eq!(all, (0..506).collect::<Vec<_>>());
        assert_ne!(split(506, 0.5, 3, 1).0, train);
    }

    #[test]
    fn tiny_training_split_is_skipped() {
        let text: Vec<String> = (0..20).map(|i| row(i as f64)).collect();
        let data = parse_housing(&text.join("\n")).unwrap();
        let t = run_housing(&data, 0.1, 3, 1, &[Method::SdRvm]).unwrap();
        assert_eq!(t.get("0.10", "sdrvm", "skipped_trials"), Some(3.0));
    }
}
