use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "sweep_param,method,metric,value,trials,seed";

/// One line of a result table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub method: String,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ResultRow {
    /// Wall-clock metrics vary between runs and are only written on request.
    pub fn is_timing(&self) -> bool {
        self.metric.contains("seconds") || self.metric.starts_with("runtime_hist")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<ResultRow>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    meta: &'a BTreeMap<String, String>,
    rows: Vec<&'a ResultRow>,
}

impl ResultTable {
    pub fn push(
        &mut self,
        sweep_param: impl Into<String>,
        method: impl Into<String>,
        metric: impl Into<String>,
        value: f64,
        trials: usize,
        seed: u64,
    ) {
        self.rows.push(ResultRow {
            sweep_param: sweep_param.into(),
            method: method.into(),
            metric: metric.into(),
            value,
            trials,
            seed,
        });
    }

    pub fn get(&self, sweep_param: &str, method: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.sweep_param == sweep_param && r.method == method && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.meta.extend(other.meta);
        self.rows.extend(other.rows);
    }

    fn selected(&self, timings: bool) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| timings || !r.is_timing())
    }

    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in self.selected(timings) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sweep_param, r.method, r.metric, r.value, r.trials, r.seed
            );
        }
        out
    }

    pub fn to_json(&self, timings: bool) -> Result<String> {
        let t = JsonTable {
            meta: &self.meta,
            rows: self.selected(timings).collect(),
        };
        serde_json::to_string_pretty(&t).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Formats a sweep coordinate the same way everywhere.
pub fn param(v: f64) -> String {
    format!("{v:.2}")
}
