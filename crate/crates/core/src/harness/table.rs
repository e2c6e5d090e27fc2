//! Comparison tables (mean±std test AUC in percent per method) and
//! learning-curve data.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::report::Selection;
use crate::error::{Error, Result};
use crate::metrics::MeanStd;
use crate::optim::Method;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub method: Method,
    /// Test AUC in percent over seeds.
    pub auc: MeanStd,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub rows: Vec<TableRow>,
}

/// Aggregates successful selections per method. Every method needs at least
/// two successful seeds.
pub fn compare_table(selections: &[Selection]) -> Result<CompareTable> {
    let mut per_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for s in selections {
        let entry = per_method.entry(s.method).or_default();
        if let Some(t) = s.report.test_auc.filter(|_| s.report.succeeded()) {
            entry.push(100.0 * t);
        }
    }
    if per_method.is_empty() {
        return Err(Error::Config("no reports to tabulate".into()));
    }
    let mut rows = Vec::new();
    for (method, values) in per_method {
        let auc = MeanStd::of(&values).map_err(|_| {
            Error::Config(format!(
                "method {method} has {} successful seed(s); a table needs at least 2",
                values.len()
            ))
        })?;
        rows.push(TableRow {
            method,
            auc,
            best: false,
        });
    }
    let top = rows.iter().map(|r| r.auc.mean).fold(f64::MIN, f64::max);
    for r in &mut rows {
        r.best = r.auc.mean == top;
    }
    Ok(CompareTable { rows })
}

impl CompareTable {
    /// Fixed-width text; the best method carries a trailing `*`.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.method.name().len())
            .max()
            .unwrap_or(0)
            .max("method".len());
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>14}  seeds", "method", "test AUC (%)");
        for r in &self.rows {
            let cell = format!("{}{}", r.auc.display(), if r.best { "*" } else { "" });
            let _ = writeln!(s, "{:<width$}  {:>14}  {}", r.method.name(), cell, r.auc.n);
        }
        s
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Format(format!("table csv: {e}"));
        w.write_record(["method", "n_seeds", "mean", "std", "formatted", "best"])
            .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                r.auc.n.to_string(),
                format!("{:.4}", r.auc.mean),
                format!("{:.4}", r.auc.std),
                r.auc.display(),
                r.best.to_string(),
            ])
            .map_err(err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Format(format!("table csv: {e}")))
    }
}

/// Epoch versus mean validation AUC of the selected runs, one column per
/// method. Cells are empty where a method has no run that long.
pub fn curves_csv(selections: &[Selection]) -> Result<Vec<u8>> {
    let mut per_method: BTreeMap<Method, Vec<&Vec<f64>>> = BTreeMap::new();
    for s in selections.iter().filter(|s| s.report.succeeded()) {
        per_method
            .entry(s.method)
            .or_default()
            .push(&s.report.valid_auc);
    }
    let epochs = per_method
        .values()
        .flatten()
        .map(|v| v.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(format!("curves csv: {e}"));
    let mut header = vec!["epoch".to_string()];
    header.extend(per_method.keys().map(|m| m.name().to_string()));
    w.write_record(&header).map_err(err)?;
    for e in 0..epochs {
        let mut row = vec![e.to_string()];
        for series in per_method.values() {
            let vals: Vec<f64> = series.iter().filter_map(|v| v.get(e).copied()).collect();
            row.push(if vals.is_empty() {
                String::new()
            } else {
                format!("{:.6}", vals.iter().sum::<f64>() / vals.len() as f64)
            });
        }
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("curves csv: {e}")))
}
