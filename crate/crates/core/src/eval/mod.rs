//! Delay-prediction metrics, the cross-dataset experiment grid and result
//! tables.

mod grid;
mod pipeline;
mod plot;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grid::{job_seed, run_experiment, DatasetSource, DatasetSpec, GridConfig};
pub use pipeline::{
    build_matrices, delay_training_set, estimate_delays, load_dataset, train_matcher, AnyMatcher,
};
pub use plot::{emit_plot, render_svg};

use crate::delay::DelayMethod;
use crate::error::{Error, Result};
use crate::matchers::MatcherKind;

fn check_lengths(preds: &[i32], truths: &[i32]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} ground truths",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    Ok(())
}

/// Mean absolute error in frames.
pub fn mae_frames(preds: &[i32], truths: &[i32]) -> Result<f64> {
    check_lengths(preds, truths)?;
    let total: u64 = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| u64::from(p.abs_diff(*t)))
        .sum();
    Ok(total as f64 / preds.len() as f64)
}

/// Exact-match accuracy and macro-F1 over the delay classes present in
/// `truths`.
pub fn f1_delay(preds: &[i32], truths: &[i32]) -> Result<(f64, f64)> {
    check_lengths(preds, truths)?;
    let correct = preds.iter().zip(truths).filter(|(p, t)| p == t).count();
    let classes: BTreeSet<i32> = truths.iter().copied().collect();
    let mut f1_sum = 0.0;
    for &c in &classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&p, &t) in preds.iter().zip(truths) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        f1_sum += (2 * tp) as f64 / (2 * tp + fp + fn_) as f64;
    }
    Ok((
        correct as f64 / preds.len() as f64,
        f1_sum / classes.len() as f64,
    ))
}

/// One (system, test set) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub matcher: MatcherKind,
    pub delay_method: DelayMethod,
    pub train_set: String,
    pub test_set: String,
    pub n: usize,
    pub exact_acc: f64,
    pub macro_f1: f64,
    pub mae: f64,
}

impl ReportRow {
    pub fn score(
        matcher: MatcherKind,
        delay_method: DelayMethod,
        train_set: &str,
        test_set: &str,
        preds: &[i32],
        truths: &[i32],
    ) -> Result<Self> {
        let (exact_acc, macro_f1) = f1_delay(preds, truths)?;
        Ok(ReportRow {
            matcher,
            delay_method,
            train_set: train_set.to_string(),
            test_set: test_set.to_string(),
            n: preds.len(),
            exact_acc,
            macro_f1,
            mae: mae_frames(preds, truths)?,
        })
    }

    /// `matcher+delay_method@train_set`.
    pub fn system(&self) -> String {
        format!("{}+{}@{}", self.matcher, self.delay_method, self.train_set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// `key=value` lines describing the run.
    pub config: String,
}

pub fn results_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "matcher",
            "delay_method",
            "train_set",
            "test_set",
            "n",
            "exact_acc",
            "macro_f1",
            "mae",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_results_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    std::fs::write(path, results_to_csv(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format("results csv", format!("{other:?}")),
    })?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
