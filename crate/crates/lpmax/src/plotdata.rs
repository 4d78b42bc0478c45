//! Long-format plot tables: `x,series,value,ci_lo,ci_hi`.

use std::fmt::Write as _;

use lpmax_core::diagnostics::{EcSequence, ErgodicityReport};
use lpmax_core::Estimate;

use crate::output::fmt_f64;

pub const HEADER: &str = "x,series,value,ci_lo,ci_hi";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub x: f64,
    pub series: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl PlotRow {
    pub fn exact(x: f64, series: &str, value: f64) -> Self {
        Self { x, series: series.to_string(), value, ci_lo: value, ci_hi: value }
    }

    pub fn estimate(x: f64, series: &str, e: &Estimate) -> Self {
        let (ci_lo, ci_hi) = e.ci();
        Self { x, series: series.to_string(), value: e.value, ci_lo, ci_hi }
    }
}

pub fn emit_plotdata(rows: &[PlotRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    for r in rows {
        writeln!(s, "{},{},{},{},{}", fmt_f64(r.x), r.series, fmt_f64(r.value), fmt_f64(r.ci_lo), fmt_f64(r.ci_hi))
            .unwrap();
    }
    s
}

/// Noisy `θ̂(0, r)` and denoised `E max{W(0), W(r)}` against the lag.
pub fn ec_sequence_rows(seq: &EcSequence) -> Vec<PlotRow> {
    let noisy = seq.lags.iter().zip(&seq.theta).map(|(&r, t)| PlotRow::estimate(r as f64, "noisy", &t.estimate()));
    let denoised = seq.lags.iter().zip(&seq.mean_max).map(|(&r, e)| PlotRow::estimate(r as f64, "denoised", e));
    noisy.chain(denoised).collect()
}

pub fn cesaro_rows(seq: &EcSequence, report: &ErgodicityReport) -> Vec<PlotRow> {
    seq.lags.iter().zip(&report.cesaro).map(|(&r, c)| PlotRow::exact(r as f64, "cesaro", *c)).collect()
}

/// Empirical and closed-form CDFs on a grid indexed by position.
pub fn cdf_grid_rows(empirical: &[Estimate], reference: &[Estimate]) -> Vec<PlotRow> {
    let a = empirical.iter().enumerate().map(|(k, e)| PlotRow::estimate(k as f64, "empirical", e));
    let b = reference.iter().enumerate().map(|(k, e)| PlotRow::estimate(k as f64, "closed-form", e));
    a.chain(b).collect()
}
