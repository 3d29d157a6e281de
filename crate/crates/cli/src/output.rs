//! Atomic report and table writers.

use erlab_core::harness::{
    ConcentrationReport, RepresentationReport, ScalingReport, TailLemmaReport, TailRow, TrialRecord,
};
use erlab_core::locproc::ExpectedCurves;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

/// A CSV table held in memory until it is written.
pub struct Table {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

fn table<R: Serialize>(name: &'static str, rows: impl IntoIterator<Item = R>) -> csv::Result<Table> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(Table { name, bytes })
}

#[derive(Serialize)]
struct CurveRow {
    s: f64,
    #[serde(rename = "E1")]
    e1: f64,
    #[serde(rename = "El")]
    el: f64,
    #[serde(rename = "Eq")]
    eq: f64,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "SE_E1")]
    se_e1: f64,
    #[serde(rename = "SE_El")]
    se_el: f64,
    #[serde(rename = "SE_Eq")]
    se_eq: f64,
    #[serde(rename = "SE_E")]
    se_e: f64,
}

pub fn curves(c: &ExpectedCurves) -> csv::Result<Table> {
    table(
        "curves.csv",
        (0..c.grid.len()).map(|i| CurveRow {
            s: c.grid[i],
            e1: c.e1[i],
            el: c.el[i],
            eq: c.eq[i],
            e: c.e[i],
            se_e1: c.se_e1[i],
            se_el: c.se_el[i],
            se_eq: c.se_eq[i],
            se_e: c.se_e[i],
        }),
    )
}

#[derive(Serialize)]
struct ConcentrationTail<'a> {
    kind: &'a str,
    t: f64,
    c0: f64,
    delta: f64,
    first_branch: f64,
    bracket: f64,
    exceedances: usize,
    trials: usize,
    frequency: f64,
    lower: f64,
    upper: f64,
    nominal: f64,
    pass: bool,
}

fn tail_row<'a>(kind: &'a str, r: &TailRow) -> ConcentrationTail<'a> {
    ConcentrationTail {
        kind,
        t: r.t,
        c0: r.c0,
        delta: r.delta,
        first_branch: r.first_branch,
        bracket: r.bracket,
        exceedances: r.interval.successes,
        trials: r.interval.trials,
        frequency: r.interval.frequency,
        lower: r.interval.lower,
        upper: r.interval.upper,
        nominal: r.nominal,
        pass: r.pass,
    }
}

#[derive(Serialize)]
struct TrialRow<'a> {
    index: usize,
    seed: u64,
    s_hat: f64,
    deviation: f64,
    relative_deviation: f64,
    iterations: usize,
    converged: bool,
    error: &'a str,
}

fn trial_row(r: &TrialRecord) -> TrialRow<'_> {
    TrialRow {
        index: r.index,
        seed: r.seed,
        s_hat: r.s_hat,
        deviation: r.deviation,
        relative_deviation: r.relative_deviation,
        iterations: r.iterations,
        converged: r.converged,
        error: r.error.as_deref().unwrap_or(""),
    }
}

pub fn concentration(r: &ConcentrationReport) -> csv::Result<Vec<Table>> {
    let tails = r
        .tails
        .iter()
        .map(|t| tail_row("configured", t))
        .chain(r.calibrated_tails.iter().map(|t| tail_row("calibrated", t)));
    Ok(vec![
        curves(&r.curves)?,
        table("tails.csv", tails)?,
        table("trials.csv", r.trials.iter().map(trial_row))?,
    ])
}

#[derive(Serialize)]
struct LemmaRow {
    s: f64,
    t: f64,
    expected: f64,
    upper_threshold: f64,
    lower_threshold: f64,
    nominal: f64,
    upper_exceedances: usize,
    upper_frequency: f64,
    upper_lower_bound: f64,
    lower_exceedances: usize,
    lower_frequency: f64,
    lower_lower_bound: f64,
    full_lower_exceedances: usize,
    trials: usize,
    upper_pass: bool,
    lower_pass: bool,
}

pub fn tail_lemma(r: &TailLemmaReport) -> csv::Result<Vec<Table>> {
    let rows = r.rows.iter().map(|x| LemmaRow {
        s: x.s,
        t: x.t,
        expected: x.expected,
        upper_threshold: x.expected + x.thresholds.upper,
        lower_threshold: x.expected - x.thresholds.lower,
        nominal: x.nominal,
        upper_exceedances: x.upper.successes,
        upper_frequency: x.upper.frequency,
        upper_lower_bound: x.upper.lower,
        lower_exceedances: x.lower.successes,
        lower_frequency: x.lower.frequency,
        lower_lower_bound: x.lower.lower,
        full_lower_exceedances: x.lower_full.successes,
        trials: x.upper.trials,
        upper_pass: x.upper_pass,
        lower_pass: x.lower_pass,
    });
    Ok(vec![curves(&r.curves)?, table("tails.csv", rows)?])
}

pub fn representation(r: &RepresentationReport) -> csv::Result<Vec<Table>> {
    Ok(vec![table("trials.csv", r.records.iter())?])
}

pub fn scaling(r: &ScalingReport) -> csv::Result<Vec<Table>> {
    Ok(vec![table("scaling.csv", r.rows.iter())?, table("widths.csv", r.widths.iter())?])
}
