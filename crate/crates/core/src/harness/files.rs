//! Run report file formats.
//!
//! * series CSV: one row per timestep, header [`SERIES_HEADER`];
//! * summary JSON: [`RunSummaryFile`], the totals of one run;
//! * plot data CSV: `timestep` plus one column per algorithm, averaged over
//!   seeds.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back yields bit-identical values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{RunReport, RunTotals, StepRecord};
use crate::error::{Error, Result};

pub const SERIES_HEADER: [&str; 9] =
    ["timestep", "scenario", "algorithm", "seed", "mean_cost_s", "mean_delay_s", "energy_j", "placed", "failures"];

pub fn write_series_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    let seed = report.seed.to_string();
    for s in &report.series {
        w.write_record([
            s.timestep.to_string().as_str(),
            &report.scenario,
            &report.algorithm,
            &seed,
            &s.mean_cost_s.to_string(),
            &s.mean_delay_s.to_string(),
            &s.energy_j.to_string(),
            &s.placed.to_string(),
            &s.failures.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<series csv>", e))?;
    Ok(())
}

#[derive(Deserialize)]
struct SeriesRow {
    timestep: usize,
    scenario: String,
    algorithm: String,
    seed: u64,
    mean_cost_s: f64,
    mean_delay_s: f64,
    energy_j: f64,
    placed: u64,
    failures: u64,
}

/// Parses a series CSV; totals are recomputed from the rows.
pub fn read_series_csv<R: Read>(input: R) -> Result<RunReport> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SERIES_HEADER) {
        return Err(Error::ShapeMismatch(format!("unexpected series header {:?}", header)));
    }
    let mut meta: Option<(String, String, u64)> = None;
    let mut series = Vec::new();
    for row in rdr.deserialize::<SeriesRow>() {
        let row = row?;
        match &meta {
            None => meta = Some((row.scenario.clone(), row.algorithm.clone(), row.seed)),
            Some((sc, al, sd)) if *sc != row.scenario || *al != row.algorithm || *sd != row.seed => {
                return Err(Error::ShapeMismatch("series rows mix runs".into()));
            }
            Some(_) => {}
        }
        series.push(StepRecord {
            timestep: row.timestep,
            mean_cost_s: row.mean_cost_s,
            mean_delay_s: row.mean_delay_s,
            energy_j: row.energy_j,
            placed: row.placed,
            failures: row.failures,
        });
    }
    let (scenario, algorithm, seed) = meta.ok_or_else(|| Error::EmptyInput("series CSV has no rows".into()))?;
    let totals = RunTotals::from_series(&series);
    Ok(RunReport { scenario, algorithm, seed, series, totals })
}

/// Sibling JSON of a series CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummaryFile {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub timesteps: usize,
    pub totals: RunTotals,
}

impl From<&RunReport> for RunSummaryFile {
    fn from(r: &RunReport) -> Self {
        RunSummaryFile {
            scenario: r.scenario.clone(),
            algorithm: r.algorithm.clone(),
            seed: r.seed,
            timesteps: r.series.len(),
            totals: r.totals.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    /// Placement-weighted mean replication cost per timestep.
    Cost,
    /// Placement-weighted mean access delay per timestep.
    Delay,
    /// Cumulative energy up to and including each timestep, averaged over seeds.
    Energy,
}

impl PlotMetric {
    pub const ALL: [PlotMetric; 3] = [PlotMetric::Cost, PlotMetric::Delay, PlotMetric::Energy];

    pub fn name(self) -> &'static str {
        match self {
            PlotMetric::Cost => "cost",
            PlotMetric::Delay => "delay",
            PlotMetric::Energy => "energy",
        }
    }
}

/// Builds plot data for one scenario. Cost and delay cells with no placement
/// across all seeds are left empty.
pub fn plot_data_csv(reports: &[RunReport], algorithms: &[String], metric: PlotMetric) -> Result<String> {
    let timesteps = reports.first().map(|r| r.series.len()).unwrap_or(0);
    let mut columns: Vec<Vec<String>> = Vec::with_capacity(algorithms.len());
    for alg in algorithms {
        let runs: Vec<&RunReport> = reports.iter().filter(|r| &r.algorithm == alg).collect();
        if runs.is_empty() {
            return Err(Error::EmptyInput(format!("no runs of `{alg}` for plot data")));
        }
        if runs.iter().any(|r| r.series.len() != timesteps) {
            return Err(Error::ShapeMismatch(format!("runs of `{alg}` differ in length")));
        }
        let col = match metric {
            PlotMetric::Cost | PlotMetric::Delay => (0..timesteps)
                .map(|t| {
                    let placed: u64 = runs.iter().map(|r| r.series[t].placed).sum();
                    if placed == 0 {
                        return String::new();
                    }
                    let pick = |s: &StepRecord| if metric == PlotMetric::Cost { s.mean_cost_s } else { s.mean_delay_s };
                    let sum: f64 = runs.iter().map(|r| pick(&r.series[t]) * r.series[t].placed as f64).sum();
                    (sum / placed as f64).to_string()
                })
                .collect(),
            PlotMetric::Energy => {
                let mut cumulative = vec![0.0; runs.len()];
                (0..timesteps)
                    .map(|t| {
                        for (c, r) in cumulative.iter_mut().zip(&runs) {
                            *c += r.series[t].energy_j;
                        }
                        (cumulative.iter().sum::<f64>() / runs.len() as f64).to_string()
                    })
                    .collect()
            }
        };
        columns.push(col);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("timestep").chain(algorithms.iter().map(String::as_str)))?;
    for t in 0..timesteps {
        w.write_record(std::iter::once((t + 1).to_string()).chain(columns.iter().map(|c| c[t].clone())))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<plot csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
