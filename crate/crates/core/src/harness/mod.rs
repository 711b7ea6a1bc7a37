//! Trial runner and cross-algorithm comparison.
//!
//! A trial replays one scenario: data items arrive in timestep order, each is
//! placed by the chosen optimizer against the capacity left by earlier
//! placements, and cost, access delay and energy are recorded per timestep.
//! Topology and workload depend only on `(root seed, scenario)`, so trials of
//! different algorithms with the same root seed see identical inputs.

mod files;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use files::{plot_data_csv, read_series_csv, write_series_csv, PlotMetric, RunSummaryFile, SERIES_HEADER};

use crate::cost::{access_delay, placement_energy, replication_cost, AllocationVector, EnergyParams};
use crate::error::{Error, Result};
use crate::model::{DataItem, Topology};
use crate::optimize::{solve, Algorithm, PlacementProblem, SolveParams, DEFAULT_ENUMERATION_LIMIT};
use crate::scenario::{generate_topology, generate_workload, ScenarioSpec};
use crate::seed::{self, derive_seed, stable_id};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub memory_size: usize,
    /// Fixed exercise count; otherwise drawn per datum from the scenario range.
    pub exercises: Option<usize>,
    pub energy: EnergyParams,
    pub enumeration_limit: u128,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig { memory_size: 10, exercises: None, energy: EnergyParams::default(), enumeration_limit: DEFAULT_ENUMERATION_LIMIT }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory_size < 2 {
            return Err(Error::InvalidParams(format!("harmony memory size must be >= 2, got {}", self.memory_size)));
        }
        if self.exercises == Some(0) {
            return Err(Error::InvalidParams("exercises must be >= 1".into()));
        }
        self.energy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub timestep: usize,
    /// Mean replication cost of items placed this step (0 when none).
    pub mean_cost_s: f64,
    pub mean_delay_s: f64,
    /// Energy spent on this step's placements.
    pub energy_j: f64,
    pub placed: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub mean_cost_s: f64,
    pub mean_delay_s: f64,
    pub total_energy_j: f64,
    pub placed: u64,
    pub failures: u64,
    /// Not serialized: output files must not depend on timing.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunTotals {
    /// Totals are a pure function of the series: placement-weighted means,
    /// summed energy and counts.
    pub fn from_series(series: &[StepRecord]) -> Self {
        let placed: u64 = series.iter().map(|s| s.placed).sum();
        let weighted = |f: fn(&StepRecord) -> f64| {
            if placed == 0 {
                0.0
            } else {
                series.iter().map(|s| f(s) * s.placed as f64).sum::<f64>() / placed as f64
            }
        };
        RunTotals {
            mean_cost_s: weighted(|s| s.mean_cost_s),
            mean_delay_s: weighted(|s| s.mean_delay_s),
            total_energy_j: series.iter().map(|s| s.energy_j).sum(),
            placed,
            failures: series.iter().map(|s| s.failures).sum(),
            wall_clock: Duration::ZERO,
        }
    }

    /// Compares every serialized field within `rel_tol`.
    pub fn agrees_with(&self, other: &RunTotals, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        self.placed == other.placed
            && self.failures == other.failures
            && close(self.mean_cost_s, other.mean_cost_s)
            && close(self.mean_delay_s, other.mean_delay_s)
            && close(self.total_energy_j, other.total_energy_j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub series: Vec<StepRecord>,
    pub totals: RunTotals,
}

/// A trial's report plus what is needed to audit it.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub report: RunReport,
    pub initial_topology: Topology,
    pub final_topology: Topology,
    pub workload: Vec<DataItem>,
    /// `(datum id, allocation)` for every successful placement, in order.
    pub placements: Vec<(usize, AllocationVector)>,
}

fn scenario_key(spec: &ScenarioSpec) -> u64 {
    derive_seed(spec.seed, &[stable_id(&spec.name)])
}

/// Topology and workload for `(spec, root_seed)`; independent of the algorithm.
pub fn scenario_instance(spec: &ScenarioSpec, root_seed: u64) -> Result<(Topology, Vec<DataItem>)> {
    spec.validate()?;
    let key = scenario_key(spec);
    let topology = generate_topology(spec, &mut seed::stream(root_seed, &[key, seed::TAG_TOPOLOGY]));
    topology.validate()?;
    let workload = generate_workload(spec, &topology, &mut seed::stream(root_seed, &[key, seed::TAG_WORKLOAD]));
    Ok((topology, workload))
}

#[derive(Default, Clone, Copy)]
struct StepAcc {
    cost: f64,
    delay: f64,
    energy: f64,
    placed: u64,
    failures: u64,
}

pub fn run_trial(spec: &ScenarioSpec, algorithm: Algorithm, root_seed: u64, cfg: &TrialConfig) -> Result<RunReport> {
    run_trial_detailed(spec, algorithm, root_seed, cfg).map(|o| o.report)
}

/// Like [`run_trial`] with the algorithm given by name.
pub fn run_trial_named(spec: &ScenarioSpec, algorithm: &str, root_seed: u64, cfg: &TrialConfig) -> Result<RunReport> {
    run_trial(spec, algorithm.parse()?, root_seed, cfg)
}

pub fn run_trial_detailed(
    spec: &ScenarioSpec,
    algorithm: Algorithm,
    root_seed: u64,
    cfg: &TrialConfig,
) -> Result<TrialOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let (initial_topology, workload) = scenario_instance(spec, root_seed)?;
    let key = scenario_key(spec);
    let alg_key = stable_id(algorithm.name());

    let mut topology = initial_topology.clone();
    let mut steps = vec![StepAcc::default(); spec.timesteps];
    let mut placements = Vec::new();

    for d in &workload {
        let acc = &mut steps[d.arrival_timestep - 1];
        let datum_key = d.id as u64;
        let exercises = match cfg.exercises {
            Some(e) => e,
            None => spec.exercises_range.sample(&mut seed::stream(root_seed, &[key, datum_key, seed::TAG_EXERCISES])),
        };
        let params = SolveParams { memory_size: cfg.memory_size, exercises, enumeration_limit: cfg.enumeration_limit };

        let result = PlacementProblem::new(&topology, d).and_then(|problem| {
            let opt_seed = derive_seed(root_seed, &[key, datum_key, seed::TAG_OPTIMIZER, alg_key]);
            solve(algorithm, &problem, &params, opt_seed)
        });
        let best = match result {
            Ok(r) => r.best,
            Err(Error::Infeasible { .. }) => {
                acc.failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match topology.commit(d, &best) {
            Ok(()) => {}
            Err(Error::CapacityExceeded { .. }) => {
                acc.failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
        debug_assert!(topology.validate().is_ok());

        let requester = seed::stream(root_seed, &[key, datum_key, seed::TAG_REQUESTER]).gen_range(0..topology.num_gateways());
        acc.cost += replication_cost(&topology, d, &best)?.total;
        acc.delay += access_delay(&topology, d, &best, requester)?;
        acc.energy += placement_energy(d, &best, &cfg.energy);
        acc.placed += 1;
        placements.push((d.id, best));
    }

    let series: Vec<StepRecord> = steps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mean = |x: f64| if a.placed == 0 { 0.0 } else { x / a.placed as f64 };
            StepRecord {
                timestep: i + 1,
                mean_cost_s: mean(a.cost),
                mean_delay_s: mean(a.delay),
                energy_j: a.energy,
                placed: a.placed,
                failures: a.failures,
            }
        })
        .collect();
    let mut totals = RunTotals::from_series(&series);
    totals.wall_clock = started.elapsed();

    Ok(TrialOutcome {
        report: RunReport { scenario: spec.name.clone(), algorithm: algorithm.name().to_string(), seed: root_seed, series, totals },
        initial_topology,
        final_topology: topology,
        workload,
        placements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stats {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub runs: usize,
    pub cost: Stats,
    pub delay: Stats,
    pub energy: Stats,
    pub failures: Stats,
}

/// Relative tolerance for totals recomputed from a series.
pub const TOTALS_REL_TOL: f64 = 1e-9;

pub fn summarize(reports: &[RunReport]) -> Result<Summary> {
    let first = reports.first().ok_or_else(|| Error::EmptyInput("no run reports to summarize".into()))?;
    for r in reports {
        if r.scenario != first.scenario || r.series.len() != first.series.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} ({} steps) vs {} ({} steps)",
                r.scenario,
                r.series.len(),
                first.scenario,
                first.series.len()
            )));
        }
        if !RunTotals::from_series(&r.series).agrees_with(&r.totals, TOTALS_REL_TOL) {
            return Err(Error::InconsistentTotals(format!("{} / {} / seed {}", r.scenario, r.algorithm, r.seed)));
        }
    }
    let col = |f: fn(&RunTotals) -> f64| Stats::of(&reports.iter().map(|r| f(&r.totals)).collect::<Vec<_>>());
    Ok(Summary {
        scenario: first.scenario.clone(),
        runs: reports.len(),
        cost: col(|t| t.mean_cost_s),
        delay: col(|t| t.mean_delay_s),
        energy: col(|t| t.total_energy_j),
        failures: col(|t| t.failures as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Fraction of paired seeds on which `algorithm` is no worse than `versus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub algorithm: String,
    pub versus: String,
    pub metric: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
    pub win_rates: Vec<WinRate>,
}

impl ComparisonTable {
    pub fn row(&self, algorithm: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn win_rate(&self, algorithm: &str, versus: &str, metric: &str) -> Option<f64> {
        self.win_rates
            .iter()
            .find(|w| w.algorithm == algorithm && w.versus == versus && w.metric == metric)
            .map(|w| w.rate)
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Algorithm-major, then seed order, exactly as requested.
    pub reports: Vec<RunReport>,
    pub table: ComparisonTable,
}

pub const METRICS: [&str; 3] = ["cost", "delay", "energy"];

fn metric_of(t: &RunTotals, metric: &str) -> f64 {
    match metric {
        "cost" => t.mean_cost_s,
        "delay" => t.mean_delay_s,
        _ => t.total_energy_j,
    }
}

/// Runs every `(algorithm, seed)` pair on the current rayon pool. Results do
/// not depend on the number of workers.
pub fn compare_algorithms(
    spec: &ScenarioSpec,
    algorithms: &[Algorithm],
    seeds: &[u64],
    cfg: &TrialConfig,
) -> Result<Comparison> {
    if algorithms.is_empty() {
        return Err(Error::EmptyInput("no algorithms to compare".into()));
    }
    if seeds.is_empty() {
        return Err(Error::EmptyInput("no seeds to run".into()));
    }
    let jobs: Vec<(Algorithm, u64)> = algorithms.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(a, s)| run_trial(spec, a, s, cfg))
        .collect::<Result<Vec<_>>>()?;

    let per_alg: Vec<&[RunReport]> = reports.chunks(seeds.len()).collect();
    let rows = algorithms
        .iter()
        .zip(&per_alg)
        .map(|(a, runs)| Ok(ComparisonRow { algorithm: a.name().to_string(), summary: summarize(runs)? }))
        .collect::<Result<Vec<_>>>()?;

    let mut win_rates = Vec::new();
    for (i, a) in algorithms.iter().enumerate() {
        for (j, b) in algorithms.iter().enumerate() {
            if i == j {
                continue;
            }
            for metric in METRICS {
                let wins = per_alg[i]
                    .iter()
                    .zip(per_alg[j])
                    .filter(|(x, y)| metric_of(&x.totals, metric) <= metric_of(&y.totals, metric))
                    .count();
                win_rates.push(WinRate {
                    algorithm: a.name().to_string(),
                    versus: b.name().to_string(),
                    metric: metric.to_string(),
                    rate: wins as f64 / seeds.len() as f64,
                });
            }
        }
    }

    let table = ComparisonTable { scenario: spec.name.clone(), seeds: seeds.to_vec(), rows, win_rates };
    Ok(Comparison { reports, table })
}
