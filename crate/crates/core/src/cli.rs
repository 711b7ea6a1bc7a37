//! Command-line interface.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 infeasible placement, 4 I/O
//! or file format error, 5 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cost::EnergyParams;
use crate::error::{Error, Result};
use crate::harness::{
    compare_algorithms, plot_data_csv, read_series_csv, scenario_instance, write_series_csv, Comparison, ComparisonTable,
    PlotMetric, RunReport, RunSummaryFile, RunTotals, Stats, TrialConfig, METRICS, TOTALS_REL_TOL,
};
use crate::optimize::Algorithm;
use crate::scenario::{expand_sources, resolve_source, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

pub const SEED_ENV: &str = "REPLICA_HARMONY_SEED";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownScenario(_)
        | Error::UnknownAlgorithm(_)
        | Error::InvalidSpec(_)
        | Error::InvalidParams(_)
        | Error::InvalidTopology(_)
        | Error::SearchSpaceTooLarge { .. }
        | Error::EmptyInput(_) => EXIT_CONFIG,
        Error::Infeasible { .. } | Error::CapacityExceeded { .. } => EXIT_INFEASIBLE,
        Error::Io { .. } | Error::Json(_) | Error::Csv(_) | Error::ShapeMismatch(_) | Error::InconsistentTotals(_) => {
            EXIT_IO
        }
        Error::InvalidAllocation(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "replica-harmony", version, about = "Replica placement experiments across mini clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the topology and workload of a scenario as JSON.
    Generate(GenerateArgs),
    /// Run trials and write one series CSV and one summary JSON per (algorithm, seed).
    Run(RunArgs),
    /// Run trials and write the comparison table and plot data.
    Compare(RunArgs),
    /// Print rankings and win rates for a directory of run outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// `builtin:k`, `builtin:a..b` or a path to a scenario JSON file.
    #[arg(long, required = true)]
    pub scenario: Vec<String>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `builtin:k`, `builtin:a..b` or a path to a scenario JSON file.
    #[arg(long, required = true)]
    pub scenario: Vec<String>,
    /// hs, random, ga, foa or exhaustive.
    #[arg(long = "algo", required = true)]
    pub algorithms: Vec<String>,
    /// A count (seeds `seed`, `seed+1`, ...) or a comma-separated list of seeds.
    #[arg(long, default_value = "1")]
    pub seeds: String,
    /// Base seed for `--seeds <count>`.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Harmony memory size.
    #[arg(long, default_value_t = 10)]
    pub hms: usize,
    /// Fixed exercise count per datum; sampled from the scenario range otherwise.
    #[arg(long, conflicts_with = "budget")]
    pub exercises: Option<usize>,
    /// Evaluations per datum; sets exercises to `budget - hms`.
    #[arg(long)]
    pub budget: Option<usize>,
    /// JSON file with `e_uplink`, `e_intercloud` and `e_write` in J/B.
    #[arg(long)]
    pub energy_params: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `run` or `compare`.
    pub dir: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Report(a) => cmd_report(a, &mut std::io::stdout().lock()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn scenarios(sources: &[String]) -> Result<Vec<ScenarioSpec>> {
    let mut out = Vec::new();
    for s in sources {
        for src in expand_sources(s)? {
            out.push(resolve_source(&src)?);
        }
    }
    Ok(out)
}

fn algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    let mut out: Vec<Algorithm> = Vec::new();
    for n in names.iter().flat_map(|n| n.split(',')) {
        let a: Algorithm = n.trim().parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

pub fn parse_seeds(s: &str, base: u64) -> Result<Vec<u64>> {
    let bad = || Error::InvalidParams(format!("--seeds expects a count or a list like 1,2,3, got `{s}`"));
    if s.contains(',') {
        let seeds = s.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        let mut seen = seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != seeds.len() {
            return Err(Error::InvalidParams(format!("--seeds lists a seed twice: `{s}`")));
        }
        return Ok(seeds);
    }
    let n: u64 = s.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(Error::InvalidParams("--seeds must be at least 1".into()));
    }
    Ok((0..n).map(|i| base.wrapping_add(i)).collect())
}

fn trial_config(a: &RunArgs) -> Result<TrialConfig> {
    let mut cfg = TrialConfig { memory_size: a.hms, exercises: a.exercises, ..TrialConfig::default() };
    if let Some(b) = a.budget {
        if b <= a.hms {
            return Err(Error::InvalidParams(format!("--budget {b} must exceed --hms {}", a.hms)));
        }
        cfg.exercises = Some(b - a.hms);
    }
    if let Some(path) = &a.energy_params {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.energy = serde_json::from_str::<EnergyParams>(&text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let specs = scenarios(&a.scenario)?;
    for spec in &specs {
        let dir = if specs.len() == 1 { a.out.clone() } else { a.out.join(file_stem(&spec.name)) };
        create_dir(&dir)?;
        let (topology, workload) = scenario_instance(spec, a.seed)?;
        let mut t = topology.to_json();
        t.push('\n');
        let mut w = serde_json::to_string_pretty(&workload)?;
        w.push('\n');
        write_file(&dir.join("topology.json"), t.as_bytes())?;
        write_file(&dir.join("workload.json"), w.as_bytes())?;
        println!("{}: {} gateways, {} clouds, {} data items -> {}", spec.name, topology.num_gateways(), topology.num_clouds(), workload.len(), dir.display());
    }
    Ok(())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start {threads} worker threads: {e}")))
}

fn run_all(a: &RunArgs, min_algorithms: usize) -> Result<Vec<Comparison>> {
    let specs = scenarios(&a.scenario)?;
    let algs = algorithms(&a.algorithms)?;
    if algs.len() < min_algorithms {
        return Err(Error::InvalidParams(format!("need at least {min_algorithms} distinct algorithms, got {}", algs.len())));
    }
    let seeds = parse_seeds(&a.seeds, a.seed)?;
    let cfg = trial_config(a)?;
    let pool = pool(a.threads)?;
    specs
        .iter()
        .map(|spec| {
            let started = Instant::now();
            let c = pool.install(|| compare_algorithms(spec, &algs, &seeds, &cfg))?;
            eprintln!("{}: {} runs in {:.2?}", spec.name, c.reports.len(), started.elapsed());
            Ok(c)
        })
        .collect()
}

fn write_run_files(dir: &Path, r: &RunReport) -> Result<()> {
    let stem = format!("{}_{}_seed{}", file_stem(&r.scenario), r.algorithm, r.seed);
    let mut csv = Vec::new();
    write_series_csv(r, &mut csv)?;
    write_file(&dir.join(format!("{stem}.csv")), &csv)?;
    let mut json = serde_json::to_string_pretty(&RunSummaryFile::from(r))?;
    json.push('\n');
    write_file(&dir.join(format!("{stem}.json")), json.as_bytes())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let comparisons = run_all(a, 1)?;
    create_dir(&a.out)?;
    for c in &comparisons {
        for r in &c.reports {
            write_run_files(&a.out, r)?;
        }
        for row in &c.table.rows {
            println!(
                "{} {:<10} cost {:.6} s  delay {:.6} s  energy {:.6e} J  ({} runs)",
                row.summary.scenario, row.algorithm, row.summary.cost.mean, row.summary.delay.mean, row.summary.energy.mean, row.summary.runs
            );
        }
    }
    Ok(())
}

fn stats_cells(s: &Stats) -> [String; 4] {
    [s.mean.to_string(), s.std.to_string(), s.min.to_string(), s.max.to_string()]
}

fn comparison_csv(tables: &[&ComparisonTable]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scenario".to_string(), "algorithm".into(), "runs".into()];
    for m in ["cost", "delay", "energy", "failures"] {
        for s in ["mean", "std", "min", "max"] {
            header.push(format!("{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    for t in tables {
        for row in &t.rows {
            let s = &row.summary;
            let mut rec = vec![t.scenario.clone(), row.algorithm.clone(), s.runs.to_string()];
            for st in [&s.cost, &s.delay, &s.energy, &s.failures] {
                rec.extend(stats_cells(st));
            }
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| Error::io("<comparison csv>", e.into_error()))
}

fn win_rates_csv(tables: &[&ComparisonTable]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "algorithm", "versus", "metric", "rate"])?;
    for t in tables {
        for r in &t.win_rates {
            w.write_record([t.scenario.as_str(), &r.algorithm, &r.versus, &r.metric, &r.rate.to_string()])?;
        }
    }
    w.into_inner().map_err(|e| Error::io("<win rates csv>", e.into_error()))
}

fn cmd_compare(a: &RunArgs) -> Result<()> {
    let comparisons = run_all(a, 2)?;
    let runs = a.out.join("runs");
    create_dir(&runs)?;
    for c in &comparisons {
        for r in &c.reports {
            write_run_files(&runs, r)?;
        }
        let algs: Vec<String> = c.table.rows.iter().map(|r| r.algorithm.clone()).collect();
        for metric in PlotMetric::ALL {
            let data = plot_data_csv(&c.reports, &algs, metric)?;
            let name = format!("plot_{}_{}.csv", file_stem(&c.table.scenario), metric.name());
            write_file(&a.out.join(name), data.as_bytes())?;
        }
    }
    let tables: Vec<&ComparisonTable> = comparisons.iter().map(|c| &c.table).collect();
    write_file(&a.out.join("comparison.csv"), &comparison_csv(&tables)?)?;
    write_file(&a.out.join("win_rates.csv"), &win_rates_csv(&tables)?)?;
    for t in &tables {
        println!("{} ({} seeds)", t.scenario, t.seeds.len());
        for row in &t.rows {
            println!("  {:<10} cost {:.6} s  delay {:.6} s  energy {:.6e} J", row.algorithm, row.summary.cost.mean, row.summary.delay.mean, row.summary.energy.mean);
        }
    }
    Ok(())
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_json(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "json") && p.with_extension("csv").is_file() {
            out.push(p);
        }
    }
    Ok(())
}

/// Loads every run under `dir` from its series CSV and checks the totals
/// against the sibling summary JSON.
pub fn load_runs(dir: &Path) -> Result<Vec<RunReport>> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    let mut runs = Vec::new();
    for json_path in paths {
        let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let Ok(summary) = serde_json::from_str::<RunSummaryFile>(&text) else {
            continue;
        };
        let csv_path = json_path.with_extension("csv");
        let file = fs::File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let run = read_series_csv(file)?;
        if run.scenario != summary.scenario
            || run.algorithm != summary.algorithm
            || run.seed != summary.seed
            || run.series.len() != summary.timesteps
        {
            return Err(Error::ShapeMismatch(format!("{} does not describe {}", json_path.display(), csv_path.display())));
        }
        if !run.totals.agrees_with(&summary.totals, TOTALS_REL_TOL) {
            return Err(Error::InconsistentTotals(json_path.display().to_string()));
        }
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(Error::EmptyInput(format!("no run outputs under {}", dir.display())));
    }
    Ok(runs)
}

fn metric_value(t: &RunTotals, metric: &str) -> f64 {
    match metric {
        "cost" => t.mean_cost_s,
        "delay" => t.mean_delay_s,
        _ => t.total_energy_j,
    }
}

fn cmd_report<W: Write>(a: &ReportArgs, out: &mut W) -> Result<()> {
    let runs = load_runs(&a.dir)?;
    write_report(&runs, out).map_err(|e| Error::io("<stdout>", e))
}

/// Rankings by mean metric (ascending) and paired win rates, per scenario.
pub fn write_report<W: Write>(runs: &[RunReport], out: &mut W) -> std::io::Result<()> {
    // scenario -> algorithm -> seed -> totals
    let mut by: BTreeMap<&str, BTreeMap<&str, BTreeMap<u64, &RunTotals>>> = BTreeMap::new();
    for r in runs {
        by.entry(&r.scenario).or_default().entry(&r.algorithm).or_default().insert(r.seed, &r.totals);
    }
    for (scenario, algs) in &by {
        let seeds: usize = algs.values().map(BTreeMap::len).max().unwrap_or(0);
        writeln!(out, "== {scenario}: {} algorithms, up to {seeds} seeds", algs.len())?;
        for metric in METRICS {
            let mut ranking: Vec<(&str, f64)> = algs
                .iter()
                .map(|(a, s)| (*a, s.values().map(|t| metric_value(t, metric)).sum::<f64>() / s.len() as f64))
                .collect();
            ranking.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(y.0)));
            writeln!(out, "{metric} ranking:")?;
            for (i, (alg, v)) in ranking.iter().enumerate() {
                writeln!(out, "  {}. {alg:<10} {v:.6e}", i + 1)?;
            }
        }
        if algs.len() > 1 {
            writeln!(out, "win rates (no worse on paired seeds):")?;
            for (a, sa) in algs {
                for (b, sb) in algs {
                    if a == b {
                        continue;
                    }
                    let paired: Vec<(&RunTotals, &RunTotals)> =
                        sa.iter().filter_map(|(seed, ta)| sb.get(seed).map(|tb| (*ta, *tb))).collect();
                    if paired.is_empty() {
                        continue;
                    }
                    let cells: Vec<String> = METRICS
                        .iter()
                        .map(|m| {
                            let wins = paired.iter().filter(|(x, y)| metric_value(x, m) <= metric_value(y, m)).count();
                            format!("{m} {:.2}", wins as f64 / paired.len() as f64)
                        })
                        .collect();
                    writeln!(out, "  {a:<10} vs {b:<10} {}", cells.join("  "))?;
                }
            }
        }
    }
    Ok(())
}
