//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use replica_harmony::harness::{compare_algorithms, run_trial_detailed, TrialConfig};
use replica_harmony::model::MsPerByte;
use replica_harmony::optimize::{
    exhaustive_best, hs_optimize, solve, Algorithm, OptParams, PlacementProblem, SolveParams, DEFAULT_ENUMERATION_LIMIT,
};
use replica_harmony::scenario::builtin_scenario;
use replica_harmony::seed::Stream;
use replica_harmony::{
    access_delay, placement_energy, replication_cost, AllocationVector, DataItem, EnergyParams, Gateway, LinkMatrix,
    MiniCloud, Topology,
};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_topology(rng: &mut Stream, gateways: usize, clouds: usize) -> Topology {
    let delay = |rng: &mut Stream| MsPerByte(rng.gen_range(20.0..=70.0));
    let rate = |rng: &mut Stream| rng.gen_range(500.0..=5000.0);
    Topology {
        gateways: (0..gateways)
            .map(|id| Gateway { id, read_delay: delay(rng), waiting_time: rng.gen_range(0.0..=0.1) })
            .collect(),
        clouds: (0..clouds)
            .map(|id| MiniCloud {
                id,
                write_delay: delay(rng),
                read_delay: delay(rng),
                waiting_time: rng.gen_range(0.0..=0.1),
                total_capacity: 1 << 30,
                used_capacity: 0,
            })
            .collect(),
        links: LinkMatrix {
            gw_to_cloud: (0..gateways).map(|_| (0..clouds).map(|_| rate(rng)).collect()).collect(),
            cloud_to_cloud: (0..clouds).map(|_| (0..clouds).map(|_| rate(rng)).collect()).collect(),
        },
    }
}

fn datum(rng: &mut Stream, t: &Topology, r: usize) -> DataItem {
    DataItem {
        id: 0,
        size: rng.gen_range(1..=100_000),
        source_gateway: rng.gen_range(0..t.gateways.len()),
        replica_count: r,
        arrival_timestep: 1,
    }
}

fn random_vector(rng: &mut Stream, n: usize, r: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids.truncate(r);
    ids
}

/// Brute-force evaluation straight from the definition, by position.
fn oracle(t: &Topology, d: &DataItem, a: &[usize]) -> f64 {
    let l = d.size as f64;
    let g = &t.gateways[d.source_gateway];
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let c = &t.clouds[a[i]];
        let first = g.waiting_time
            + (1.0 / t.links.gw_to_cloud[d.source_gateway][a[i]] + g.read_delay.0 / 1000.0 + c.write_delay.0 / 1000.0) * l;
        let mut worst = 0.0f64;
        for j in 0..a.len() {
            if j == i {
                continue;
            }
            let o = &t.clouds[a[j]];
            let branch = c.waiting_time
                + (1.0 / t.links.cloud_to_cloud[a[i]][a[j]] + c.read_delay.0 / 1000.0 + o.write_delay.0 / 1000.0) * l;
            if branch > worst {
                worst = branch;
            }
        }
        if first + worst < best {
            best = first + worst;
        }
    }
    best
}

fn c1_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = Stream::seed_from_u64(1);
    for k in 0..1000 {
        let n = rng.gen_range(1..=8);
        let g = rng.gen_range(1..=3);
        let t = random_topology(&mut rng, g, n);
        let r = rng.gen_range(1..=n.min(4));
        let d = datum(&mut rng, &t, r);
        let mut ids = random_vector(&mut rng, n, r);
        let got = replication_cost(&t, &d, &AllocationVector::new(ids.clone(), n).unwrap()).unwrap().total;
        let want = oracle(&t, &d, &ids);
        check((got - want).abs() <= 1e-12 * want.abs(), || format!("instance {k}: {got} vs oracle {want}"))?;
        for _ in 0..3 {
            ids.shuffle(&mut rng);
            let p = replication_cost(&t, &d, &AllocationVector::new(ids.clone(), n).unwrap()).unwrap().total;
            check(p.to_bits() == got.to_bits(), || format!("instance {k}: permutation {ids:?} gives {p}, not {got}"))?;
        }
    }
    let el = started.elapsed();
    check(el < Duration::from_secs(10), || format!("took {el:.2?}"))?;
    Ok(format!("1000 instances within 1e-12, permutations exact, {el:.2?}"))
}

fn c2_worked_example() -> Outcome {
    let s = MsPerByte::from_secs_per_byte;
    let t = Topology {
        gateways: vec![Gateway { id: 0, read_delay: s(0.001), waiting_time: 0.1 }],
        clouds: vec![
            MiniCloud { id: 0, write_delay: s(0.002), read_delay: s(0.001), waiting_time: 0.05, total_capacity: 1000, used_capacity: 0 },
            MiniCloud { id: 1, write_delay: s(0.002), read_delay: s(0.003), waiting_time: 0.02, total_capacity: 1000, used_capacity: 0 },
        ],
        links: LinkMatrix { gw_to_cloud: vec![vec![1000.0, 2000.0]], cloud_to_cloud: vec![vec![0.0, 500.0], vec![500.0, 0.0]] },
    };
    let d = DataItem { id: 0, size: 100, source_gateway: 0, replica_count: 2, arrival_timestep: 1 };
    let b = replication_cost(&t, &d, &AllocationVector::new(vec![0, 1], 2).unwrap()).map_err(|e| e.to_string())?;
    check((b.total - 1.05).abs() < 1e-12, || format!("total {}", b.total))?;
    check(b.entry_cloud == 0, || format!("entry cloud index {}", b.entry_cloud))?;
    Ok(format!("total {} s via the first cloud", b.total))
}

fn c3_desk_scale_optimality() -> Outcome {
    let started = Instant::now();
    let mut hits = 0;
    for trial in 0..100u64 {
        let mut rng = Stream::seed_from_u64(1000 + trial);
        let t = random_topology(&mut rng, 2, 8);
        let d = datum(&mut rng, &t, 3);
        let p = PlacementProblem::new(&t, &d).map_err(|e| e.to_string())?;
        let opt = exhaustive_best(&p, DEFAULT_ENUMERATION_LIMIT).map_err(|e| e.to_string())?;
        let hs = hs_optimize(&p, &OptParams { memory_size: 10, exercises: 200, seed: trial }).map_err(|e| e.to_string())?;
        if hs.best_cost == opt.best_cost {
            hits += 1;
        }
        let params = SolveParams { memory_size: 10, exercises: 200, enumeration_limit: DEFAULT_ENUMERATION_LIMIT };
        for alg in Algorithm::ALL {
            let r = solve(alg, &p, &params, trial).map_err(|e| e.to_string())?;
            check(r.best_cost >= opt.best_cost, || format!("trial {trial}: {alg} {} below exhaustive {}", r.best_cost, opt.best_cost))?;
        }
    }
    let el = started.elapsed();
    check(hits >= 95, || format!("optimum found in {hits}/100"))?;
    check(el < Duration::from_secs(30), || format!("took {el:.2?}"))?;
    Ok(format!("optimum found in {hits}/100, no optimizer below exhaustive, {el:.2?}"))
}

fn c4_directional() -> Outcome {
    let started = Instant::now();
    let algs = [Algorithm::Hs, Algorithm::Random, Algorithm::Ga, Algorithm::Foa];
    let seeds: Vec<u64> = (0..30).collect();
    let cfg = TrialConfig::default();
    let mut beats_baselines = 0;
    let mut lines = Vec::new();
    for k in 1..=4 {
        let spec = builtin_scenario(k).map_err(|e| e.to_string())?;
        let c = compare_algorithms(&spec, &algs, &seeds, &cfg).map_err(|e| e.to_string())?;
        let mean = |a: &str| c.table.row(a).unwrap().summary.cost.mean;
        let win = c.table.win_rate("hs", "random", "cost").unwrap();
        check(mean("hs") <= mean("random") && win >= 0.9, || {
            format!("{}: hs {} vs random {}, win rate {win}", spec.name, mean("hs"), mean("random"))
        })?;
        if mean("hs") <= mean("ga") && mean("hs") <= mean("foa") {
            beats_baselines += 1;
        }
        lines.push(format!(
            "{} hs {:.4} random {:.4} ga {:.4} foa {:.4} win {:.2}",
            spec.name,
            mean("hs"),
            mean("random"),
            mean("ga"),
            mean("foa"),
            win
        ));
    }
    let el = started.elapsed();
    check(beats_baselines >= 3, || format!("hs <= ga and foa on {beats_baselines}/4 scenarios: {}", lines.join("; ")))?;
    check(el < Duration::from_secs(600), || format!("took {el:.2?}"))?;
    Ok(format!("hs <= ga and foa on {beats_baselines}/4; {}; {el:.2?}", lines.join("; ")))
}

fn c5_monotone_trace() -> Outcome {
    for run in 0..1000u64 {
        let mut rng = Stream::seed_from_u64(50_000 + run);
        let n = rng.gen_range(4..=25);
        let t = random_topology(&mut rng, 3, n);
        let r = rng.gen_range(1..=n.min(4));
        let d = datum(&mut rng, &t, r);
        let p = PlacementProblem::new(&t, &d).map_err(|e| e.to_string())?;
        let r = hs_optimize(&p, &OptParams { memory_size: 10, exercises: rng.gen_range(5..=50), seed: run })
            .map_err(|e| e.to_string())?;
        check(r.trace.windows(2).all(|w| w[1] <= w[0]), || format!("run {run}: trace {:?}", r.trace))?;
        check(r.trace.last() == Some(&r.best_cost), || format!("run {run}: trace ends off the best cost"))?;
    }
    Ok("1000 runs, every trace non-increasing".into())
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c6_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out = tmp.path().join(name);
        let code = replica_harmony::cli::run([
            "replica-harmony", "compare", "--scenario", "builtin:1", "--algo", "hs", "--algo", "random", "--algo", "ga",
            "--algo", "foa", "--seeds", "4", "--seed", "42", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        check(code == 0, || format!("compare exited with {code}"))?;
        trees.push(read_tree(&out));
    }
    check(trees[0].len() > 3, || "too few output files".into())?;
    check(trees[0] == trees[1], || "two runs differ".into())?;
    check(trees[0] == trees[2], || "--threads 1 and --threads 8 differ".into())?;
    Ok(format!("{} files byte-identical across runs and thread counts", trees[0].len()))
}

fn c7_capacity_conservation() -> Outcome {
    let mut lines = Vec::new();
    for k in 1..=4 {
        let spec = builtin_scenario(k).map_err(|e| e.to_string())?;
        let o = run_trial_detailed(&spec, Algorithm::Hs, 7, &TrialConfig::default()).map_err(|e| e.to_string())?;
        let mut t = o.initial_topology.clone();
        let sizes: std::collections::HashMap<usize, &DataItem> = o.workload.iter().map(|d| (d.id, d)).collect();
        let mut expected: u64 = 0;
        for (id, a) in &o.placements {
            let d = sizes[id];
            check(a.len() == d.replica_count, || format!("{}: datum {id} has {} replicas", spec.name, a.len()))?;
            for &c in a.ids() {
                t.clouds[c].used_capacity += d.size;
                check(t.clouds[c].used_capacity <= t.clouds[c].total_capacity, || {
                    format!("{}: cloud {c} over capacity after datum {id}", spec.name)
                })?;
            }
            expected += d.size * d.replica_count as u64;
        }
        let initial: u64 = o.initial_topology.clouds.iter().map(|c| c.used_capacity).sum();
        let used: u64 = o.final_topology.clouds.iter().map(|c| c.used_capacity).sum();
        check(o.final_topology.clouds.iter().all(|c| c.used_capacity <= c.total_capacity), || {
            format!("{}: final topology over capacity", spec.name)
        })?;
        check(used - initial == expected, || format!("{}: used {} vs placed {expected}", spec.name, used - initial))?;
        check(o.report.series.len() == spec.timesteps, || format!("{}: {} steps", spec.name, o.report.series.len()))?;
        lines.push(format!("{} {} placed, {} failed", spec.name, o.placements.len(), o.report.totals.failures));
    }
    Ok(lines.join("; "))
}

fn c8_metric_sanity() -> Outcome {
    let mut rng = Stream::seed_from_u64(8);
    let e = EnergyParams::default();
    for k in 0..10_000 {
        let n = rng.gen_range(2..=12);
        let t = random_topology(&mut rng, 2, n);
        let r = rng.gen_range(1..n);
        let mut d = datum(&mut rng, &t, r);
        let ids = random_vector(&mut rng, n, r + 1);
        let small = AllocationVector::new(ids[..r].to_vec(), n).unwrap();
        let big = AllocationVector::new(ids.clone(), n).unwrap();
        let requester = rng.gen_range(0..t.gateways.len());
        let before = access_delay(&t, &d, &small, requester).unwrap();
        let after = access_delay(&t, &d, &big, requester).unwrap();
        check(after <= before, || format!("instance {k}: delay rose from {before} to {after}"))?;
        let e_small = placement_energy(&d, &small, &e);
        d.replica_count = r + 1;
        let e_big = placement_energy(&d, &big, &e);
        check(e_big > e_small, || format!("instance {k}: energy {e_small} -> {e_big}"))?;
    }
    Ok("10000 instances".into())
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("1 cost oracle equivalence", c1_oracle_equivalence),
        ("2 worked example", c2_worked_example),
        ("3 desk-scale optimality", c3_desk_scale_optimality),
        ("4 directional comparison", c4_directional),
        ("5 monotone trace", c5_monotone_trace),
        ("6 determinism", c6_determinism),
        ("7 capacity conservation", c7_capacity_conservation),
        ("8 metric sanity", c8_metric_sanity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
