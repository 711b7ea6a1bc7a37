//! Allocation-vector optimizers.
//!
//! Every optimizer works on a [`PlacementProblem`]: one datum, the topology
//! as it stands, and the clouds that still have room for it. All of them
//! return an [`OptResult`] whose trace is the running best cost, so results
//! are directly comparable.

mod exhaustive;
mod foa;
mod ga;
mod hs;
mod random;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{replication_cost, AllocationVector};
use crate::error::{Error, Result};
use crate::model::{DataItem, Topology};
use crate::seed::Stream;

pub use exhaustive::{exhaustive_best, DEFAULT_ENUMERATION_LIMIT};
pub use foa::{foa_optimize, FoaConfig};
pub use ga::{ga_optimize, ga_optimize_from, GaConfig};
pub use hs::{
    combine_harmonies, crossover_by_mask, hs_optimize, roulette_select_pair, Harmony, HarmonyMemory, OptParams,
};
pub use random::random_search;

type Objective<'a> = Box<dyn Fn(&AllocationVector) -> f64 + 'a>;

/// One datum to place against the current capacity state.
pub struct PlacementProblem<'a> {
    topology: &'a Topology,
    datum: &'a DataItem,
    feasible: Vec<usize>,
    objective: Option<Objective<'a>>,
}

impl<'a> PlacementProblem<'a> {
    /// Fails with `Infeasible` when fewer clouds have room than replicas are
    /// required.
    pub fn new(topology: &'a Topology, datum: &'a DataItem) -> Result<Self> {
        if datum.source_gateway >= topology.num_gateways() {
            return Err(Error::InvalidAllocation(format!("datum {} enters at unknown gateway", datum.id)));
        }
        if datum.replica_count == 0 {
            return Err(Error::InvalidAllocation(format!("datum {} requests zero replicas", datum.id)));
        }
        let feasible = topology.clouds_with_room(datum.size);
        if feasible.len() < datum.replica_count {
            return Err(Error::Infeasible { required: datum.replica_count, available: feasible.len() });
        }
        Ok(PlacementProblem { topology, datum, feasible, objective: None })
    }

    /// Replaces the replication-cost objective. Used to probe optimizer
    /// mechanics with synthetic landscapes.
    pub fn with_objective(mut self, f: impl Fn(&AllocationVector) -> f64 + 'a) -> Self {
        self.objective = Some(Box::new(f));
        self
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub fn datum(&self) -> &'a DataItem {
        self.datum
    }

    pub fn replicas(&self) -> usize {
        self.datum.replica_count
    }

    /// Ids of clouds with enough free capacity, ascending.
    pub fn feasible(&self) -> &[usize] {
        &self.feasible
    }

    pub fn is_feasible(&self, a: &AllocationVector) -> bool {
        a.len() == self.replicas() && a.ids().iter().all(|c| self.feasible.binary_search(c).is_ok())
    }

    pub fn evaluate(&self, a: &AllocationVector) -> f64 {
        match &self.objective {
            Some(f) => f(a),
            None => {
                replication_cost(self.topology, self.datum, a)
                    .expect("optimizers only emit in-range, duplicate-free vectors")
                    .total
            }
        }
    }
}

/// Counts objective calls made by one optimizer run.
pub(crate) struct Evaluator<'p, 'a> {
    pub problem: &'p PlacementProblem<'a>,
    pub count: u64,
}

impl<'p, 'a> Evaluator<'p, 'a> {
    pub fn new(problem: &'p PlacementProblem<'a>) -> Self {
        Evaluator { problem, count: 0 }
    }

    pub fn eval(&mut self, a: &AllocationVector) -> f64 {
        self.count += 1;
        self.problem.evaluate(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best: AllocationVector,
    pub best_cost: f64,
    /// Best cost after each iteration; never increases.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

/// `r` distinct clouds drawn uniformly without replacement from the feasible set.
pub fn random_allocation<R: Rng + ?Sized>(problem: &PlacementProblem<'_>, rng: &mut R) -> Result<AllocationVector> {
    let r = problem.replicas();
    let mut pool = problem.feasible().to_vec();
    if pool.len() < r {
        return Err(Error::Infeasible { required: r, available: pool.len() });
    }
    let (picked, _) = pool.partial_shuffle(rng, r);
    Ok(AllocationVector::from_distinct(picked.to_vec()))
}

/// Scans left to right and replaces every repeated id with a uniformly
/// chosen feasible cloud not already in the vector.
pub fn repair_duplicates<R: Rng + ?Sized>(ids: &mut [usize], feasible: &[usize], rng: &mut R) -> Result<()> {
    for i in 0..ids.len() {
        if !ids[..i].contains(&ids[i]) {
            continue;
        }
        let unused: Vec<usize> = feasible.iter().copied().filter(|c| !ids.contains(c)).collect();
        match unused.choose(rng) {
            Some(&c) => ids[i] = c,
            None => return Err(Error::Infeasible { required: ids.len(), available: feasible.len() }),
        }
    }
    Ok(())
}

/// Swaps one random position for a random unused feasible cloud. Returns
/// `false` when every feasible cloud is already used.
pub(crate) fn replace_one<R: Rng + ?Sized>(ids: &mut [usize], feasible: &[usize], rng: &mut R) -> bool {
    let unused: Vec<usize> = feasible.iter().copied().filter(|c| !ids.contains(c)).collect();
    let Some(&c) = unused.choose(rng) else {
        return false;
    };
    let pos = rng.gen_range(0..ids.len());
    ids[pos] = c;
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hs,
    Random,
    Ga,
    Foa,
    Exhaustive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Hs, Algorithm::Random, Algorithm::Ga, Algorithm::Foa, Algorithm::Exhaustive];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hs => "hs",
            Algorithm::Random => "random",
            Algorithm::Ga => "ga",
            Algorithm::Foa => "foa",
            Algorithm::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Per-datum search settings shared by all algorithms. The evaluation budget
/// is `memory_size + exercises`, which is what harmony search spends; the
/// baselines receive the same number of evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    pub memory_size: usize,
    pub exercises: usize,
    pub enumeration_limit: u128,
}

impl SolveParams {
    pub fn budget(&self) -> usize {
        self.memory_size + self.exercises
    }
}

pub fn solve(alg: Algorithm, problem: &PlacementProblem<'_>, params: &SolveParams, seed: u64) -> Result<OptResult> {
    use rand::SeedableRng;
    let budget = params.budget();
    match alg {
        Algorithm::Hs => {
            hs_optimize(problem, &OptParams { memory_size: params.memory_size, exercises: params.exercises, seed })
        }
        Algorithm::Random => random_search(problem, budget, &mut Stream::seed_from_u64(seed)),
        Algorithm::Ga => ga_optimize(problem, &GaConfig::matched(budget, seed)),
        Algorithm::Foa => foa_optimize(problem, &FoaConfig::matched(budget, seed)),
        Algorithm::Exhaustive => exhaustive_best(problem, params.enumeration_limit),
    }
}
