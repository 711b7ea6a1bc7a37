//! Harmony search over allocation vectors.
//!
//! The memory holds `memory_size` harmonies sorted by ascending cost. Each
//! exercise draws two harmonies by rank-weighted roulette, builds a child by
//! taking every position from one parent or the other with equal chance,
//! repairs duplicate ids, and lets the child replace the worst harmony when
//! strictly cheaper.
//!
//! A child whose replica set is already in memory gets one position swapped
//! for an unused feasible cloud before evaluation. Without this, admitted
//! copies of the best harmony fill the memory and crossover stops producing
//! anything new.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{random_allocation, repair_duplicates, replace_one, Evaluator, OptResult, PlacementProblem};
use crate::cost::AllocationVector;
use crate::error::{Error, Result};
use crate::seed::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptParams {
    pub memory_size: usize,
    pub exercises: usize,
    pub seed: u64,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams { memory_size: 10, exercises: 10, seed: 0 }
    }
}

impl OptParams {
    pub fn validate(&self) -> Result<()> {
        if self.memory_size < 2 {
            return Err(Error::InvalidParams(format!("harmony memory size must be >= 2, got {}", self.memory_size)));
        }
        if self.exercises == 0 {
            return Err(Error::InvalidParams("at least one exercise is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmony {
    pub vector: AllocationVector,
    pub cost: f64,
}

impl Harmony {
    pub fn evaluate(problem: &PlacementProblem<'_>, vector: AllocationVector) -> Self {
        let cost = problem.evaluate(&vector);
        Harmony { vector, cost }
    }
}

/// Harmonies kept in ascending cost order; rank 0 is the best.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonyMemory {
    harmonies: Vec<Harmony>,
}

impl HarmonyMemory {
    pub fn from_harmonies(mut harmonies: Vec<Harmony>) -> Self {
        harmonies.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        HarmonyMemory { harmonies }
    }

    fn initialize(eval: &mut Evaluator<'_, '_>, size: usize, rng: &mut Stream) -> Result<Self> {
        let harmonies = (0..size)
            .map(|_| {
                let vector = random_allocation(eval.problem, rng)?;
                let cost = eval.eval(&vector);
                Ok(Harmony { vector, cost })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_harmonies(harmonies))
    }

    pub fn len(&self) -> usize {
        self.harmonies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmonies.is_empty()
    }

    pub fn harmonies(&self) -> &[Harmony] {
        &self.harmonies
    }

    pub fn best(&self) -> &Harmony {
        &self.harmonies[0]
    }

    pub fn worst(&self) -> &Harmony {
        self.harmonies.last().expect("memory is never empty")
    }

    /// True if some harmony holds the same replica set in any order.
    pub fn contains_set(&self, v: &AllocationVector) -> bool {
        self.harmonies.iter().any(|h| h.vector.len() == v.len() && v.ids().iter().all(|c| h.vector.contains(*c)))
    }

    pub fn is_sorted(&self) -> bool {
        self.harmonies.windows(2).all(|w| w[0].cost <= w[1].cost)
    }

    /// Replaces the worst harmony if `h` is strictly cheaper. Equal-cost
    /// harmonies already in memory keep their ranks ahead of the newcomer.
    pub fn offer(&mut self, h: Harmony) -> bool {
        if !(h.cost < self.worst().cost) {
            return false;
        }
        self.harmonies.pop();
        let at = self.harmonies.partition_point(|x| x.cost <= h.cost);
        self.harmonies.insert(at, h);
        true
    }
}

fn pick_rank<R: Rng + ?Sized>(len: usize, skip: Option<usize>, rng: &mut R) -> usize {
    // rank k (0-based) weighs len - k
    let weight = |k: usize| (len - k) as u64;
    let total: u64 = (0..len).filter(|&k| Some(k) != skip).map(weight).sum();
    let mut u = rng.gen_range(0..total);
    for k in (0..len).filter(|&k| Some(k) != skip) {
        if u < weight(k) {
            return k;
        }
        u -= weight(k);
    }
    unreachable!("u < total")
}

/// Two distinct ranks, drawn without replacement with weight
/// `len - k` for rank `k`.
pub fn roulette_select_pair<R: Rng + ?Sized>(memory: &HarmonyMemory, rng: &mut R) -> (usize, usize) {
    let len = memory.len();
    assert!(len >= 2, "roulette selection needs at least two harmonies");
    let first = pick_rank(len, None, rng);
    let second = pick_rank(len, Some(first), rng);
    (first, second)
}

/// Position-wise child: `mask[i]` true takes `a[i]`, false takes `b[i]`.
/// May contain duplicates.
pub fn crossover_by_mask(a: &[usize], b: &[usize], mask: impl IntoIterator<Item = bool>) -> Vec<usize> {
    assert_eq!(a.len(), b.len(), "parents must have equal length");
    a.iter().zip(b).zip(mask).map(|((&x, &y), take_a)| if take_a { x } else { y }).collect()
}

pub fn combine_harmonies<R: Rng + ?Sized>(
    a: &Harmony,
    b: &Harmony,
    problem: &PlacementProblem<'_>,
    rng: &mut R,
) -> Result<AllocationVector> {
    let r = a.vector.len();
    let mask: Vec<bool> = (0..r).map(|_| rng.gen_bool(0.5)).collect();
    let mut child = crossover_by_mask(a.vector.ids(), b.vector.ids(), mask);
    repair_duplicates(&mut child, problem.feasible(), rng)?;
    Ok(AllocationVector::from_distinct(child))
}

pub fn hs_optimize(problem: &PlacementProblem<'_>, params: &OptParams) -> Result<OptResult> {
    params.validate()?;
    let mut rng = Stream::seed_from_u64(params.seed);
    let mut eval = Evaluator::new(problem);
    let mut memory = HarmonyMemory::initialize(&mut eval, params.memory_size, &mut rng)?;

    let mut trace = Vec::with_capacity(params.exercises);
    for _ in 0..params.exercises {
        let (i, j) = roulette_select_pair(&memory, &mut rng);
        let mut child = combine_harmonies(&memory.harmonies[i], &memory.harmonies[j], problem, &mut rng)?;
        if memory.contains_set(&child) {
            let mut ids = child.into_inner();
            replace_one(&mut ids, problem.feasible(), &mut rng);
            child = AllocationVector::from_distinct(ids);
        }
        let cost = eval.eval(&child);
        memory.offer(Harmony { vector: child, cost });
        debug_assert!(memory.is_sorted());
        trace.push(memory.best().cost);
    }

    let best = memory.best().clone();
    Ok(OptResult { best: best.vector, best_cost: best.cost, trace, evaluations: eval.count })
}
