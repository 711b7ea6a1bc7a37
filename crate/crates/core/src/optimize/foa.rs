//! Forest optimization on allocation vectors.
//!
//! Trees carry an age. Each iteration, every age-0 tree sows `local_seeds`
//! neighbours (one position swapped for an unused cloud) and all older trees
//! age by one. Trees past `life_time` and the surplus beyond `area_limit`
//! (worst first) move to a candidate pool; a `global_fraction` of that pool
//! is re-seeded by changing half of its positions. The best tree is reset to
//! age 0 so it keeps sowing.

use rand::seq::index;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{random_allocation, replace_one, Evaluator, OptResult, PlacementProblem};
use crate::cost::AllocationVector;
use crate::error::{Error, Result};
use crate::seed::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoaConfig {
    pub initial_trees: usize,
    pub area_limit: usize,
    pub life_time: u32,
    pub local_seeds: usize,
    pub global_fraction: f64,
    /// Maximum objective evaluations, initial forest included.
    pub budget: usize,
    pub seed: u64,
}

impl Default for FoaConfig {
    fn default() -> Self {
        FoaConfig {
            initial_trees: 30,
            area_limit: 30,
            life_time: 6,
            local_seeds: 2,
            global_fraction: 0.1,
            budget: 560,
            seed: 0,
        }
    }
}

impl FoaConfig {
    /// Initial forest capped at half the budget so seeding gets the rest.
    pub fn matched(budget: usize, seed: u64) -> Self {
        let d = Self::default();
        FoaConfig { initial_trees: d.area_limit.min(budget / 2).max(1), budget, seed, ..d }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_trees == 0 || self.area_limit == 0 {
            return Err(Error::InvalidParams("FOA needs at least one tree and a positive area limit".into()));
        }
        if self.initial_trees > self.budget {
            return Err(Error::InvalidParams(format!(
                "initial forest of {} exceeds the budget of {}",
                self.initial_trees, self.budget
            )));
        }
        if !(0.0..=1.0).contains(&self.global_fraction) {
            return Err(Error::InvalidParams(format!("global_fraction must lie in [0, 1], got {}", self.global_fraction)));
        }
        Ok(())
    }
}

struct Tree {
    vector: AllocationVector,
    cost: f64,
    age: u32,
}

pub fn foa_optimize(problem: &PlacementProblem<'_>, cfg: &FoaConfig) -> Result<OptResult> {
    cfg.validate()?;
    let mut rng = Stream::seed_from_u64(cfg.seed);
    let mut eval = Evaluator::new(problem);
    let feasible = problem.feasible();
    let budget = cfg.budget as u64;

    let mut forest = Vec::with_capacity(cfg.area_limit * (cfg.local_seeds + 1));
    for _ in 0..cfg.initial_trees {
        let vector = random_allocation(problem, &mut rng)?;
        let cost = eval.eval(&vector);
        forest.push(Tree { vector, cost, age: 0 });
    }
    let mut best = {
        let b = forest.iter().fold(&forest[0], |b, t| if t.cost < b.cost { t } else { b });
        (b.vector.clone(), b.cost)
    };
    let mut trace = vec![best.1];

    let gsc = (problem.replicas() / 2).max(1);
    while eval.count < budget {
        let spent = eval.count;

        let parents: Vec<Vec<usize>> = forest.iter().filter(|t| t.age == 0).map(|t| t.vector.ids().to_vec()).collect();
        forest.iter_mut().for_each(|t| t.age += 1);
        'sow: for parent in &parents {
            for _ in 0..cfg.local_seeds {
                if eval.count >= budget {
                    break 'sow;
                }
                let mut ids = parent.clone();
                if !replace_one(&mut ids, feasible, &mut rng) {
                    break 'sow;
                }
                let vector = AllocationVector::from_distinct(ids);
                let cost = eval.eval(&vector);
                forest.push(Tree { vector, cost, age: 0 });
            }
        }

        let (mut kept, mut pool): (Vec<Tree>, Vec<Tree>) = forest.into_iter().partition(|t| t.age <= cfg.life_time);
        kept.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        if kept.len() > cfg.area_limit {
            pool.extend(kept.drain(cfg.area_limit..));
        }
        forest = kept;

        let transfers = (cfg.global_fraction * pool.len() as f64).ceil() as usize;
        for i in index::sample(&mut rng, pool.len(), transfers.min(pool.len())) {
            if eval.count >= budget {
                break;
            }
            let mut ids = pool[i].vector.ids().to_vec();
            for _ in 0..gsc {
                replace_one(&mut ids, feasible, &mut rng);
            }
            let vector = AllocationVector::from_distinct(ids);
            let cost = eval.eval(&vector);
            forest.push(Tree { vector, cost, age: 0 });
        }

        if let Some(b) = forest.iter_mut().reduce(|b, t| if t.cost < b.cost { t } else { b }) {
            b.age = 0;
            if b.cost < best.1 {
                best = (b.vector.clone(), b.cost);
            }
        }
        trace.push(best.1);

        if eval.count == spent {
            break;
        }
    }

    Ok(OptResult { best: best.0, best_cost: best.1, trace, evaluations: eval.count })
}
