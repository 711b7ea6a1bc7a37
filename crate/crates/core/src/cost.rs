//! Replication cost, access delay and placement energy of an allocation.
//!
//! Replication cost of datum `d` from gateway `j` onto allocation `A`:
//!
//! ```text
//! min_{c in A} { T_dj + (1/B_jc + R_j + W_c) * L_d
//!              + max_{c' in A \ {c}} ( T_dc + (1/B_cc' + R_c + W_c') * L_d ) }
//! ```
//!
//! The outer minimum picks the entry cloud that receives the datum from the
//! gateway; the inner maximum is the slowest branch of the star propagation
//! from that entry cloud to the other replicas (zero for a single replica).
//! All terms are seconds; sizes are bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataItem, Topology};

/// Duplicate-free list of mini-cloud ids, one per replica.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AllocationVector(Vec<usize>);

impl AllocationVector {
    pub fn new(ids: Vec<usize>, num_clouds: usize) -> Result<Self> {
        let v = AllocationVector(ids);
        v.check_range(num_clouds)?;
        Ok(v)
    }

    /// Caller guarantees distinct ids; range is checked at use sites.
    pub(crate) fn from_distinct(ids: Vec<usize>) -> Self {
        debug_assert!(!has_duplicates(&ids), "duplicate ids in {ids:?}");
        AllocationVector(ids)
    }

    pub(crate) fn check_range(&self, num_clouds: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidAllocation("empty allocation vector".into()));
        }
        if let Some(&c) = self.0.iter().find(|&&c| c >= num_clouds) {
            return Err(Error::InvalidAllocation(format!("cloud id {c} out of range for {num_clouds} clouds")));
        }
        if has_duplicates(&self.0) {
            return Err(Error::InvalidAllocation(format!("duplicate cloud ids in {:?}", self.0)));
        }
        Ok(())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, cloud: usize) -> bool {
        self.0.contains(&cloud)
    }

    /// Ids in ascending order; identifies the replica set regardless of order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.0.clone();
        s.sort_unstable();
        s
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

fn has_duplicates(ids: &[usize]) -> bool {
    ids.iter().enumerate().any(|(i, c)| ids[..i].contains(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub entry_cloud: usize,
    pub entry_cost: f64,
    pub propagation_cost: f64,
    pub total: f64,
    /// `(candidate entry cloud, total through it)` in allocation order.
    pub per_candidate: Vec<(usize, f64)>,
}

/// Energy coefficients in joules per byte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub e_uplink: f64,
    pub e_intercloud: f64,
    pub e_write: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams { e_uplink: 1.0e-6, e_intercloud: 0.5e-6, e_write: 0.2e-6 }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e_uplink", self.e_uplink), ("e_intercloud", self.e_intercloud), ("e_write", self.e_write)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_gateway(t: &Topology, gateway: usize) -> Result<()> {
    if gateway >= t.num_gateways() {
        return Err(Error::InvalidAllocation(format!(
            "gateway g{gateway} out of range for {} gateways",
            t.num_gateways()
        )));
    }
    Ok(())
}

pub fn replication_cost(t: &Topology, d: &DataItem, a: &AllocationVector) -> Result<CostBreakdown> {
    a.check_range(t.num_clouds())?;
    check_gateway(t, d.source_gateway)?;

    let size = d.size as f64;
    let gw = &t.gateways[d.source_gateway];
    let uplink = &t.links.gw_to_cloud[d.source_gateway];
    let r_j = gw.read_delay.secs_per_byte();

    let mut per_candidate = Vec::with_capacity(a.len());
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for &c in a.ids() {
        let entry = &t.clouds[c];
        let entry_cost = gw.waiting_time + (1.0 / uplink[c] + r_j + entry.write_delay.secs_per_byte()) * size;
        let r_c = entry.read_delay.secs_per_byte();
        let rates = &t.links.cloud_to_cloud[c];
        let propagation = a
            .ids()
            .iter()
            .filter(|&&other| other != c)
            .map(|&other| entry.waiting_time + (1.0 / rates[other] + r_c + t.clouds[other].write_delay.secs_per_byte()) * size)
            .fold(0.0_f64, f64::max);
        let total = entry_cost + propagation;
        per_candidate.push((c, total));
        // ties go to the smaller id so the breakdown is order independent
        let better = match best {
            None => true,
            Some((bc, _, _, bt)) => total < bt || (total == bt && c < bc),
        };
        if better {
            best = Some((c, entry_cost, propagation, total));
        }
    }
    let (entry_cloud, entry_cost, propagation_cost, total) = best.expect("allocation is non-empty");
    Ok(CostBreakdown { entry_cloud, entry_cost, propagation_cost, total, per_candidate })
}

/// Time for `requester` to read the datum from its fastest replica.
pub fn access_delay(t: &Topology, d: &DataItem, a: &AllocationVector, requester: usize) -> Result<f64> {
    a.check_range(t.num_clouds())?;
    check_gateway(t, requester)?;
    let size = d.size as f64;
    let rates = &t.links.gw_to_cloud[requester];
    Ok(a
        .ids()
        .iter()
        .map(|&c| {
            let cl = &t.clouds[c];
            cl.waiting_time + (1.0 / rates[c] + cl.read_delay.secs_per_byte()) * size
        })
        .fold(f64::INFINITY, f64::min))
}

/// One uplink transfer, `r - 1` inter-cloud copies and `r` writes, in joules.
pub fn placement_energy(d: &DataItem, a: &AllocationVector, p: &EnergyParams) -> f64 {
    let size = d.size as f64;
    let r = a.len() as f64;
    size * p.e_uplink + (r - 1.0) * size * p.e_intercloud + r * size * p.e_write
}
