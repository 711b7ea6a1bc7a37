//! Cloud system model: gateways, mini clouds, link rates and the data items
//! that flow through them.
//!
//! Per-byte delays are stored in milliseconds per byte, the unit used by the
//! topology JSON, and converted to seconds on read. Keeping the stored value
//! untouched makes parse/serialize round trips exact.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::AllocationVector;
use crate::error::{Error, Result};

/// A per-byte delay in milliseconds per byte.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MsPerByte(pub f64);

impl MsPerByte {
    pub fn from_secs_per_byte(s: f64) -> Self {
        MsPerByte(s * 1e3)
    }

    #[inline]
    pub fn secs_per_byte(self) -> f64 {
        self.0 / 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gateway {
    pub id: usize,
    /// R_j
    #[serde(rename = "read_delay_ms_per_byte")]
    pub read_delay: MsPerByte,
    /// T_dj, applied to every datum entering at this gateway.
    #[serde(rename = "waiting_time_s")]
    pub waiting_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiniCloud {
    pub id: usize,
    /// W_c
    #[serde(rename = "write_delay_ms_per_byte")]
    pub write_delay: MsPerByte,
    /// R_c
    #[serde(rename = "read_delay_ms_per_byte")]
    pub read_delay: MsPerByte,
    /// T_dc
    #[serde(rename = "waiting_time_s")]
    pub waiting_time: f64,
    #[serde(rename = "total_capacity_bytes")]
    pub total_capacity: u64,
    #[serde(rename = "used_capacity_bytes", default, skip_serializing_if = "is_zero")]
    pub used_capacity: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl MiniCloud {
    pub fn free_capacity(&self) -> u64 {
        self.total_capacity.saturating_sub(self.used_capacity)
    }
}

/// Transfer rates in bytes per second. The `cloud_to_cloud` diagonal is never
/// read and is not validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMatrix {
    pub gw_to_cloud: Vec<Vec<f64>>,
    pub cloud_to_cloud: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataItem {
    pub id: usize,
    #[serde(rename = "size_bytes")]
    pub size: u64,
    pub source_gateway: usize,
    pub replica_count: usize,
    pub arrival_timestep: usize,
}

/// How many replicas a datum receives. Counts are drawn uniformly from
/// `min_replicas..=max_replicas`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub min_replicas: usize,
    pub max_replicas: usize,
}

impl Policy {
    /// `[2, min(4, n)]`, shrunk to `[n, n]` when fewer than two clouds exist.
    pub fn default_for(num_clouds: usize) -> Self {
        let max_replicas = num_clouds.clamp(1, 4);
        Policy { min_replicas: 2.min(max_replicas), max_replicas }
    }

    pub fn validate(&self, num_clouds: usize) -> Result<()> {
        if self.min_replicas == 0 || self.min_replicas > self.max_replicas {
            return Err(Error::InvalidSpec(format!(
                "policy needs 1 <= min_replicas <= max_replicas, got [{}, {}]",
                self.min_replicas, self.max_replicas
            )));
        }
        if self.max_replicas > num_clouds {
            return Err(Error::InvalidSpec(format!(
                "policy max_replicas {} exceeds the {} mini clouds",
                self.max_replicas, num_clouds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub gateways: Vec<Gateway>,
    pub clouds: Vec<MiniCloud>,
    pub links: LinkMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Gateway(usize),
    Cloud(usize),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Gateway(j) => write!(f, "g{j}"),
            Entity::Cloud(c) => write!(f, "c{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoGateways,
    NoClouds,
    IdMismatch { entity: Entity, id: usize },
    NegativeDelay { entity: Entity, field: &'static str, value: f64 },
    NegativeWaitingTime { entity: Entity, value: f64 },
    ZeroCapacity { cloud: usize },
    CapacityOverrun { cloud: usize, used: u64, total: u64 },
    NonPositiveRate { from: Entity, to: Entity, value: f64 },
    Dimension { matrix: &'static str, expected: (usize, usize), row: Option<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoGateways => write!(f, "topology has no gateways"),
            Violation::NoClouds => write!(f, "topology has no mini clouds"),
            Violation::IdMismatch { entity, id } => write!(f, "{entity} carries id {id}"),
            Violation::NegativeDelay { entity, field, value } => {
                write!(f, "negative {field} {value} at {entity}")
            }
            Violation::NegativeWaitingTime { entity, value } => {
                write!(f, "negative waiting time {value} at {entity}")
            }
            Violation::ZeroCapacity { cloud } => write!(f, "zero total capacity at c{cloud}"),
            Violation::CapacityOverrun { cloud, used, total } => {
                write!(f, "used capacity {used} exceeds total {total} at c{cloud}")
            }
            Violation::NonPositiveRate { from, to, .. } => write!(f, "non-positive rate at ({from},{to})"),
            Violation::Dimension { matrix, expected, row } => match row {
                Some(r) => write!(f, "{matrix} row {r} does not have {} columns", expected.1),
                None => write!(f, "{matrix} does not have {} rows", expected.0),
            },
        }
    }
}

fn non_negative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn check_matrix(
    name: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
    from: fn(usize) -> Entity,
    skip_diagonal: bool,
    out: &mut Vec<Violation>,
) {
    if m.len() != rows {
        out.push(Violation::Dimension { matrix: name, expected: (rows, cols), row: None });
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            out.push(Violation::Dimension { matrix: name, expected: (rows, cols), row: Some(i) });
        }
        for (c, &rate) in row.iter().enumerate() {
            if skip_diagonal && i == c {
                continue;
            }
            if !(rate.is_finite() && rate > 0.0) {
                out.push(Violation::NonPositiveRate { from: from(i), to: Entity::Cloud(c), value: rate });
            }
        }
    }
}

/// Checks every structural and numeric invariant, naming each offender.
pub fn validate_topology(t: &Topology) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if t.gateways.is_empty() {
        out.push(Violation::NoGateways);
    }
    if t.clouds.is_empty() {
        out.push(Violation::NoClouds);
    }
    for (j, g) in t.gateways.iter().enumerate() {
        let e = Entity::Gateway(j);
        if g.id != j {
            out.push(Violation::IdMismatch { entity: e, id: g.id });
        }
        if !non_negative(g.read_delay.0) {
            out.push(Violation::NegativeDelay { entity: e, field: "read delay", value: g.read_delay.0 });
        }
        if !non_negative(g.waiting_time) {
            out.push(Violation::NegativeWaitingTime { entity: e, value: g.waiting_time });
        }
    }
    for (c, cl) in t.clouds.iter().enumerate() {
        let e = Entity::Cloud(c);
        if cl.id != c {
            out.push(Violation::IdMismatch { entity: e, id: cl.id });
        }
        if !non_negative(cl.read_delay.0) {
            out.push(Violation::NegativeDelay { entity: e, field: "read delay", value: cl.read_delay.0 });
        }
        if !non_negative(cl.write_delay.0) {
            out.push(Violation::NegativeDelay { entity: e, field: "write delay", value: cl.write_delay.0 });
        }
        if !non_negative(cl.waiting_time) {
            out.push(Violation::NegativeWaitingTime { entity: e, value: cl.waiting_time });
        }
        if cl.total_capacity == 0 {
            out.push(Violation::ZeroCapacity { cloud: c });
        }
        if cl.used_capacity > cl.total_capacity {
            out.push(Violation::CapacityOverrun { cloud: c, used: cl.used_capacity, total: cl.total_capacity });
        }
    }
    let (ng, nc) = (t.gateways.len(), t.clouds.len());
    check_matrix("gw_to_cloud", &t.links.gw_to_cloud, ng, nc, Entity::Gateway, false, &mut out);
    check_matrix("cloud_to_cloud", &t.links.cloud_to_cloud, nc, nc, Entity::Cloud, true, &mut out);

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

impl Topology {
    pub fn num_gateways(&self) -> usize {
        self.gateways.len()
    }

    pub fn num_clouds(&self) -> usize {
        self.clouds.len()
    }

    pub fn validate(&self) -> Result<()> {
        validate_topology(self).map_err(Error::InvalidTopology)
    }

    /// Parses and validates a topology document.
    pub fn from_json(s: &str) -> Result<Self> {
        let t: Topology = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Clouds with at least `bytes` of free capacity, ascending by id.
    pub fn clouds_with_room(&self, bytes: u64) -> Vec<usize> {
        self.clouds.iter().filter(|c| c.free_capacity() >= bytes).map(|c| c.id).collect()
    }

    pub fn total_used(&self) -> u64 {
        self.clouds.iter().map(|c| c.used_capacity).sum()
    }

    /// In-place, all-or-nothing variant of [`commit_placement`].
    pub fn commit(&mut self, d: &DataItem, a: &AllocationVector) -> Result<()> {
        a.check_range(self.num_clouds())?;
        if a.len() != d.replica_count {
            return Err(Error::InvalidAllocation(format!(
                "datum {} needs {} replicas, vector has {}",
                d.id,
                d.replica_count,
                a.len()
            )));
        }
        if let Some(&c) = a.ids().iter().find(|&&c| self.clouds[c].free_capacity() < d.size) {
            return Err(Error::CapacityExceeded { cloud: c, needed: d.size, free: self.clouds[c].free_capacity() });
        }
        for &c in a.ids() {
            self.clouds[c].used_capacity += d.size;
        }
        Ok(())
    }
}

/// Reserves `d.size` bytes on every cloud in `a`, returning the updated
/// topology. Fails without touching anything if any target lacks room.
pub fn commit_placement(t: &Topology, d: &DataItem, a: &AllocationVector) -> Result<Topology> {
    let mut next = t.clone();
    next.commit(d, a)?;
    Ok(next)
}
