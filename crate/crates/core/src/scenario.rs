//! Seeded scenario generation: topology parameters and the data arrival
//! workload.
//!
//! Defaults: 500 timesteps, datum sizes of 20..=100 bytes, read and write
//! delays of 20..=70 ms/byte, 5..=10 exercises per datum. Link rates
//! (500..=5000 B/s), capacities (50..=200 kB), waiting times (0..=0.1 s) and
//! the Bernoulli arrival probability (0.1 per gateway per step) are model
//! choices of this crate and can be overridden in the scenario JSON.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataItem, Gateway, LinkMatrix, MiniCloud, MsPerByte, Policy, Topology};

/// Inclusive range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub min: T,
    pub max: T,
}

impl<T> Bounds<T> {
    pub const fn new(min: T, max: T) -> Self {
        Bounds { min, max }
    }
}

impl Bounds<f64> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.gen_range(self.min..=self.max)
    }
}

impl Bounds<u64> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(self.min..=self.max)
    }
}

impl Bounds<usize> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

fn default_timesteps() -> usize {
    500
}
fn default_sizes() -> Bounds<u64> {
    Bounds::new(20, 100)
}
fn default_rw_delay() -> Bounds<f64> {
    Bounds::new(20.0, 70.0)
}
fn default_exercises() -> Bounds<usize> {
    Bounds::new(5, 10)
}
fn default_arrival() -> f64 {
    0.1
}
fn default_rates() -> Bounds<f64> {
    Bounds::new(500.0, 5000.0)
}
fn default_capacity() -> Bounds<u64> {
    Bounds::new(50_000, 200_000)
}
fn default_waiting() -> Bounds<f64> {
    Bounds::new(0.0, 0.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub num_gateways: usize,
    pub num_clouds: usize,
    #[serde(default = "default_timesteps")]
    pub timesteps: usize,
    #[serde(default = "default_sizes")]
    pub data_size_range_bytes: Bounds<u64>,
    #[serde(default = "default_rw_delay")]
    pub rw_delay_range_ms_per_byte: Bounds<f64>,
    #[serde(default = "default_exercises")]
    pub exercises_range: Bounds<usize>,
    #[serde(default = "default_arrival")]
    pub arrival_probability: f64,
    #[serde(default = "default_rates")]
    pub gw_to_cloud_rate_range: Bounds<f64>,
    #[serde(default = "default_rates")]
    pub cloud_to_cloud_rate_range: Bounds<f64>,
    #[serde(default = "default_capacity")]
    pub capacity_range_bytes: Bounds<u64>,
    #[serde(default = "default_waiting")]
    pub gateway_waiting_range_s: Bounds<f64>,
    #[serde(default = "default_waiting")]
    pub cloud_waiting_range_s: Bounds<f64>,
    /// Falls back to [`Policy::default_for`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(name: impl Into<String>, num_gateways: usize, num_clouds: usize) -> Self {
        ScenarioSpec {
            name: name.into(),
            num_gateways,
            num_clouds,
            timesteps: default_timesteps(),
            data_size_range_bytes: default_sizes(),
            rw_delay_range_ms_per_byte: default_rw_delay(),
            exercises_range: default_exercises(),
            arrival_probability: default_arrival(),
            gw_to_cloud_rate_range: default_rates(),
            cloud_to_cloud_rate_range: default_rates(),
            capacity_range_bytes: default_capacity(),
            gateway_waiting_range_s: default_waiting(),
            cloud_waiting_range_s: default_waiting(),
            policy: None,
            seed: 0,
        }
    }

    pub fn policy(&self) -> Policy {
        self.policy.unwrap_or_else(|| Policy::default_for(self.num_clouds))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(format!("{}: {msg}", self.name)));
        if self.num_gateways == 0 || self.num_clouds == 0 || self.timesteps == 0 {
            return bad("gateway, cloud and timestep counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.arrival_probability) {
            return bad(format!("arrival_probability {} outside [0, 1]", self.arrival_probability));
        }
        let float_ranges = [
            ("rw_delay_range_ms_per_byte", self.rw_delay_range_ms_per_byte, 0.0, true),
            ("gateway_waiting_range_s", self.gateway_waiting_range_s, 0.0, true),
            ("cloud_waiting_range_s", self.cloud_waiting_range_s, 0.0, true),
            ("gw_to_cloud_rate_range", self.gw_to_cloud_rate_range, 0.0, false),
            ("cloud_to_cloud_rate_range", self.cloud_to_cloud_rate_range, 0.0, false),
        ];
        for (name, b, floor, inclusive) in float_ranges {
            let floor_ok = if inclusive { b.min >= floor } else { b.min > floor };
            if !(b.min.is_finite() && b.max.is_finite() && floor_ok && b.min <= b.max) {
                return bad(format!("{name} [{}, {}] is empty or out of domain", b.min, b.max));
            }
        }
        for (name, b) in [("data_size_range_bytes", self.data_size_range_bytes), ("capacity_range_bytes", self.capacity_range_bytes)] {
            if b.min == 0 || b.min > b.max {
                return bad(format!("{name} [{}, {}] must be positive and non-empty", b.min, b.max));
            }
        }
        let e = self.exercises_range;
        if e.min == 0 || e.min > e.max {
            return bad(format!("exercises_range [{}, {}] must be positive and non-empty", e.min, e.max));
        }
        self.policy().validate(self.num_clouds)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// `(gateways, mini clouds)` of the four reference scenarios.
pub const BUILTIN_SIZES: [(usize, usize); 4] = [(22, 8), (25, 10), (32, 15), (40, 25)];

pub fn builtin_scenario(k: usize) -> Result<ScenarioSpec> {
    match k.checked_sub(1).and_then(|i| BUILTIN_SIZES.get(i)) {
        Some(&(g, c)) => Ok(ScenarioSpec::new(format!("scenario{k}"), g, c)),
        None => Err(Error::UnknownScenario(format!("builtin:{k}"))),
    }
}

/// Resolves `builtin:k` or a path to a scenario JSON file.
pub fn resolve_source(source: &str) -> Result<ScenarioSpec> {
    if let Some(k) = source.strip_prefix("builtin:") {
        let k: usize = k.parse().map_err(|_| Error::UnknownScenario(source.to_string()))?;
        return builtin_scenario(k);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(Error::UnknownScenario(source.to_string()));
    }
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioSpec::from_json(&s)
}

/// Expands `builtin:a..b` (inclusive) into several sources; other strings
/// pass through unchanged.
pub fn expand_sources(source: &str) -> Result<Vec<String>> {
    let Some(rest) = source.strip_prefix("builtin:") else {
        return Ok(vec![source.to_string()]);
    };
    let Some((a, b)) = rest.split_once("..") else {
        return Ok(vec![source.to_string()]);
    };
    let parse = |x: &str| x.parse::<usize>().map_err(|_| Error::UnknownScenario(source.to_string()));
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || a > b || b > BUILTIN_SIZES.len() {
        return Err(Error::UnknownScenario(source.to_string()));
    }
    Ok((a..=b).map(|k| format!("builtin:{k}")).collect())
}

pub fn generate_topology<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Topology {
    let delay = spec.rw_delay_range_ms_per_byte;
    let gateways = (0..spec.num_gateways)
        .map(|id| Gateway {
            id,
            read_delay: MsPerByte(delay.sample(rng)),
            waiting_time: spec.gateway_waiting_range_s.sample(rng),
        })
        .collect();
    let clouds = (0..spec.num_clouds)
        .map(|id| MiniCloud {
            id,
            write_delay: MsPerByte(delay.sample(rng)),
            read_delay: MsPerByte(delay.sample(rng)),
            waiting_time: spec.cloud_waiting_range_s.sample(rng),
            total_capacity: spec.capacity_range_bytes.sample(rng),
            used_capacity: 0,
        })
        .collect();
    let gw_to_cloud = (0..spec.num_gateways)
        .map(|_| (0..spec.num_clouds).map(|_| spec.gw_to_cloud_rate_range.sample(rng)).collect())
        .collect();
    let cloud_to_cloud = (0..spec.num_clouds)
        .map(|i| {
            (0..spec.num_clouds)
                .map(|j| if i == j { 0.0 } else { spec.cloud_to_cloud_rate_range.sample(rng) })
                .collect()
        })
        .collect();
    Topology { gateways, clouds, links: LinkMatrix { gw_to_cloud, cloud_to_cloud } }
}

/// Bernoulli arrivals per gateway per timestep (timesteps are 1-based),
/// ordered by arrival then gateway.
pub fn generate_workload<R: Rng + ?Sized>(spec: &ScenarioSpec, topology: &Topology, rng: &mut R) -> Vec<DataItem> {
    let policy = spec.policy();
    let mut items = Vec::new();
    for t in 1..=spec.timesteps {
        for g in 0..topology.num_gateways() {
            if rng.gen_bool(spec.arrival_probability) {
                items.push(DataItem {
                    id: items.len(),
                    size: spec.data_size_range_bytes.sample(rng),
                    source_gateway: g,
                    replica_count: rng.gen_range(policy.min_replicas..=policy.max_replicas),
                    arrival_timestep: t,
                });
            }
        }
    }
    items
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::model::validate_topology;
    use crate::seed::Stream;

    #[test]
    fn builtins_match_reference_sizes() {
        let s1 = builtin_scenario(1).unwrap();
        assert_eq!((s1.num_gateways, s1.num_clouds), (22, 8));
        let s4 = builtin_scenario(4).unwrap();
        assert_eq!((s4.num_gateways, s4.num_clouds), (40, 25));
        assert_eq!(s1.timesteps, 500);
        assert_eq!(s1.data_size_range_bytes, Bounds::new(20, 100));
        assert_eq!(s1.rw_delay_range_ms_per_byte, Bounds::new(20.0, 70.0));
        assert_eq!(s1.exercises_range, Bounds::new(5, 10));
        assert!(matches!(builtin_scenario(5), Err(Error::UnknownScenario(_))));
        assert!(matches!(builtin_scenario(0), Err(Error::UnknownScenario(_))));
        for k in 1..=4 {
            builtin_scenario(k).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn sources() {
        assert_eq!(resolve_source("builtin:2").unwrap().num_clouds, 10);
        assert!(matches!(resolve_source("builtin:9"), Err(Error::UnknownScenario(_))));
        assert!(matches!(resolve_source("builtin:x"), Err(Error::UnknownScenario(_))));
        assert!(matches!(resolve_source("/no/such/file.json"), Err(Error::UnknownScenario(_))));
        assert_eq!(expand_sources("builtin:1..4").unwrap().len(), 4);
        assert_eq!(expand_sources("builtin:3").unwrap(), vec!["builtin:3"]);
        assert!(expand_sources("builtin:2..7").is_err());
    }

    #[test]
    fn partial_json_gets_defaults() {
        let spec = ScenarioSpec::from_json(r#"{"name": "tiny", "num_gateways": 2, "num_clouds": 3}"#).unwrap();
        assert_eq!(spec.timesteps, 500);
        assert_eq!(spec.policy(), Policy { min_replicas: 2, max_replicas: 3 });
        let back = ScenarioSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_specs() {
        let mut s = ScenarioSpec::new("x", 2, 3);
        s.arrival_probability = 1.5;
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::new("x", 2, 3);
        s.gw_to_cloud_rate_range = Bounds::new(0.0, 10.0);
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::new("x", 2, 3);
        s.data_size_range_bytes = Bounds::new(50, 20);
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::new("x", 2, 3);
        s.policy = Some(Policy { min_replicas: 2, max_replicas: 4 });
        assert!(s.validate().is_err());
        assert!(ScenarioSpec::new("x", 0, 3).validate().is_err());
    }

    #[test]
    fn degenerate_ranges_pin_every_value() {
        let mut s = ScenarioSpec::new("flat", 3, 4);
        s.rw_delay_range_ms_per_byte = Bounds::new(33.0, 33.0);
        s.gateway_waiting_range_s = Bounds::new(0.05, 0.05);
        s.cloud_waiting_range_s = Bounds::new(0.01, 0.01);
        s.gw_to_cloud_rate_range = Bounds::new(1234.0, 1234.0);
        s.cloud_to_cloud_rate_range = Bounds::new(777.0, 777.0);
        s.capacity_range_bytes = Bounds::new(9000, 9000);
        let t = generate_topology(&s, &mut Stream::seed_from_u64(1));
        assert!(t.gateways.iter().all(|g| g.read_delay.0 == 33.0 && g.waiting_time == 0.05));
        assert!(t.clouds.iter().all(|c| c.read_delay.0 == 33.0
            && c.write_delay.0 == 33.0
            && c.waiting_time == 0.01
            && c.total_capacity == 9000));
        assert!(t.links.gw_to_cloud.iter().flatten().all(|&r| r == 1234.0));
        for (i, row) in t.links.cloud_to_cloud.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                assert_eq!(r, if i == j { 0.0 } else { 777.0 });
            }
        }
    }

    #[test]
    fn generated_topologies_are_valid_and_in_range() {
        for k in 1..=4 {
            let s = builtin_scenario(k).unwrap();
            let t = generate_topology(&s, &mut Stream::seed_from_u64(k as u64));
            assert_eq!(validate_topology(&t), Ok(()));
            let delays = t.gateways.iter().map(|g| g.read_delay.0).chain(t.clouds.iter().flat_map(|c| [c.read_delay.0, c.write_delay.0]));
            for d in delays {
                assert!((20.0..=70.0).contains(&d), "{d}");
            }
            assert!(t.clouds.iter().all(|c| (50_000..=200_000).contains(&c.total_capacity)));
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let s = builtin_scenario(3).unwrap();
        let a = generate_topology(&s, &mut Stream::seed_from_u64(42));
        let b = generate_topology(&s, &mut Stream::seed_from_u64(42));
        assert_eq!(a.to_json(), b.to_json());
        let wa = generate_workload(&s, &a, &mut Stream::seed_from_u64(43));
        let wb = generate_workload(&s, &b, &mut Stream::seed_from_u64(43));
        assert_eq!(wa, wb);
    }

    #[test]
    fn forced_and_empty_arrivals() {
        let mut s = ScenarioSpec::new("w", 2, 3);
        s.timesteps = 3;
        s.arrival_probability = 1.0;
        let t = generate_topology(&s, &mut Stream::seed_from_u64(0));
        let w = generate_workload(&s, &t, &mut Stream::seed_from_u64(0));
        assert_eq!(w.len(), 6);
        assert!(w.windows(2).all(|p| p[0].arrival_timestep <= p[1].arrival_timestep));
        assert!(w.iter().enumerate().all(|(i, d)| d.id == i));
        s.arrival_probability = 0.0;
        assert!(generate_workload(&s, &t, &mut Stream::seed_from_u64(0)).is_empty());
    }

    #[test]
    fn workload_sizes_and_counts() {
        let mut s = builtin_scenario(4).unwrap();
        s.timesteps = 3000;
        let t = generate_topology(&s, &mut Stream::seed_from_u64(5));
        let w = generate_workload(&s, &t, &mut Stream::seed_from_u64(6));
        assert!(w.len() >= 10_000);
        let policy = s.policy();
        assert!(w.iter().all(|d| (20..=100).contains(&d.size)));
        assert!(w.iter().all(|d| (policy.min_replicas..=policy.max_replicas).contains(&d.replica_count)));
        // expectation 3000 * 40 * 0.1 = 12_000, sd = sqrt(120_000 * 0.1 * 0.9) ~ 103.9
        let n = (s.timesteps * s.num_gateways) as f64;
        let sd = (n * 0.1 * 0.9).sqrt();
        assert!((w.len() as f64 - n * 0.1).abs() <= 3.0 * sd, "{}", w.len());
    }
}
