//! Scenario files: a line-oriented `key = value` format with optional
//! `[section]` headers.
//!
//! ```text
//! # comments start with '#'
//! [engine]
//! node_count = 30
//! sim_time = 900
//!
//! routing.protocol = proposed, mmpr
//! ```
//!
//! A key inside a section may be written bare (`node_count`) or fully
//! qualified (`engine.node_count`). Unknown keys are errors.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::energy::{Battery, DrainRateEstimator, EnergyModel};
use crate::linklayer::{NeighborConfig, PacketBuffer, RadioConfig};
use crate::mobility::{Terrain, WaypointConfig};
use crate::routing::{CostPolicy, PendingReplyBuffer, ProtocolKind, Weights};
use crate::traffic::TrafficConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: cannot parse '{text}' (expected 'key = value' or '[section]')")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("{}: invalid value for '{key}': {reason}", line.map_or("scenario".to_string(), |l| format!("line {l}")))]
    InvalidValue {
        line: Option<usize>,
        key: String,
        reason: String,
    },
}

/// Whether forwarders apply the remaining-lifetime filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LifetimeFilter {
    /// Only under the proposed protocol.
    #[default]
    Auto,
    On,
    Off,
}

impl LifetimeFilter {
    pub fn applies_to(self, protocol: ProtocolKind) -> bool {
        match self {
            LifetimeFilter::Auto => protocol == ProtocolKind::Proposed,
            LifetimeFilter::On => true,
            LifetimeFilter::Off => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingConfig {
    pub protocols: Vec<ProtocolKind>,
    pub weights: Weights,
    pub gamma: f64,
    pub far_exponents: [f64; 3],
    pub mmpr_t: f64,
    pub buffering_time: f64,
    pub relay_factor: f64,
    pub rreq_size: usize,
    pub rrep_size: usize,
    pub rerr_size: usize,
    /// Ignore requests that reach the destination directly from the source.
    pub reject_direct_routes: bool,
    pub lifetime_filter: LifetimeFilter,
    pub discovery_timeout: f64,
    pub discovery_retries: u32,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            protocols: vec![ProtocolKind::Proposed],
            weights: Weights::default(),
            gamma: 0.5,
            far_exponents: [1.0, 0.0, 1.0],
            mmpr_t: 1.0,
            buffering_time: PendingReplyBuffer::DEFAULT_BUFFERING_TIME,
            relay_factor: 2.0,
            rreq_size: 72,
            rrep_size: 44,
            rerr_size: 32,
            reject_direct_routes: false,
            lifetime_filter: LifetimeFilter::Auto,
            discovery_timeout: 1.0,
            discovery_retries: 2,
        }
    }
}

impl RoutingConfig {
    pub fn policy_for(&self, kind: ProtocolKind) -> CostPolicy {
        match kind {
            ProtocolKind::Proposed => CostPolicy::Proposed(self.weights),
            ProtocolKind::Mtpr => CostPolicy::Mtpr,
            ProtocolKind::Mbcr => CostPolicy::Mbcr,
            ProtocolKind::Mmbcr => CostPolicy::Mmbcr,
            ProtocolKind::Cmmbcr => CostPolicy::Cmmbcr { gamma: self.gamma },
            ProtocolKind::Far => {
                let [x1, x2, x3] = self.far_exponents;
                CostPolicy::Far { x1, x2, x3 }
            }
            ProtocolKind::Mmpr => CostPolicy::Mmpr { t: self.mmpr_t },
        }
    }
}

/// A parameter sweep: the same scenario run once per value of `key`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub node_count: usize,
    pub sim_time: f64,
    pub seeds: Vec<u64>,
    pub metric_interval: f64,
    pub energy: EnergyModel,
    pub initial_energy: f64,
    pub drain_alpha: f64,
    pub drain_sample_interval: f64,
    pub terrain: Terrain,
    pub waypoint: WaypointConfig,
    pub mobility_tick: f64,
    pub radio: RadioConfig,
    pub neighbors: NeighborConfig,
    pub buffer_capacity: usize,
    pub routing: RoutingConfig,
    pub traffic: TrafficConfig,
    pub retransmit_timeout: f64,
    pub sweep: Option<Sweep>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            node_count: 30,
            sim_time: 900.0,
            seeds: (1..=10).collect(),
            metric_interval: 10.0,
            energy: EnergyModel::default(),
            initial_energy: Battery::DEFAULT_INITIAL,
            drain_alpha: DrainRateEstimator::DEFAULT_ALPHA,
            drain_sample_interval: DrainRateEstimator::DEFAULT_SAMPLE_INTERVAL,
            terrain: Terrain::default(),
            waypoint: WaypointConfig::default(),
            mobility_tick: 0.25,
            radio: RadioConfig::default(),
            neighbors: NeighborConfig::default(),
            buffer_capacity: PacketBuffer::<()>::DEFAULT_CAPACITY,
            routing: RoutingConfig::default(),
            traffic: TrafficConfig::default(),
            retransmit_timeout: 0.5,
            sweep: None,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "engine.node_count",
    "engine.sim_time",
    "engine.seed",
    "engine.runs",
    "engine.seeds",
    "engine.metric_interval",
    "energy.initial_energy",
    "energy.tx_current",
    "energy.rx_current",
    "energy.voltage",
    "energy.bandwidth",
    "energy.alpha",
    "energy.sample_interval",
    "mobility.terrain_width",
    "mobility.terrain_height",
    "mobility.pause_time",
    "mobility.min_speed",
    "mobility.max_speed",
    "mobility.mobility_tick",
    "link.radio_range",
    "link.propagation_delay",
    "link.loss_probability",
    "link.beacon_interval",
    "link.neighbor_timeout",
    "link.beacon_size",
    "link.stability_window",
    "link.stability_threshold",
    "link.buffer_capacity",
    "routing.protocol",
    "routing.w1",
    "routing.w2",
    "routing.w3",
    "routing.gamma",
    "routing.x1",
    "routing.x2",
    "routing.x3",
    "routing.mmpr_t",
    "routing.buffering_time",
    "routing.relay_factor",
    "routing.rreq_size",
    "routing.rrep_size",
    "routing.rerr_size",
    "routing.reject_direct_routes",
    "routing.lifetime_filter",
    "routing.discovery_timeout",
    "routing.discovery_retries",
    "traffic.packet_size",
    "traffic.interval",
    "traffic.flows",
    "traffic.start_min",
    "traffic.start_max",
    "traffic.retransmit_timeout",
    "sweep.param",
    "sweep.values",
];

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn positive(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn nonneg(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be >= 0, got {x}"))
    }
}

fn unit(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("must lie in [0, 1], got {x}"))
    }
}

fn count(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("'{v}' is not a nonnegative integer"))
}

fn positive_count(v: &str) -> Result<usize, String> {
    match count(v)? {
        0 => Err("must be at least 1".to_string()),
        n => Ok(n),
    }
}

fn flag(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario::default();
        let mut section: Option<String> = None;
        let mut base_seed: Option<(u64, usize)> = None;
        let mut runs: Option<(usize, usize)> = None;
        let mut explicit_seeds = false;
        let mut sweep_param: Option<(String, usize)> = None;
        let mut sweep_values: Option<(Vec<String>, usize)> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ScenarioError::Syntax { line, text: raw.to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            let key = match (&section, k.contains('.')) {
                (Some(s), false) => format!("{s}.{k}"),
                _ => k.to_string(),
            };
            let invalid = |reason: String| ScenarioError::InvalidValue {
                line: Some(line),
                key: key.clone(),
                reason,
            };
            match key.as_str() {
                "engine.seed" => base_seed = Some((v.parse().map_err(|_| invalid(format!("'{v}' is not a seed")))?, line)),
                "engine.runs" => runs = Some((positive_count(v).map_err(invalid)?, line)),
                "engine.seeds" => {
                    explicit_seeds = true;
                    scenario.seeds = list(v)
                        .into_iter()
                        .map(|s| s.parse::<u64>().map_err(|_| invalid(format!("'{s}' is not a seed"))))
                        .collect::<Result<_, _>>()?;
                    if scenario.seeds.is_empty() {
                        return Err(invalid("seed list is empty".into()));
                    }
                }
                "sweep.param" => {
                    if !KEYS.contains(&v) || v.starts_with("sweep.") || v.starts_with("engine.seed") || v == "engine.runs" {
                        return Err(invalid(format!("'{v}' cannot be swept")));
                    }
                    sweep_param = Some((v.to_string(), line));
                }
                "sweep.values" => {
                    let values: Vec<String> = list(v).into_iter().map(String::from).collect();
                    if values.is_empty() {
                        return Err(invalid("no sweep values".into()));
                    }
                    sweep_values = Some((values, line));
                }
                _ if KEYS.contains(&key.as_str()) => scenario.set(&key, v).map_err(invalid)?,
                _ => return Err(ScenarioError::UnknownKey { line, key }),
            }
        }

        if !explicit_seeds && (base_seed.is_some() || runs.is_some()) {
            let start = base_seed.map_or(1, |(s, _)| s);
            let n = runs.map_or(10, |(n, _)| n);
            scenario.seeds = (0..n as u64).map(|i| start.wrapping_add(i)).collect();
        }

        match (sweep_param, sweep_values) {
            (None, None) => {}
            (Some((key, _)), Some((values, line))) => {
                for value in &values {
                    let mut probe = scenario.clone();
                    probe.set(&key, value).map_err(|reason| ScenarioError::InvalidValue {
                        line: Some(line),
                        key: "sweep.values".into(),
                        reason: format!("{key} = {value}: {reason}"),
                    })?;
                    probe.validate()?;
                }
                scenario.sweep = Some(Sweep { key, values });
            }
            (Some((_, line)), None) | (None, Some((_, line))) => {
                return Err(ScenarioError::InvalidValue {
                    line: Some(line),
                    key: "sweep".into(),
                    reason: "sweep.param and sweep.values must be given together".into(),
                })
            }
        }

        scenario.validate()?;
        Ok(scenario)
    }

    /// Applies one fully qualified key. Range checks that involve a single
    /// value happen here; cross-field checks live in [`Scenario::validate`].
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "engine.node_count" => self.node_count = positive_count(v)?,
            "engine.sim_time" => self.sim_time = nonneg(v)?,
            "engine.metric_interval" => self.metric_interval = positive(v)?,
            "energy.initial_energy" => self.initial_energy = positive(v)?,
            "energy.tx_current" => self.energy.tx_current = positive(v)?,
            "energy.rx_current" => self.energy.rx_current = positive(v)?,
            "energy.voltage" => self.energy.voltage = positive(v)?,
            "energy.bandwidth" => self.energy.bandwidth = positive(v)?,
            "energy.alpha" => self.drain_alpha = unit(v)?,
            "energy.sample_interval" => self.drain_sample_interval = positive(v)?,
            "mobility.terrain_width" => self.terrain.width = positive(v)?,
            "mobility.terrain_height" => self.terrain.height = positive(v)?,
            "mobility.pause_time" => self.waypoint.pause_time = nonneg(v)?,
            "mobility.min_speed" => self.waypoint.min_speed = nonneg(v)?,
            "mobility.max_speed" => self.waypoint.max_speed = nonneg(v)?,
            "mobility.mobility_tick" => self.mobility_tick = nonneg(v)?,
            "link.radio_range" => self.radio.range = positive(v)?,
            "link.propagation_delay" => self.radio.propagation_delay = nonneg(v)?,
            "link.loss_probability" => {
                let p = unit(v)?;
                if p >= 1.0 {
                    return Err("must be < 1".into());
                }
                self.radio.loss_probability = p;
            }
            "link.beacon_interval" => self.neighbors.beacon_interval = nonneg(v)?,
            "link.neighbor_timeout" => self.neighbors.neighbor_timeout = positive(v)?,
            "link.beacon_size" => self.neighbors.beacon_size = positive_count(v)?,
            "link.stability_window" => self.neighbors.stability_window = positive(v)?,
            "link.stability_threshold" => self.neighbors.stability_threshold = unit(v)?,
            "link.buffer_capacity" => self.buffer_capacity = positive_count(v)?,
            "routing.protocol" => {
                let kinds = list(v)
                    .into_iter()
                    .map(str::parse::<ProtocolKind>)
                    .collect::<Result<Vec<_>, _>>()?;
                if kinds.is_empty() {
                    return Err("no protocol given".into());
                }
                if let Some(k) = kinds.iter().find(|k| !k.is_live()) {
                    return Err(format!("'{k}' is an offline evaluator and cannot run in-protocol"));
                }
                self.routing.protocols = kinds;
            }
            "routing.w1" => self.routing.weights.w1 = nonneg(v)?,
            "routing.w2" => self.routing.weights.w2 = nonneg(v)?,
            "routing.w3" => self.routing.weights.w3 = nonneg(v)?,
            "routing.gamma" => self.routing.gamma = unit(v)?,
            "routing.x1" => self.routing.far_exponents[0] = nonneg(v)?,
            "routing.x2" => self.routing.far_exponents[1] = nonneg(v)?,
            "routing.x3" => self.routing.far_exponents[2] = nonneg(v)?,
            "routing.mmpr_t" => self.routing.mmpr_t = nonneg(v)?,
            "routing.buffering_time" => self.routing.buffering_time = nonneg(v)?,
            "routing.relay_factor" => self.routing.relay_factor = nonneg(v)?,
            "routing.rreq_size" => self.routing.rreq_size = positive_count(v)?,
            "routing.rrep_size" => self.routing.rrep_size = positive_count(v)?,
            "routing.rerr_size" => self.routing.rerr_size = positive_count(v)?,
            "routing.reject_direct_routes" => self.routing.reject_direct_routes = flag(v)?,
            "routing.lifetime_filter" => {
                self.routing.lifetime_filter = match v.to_ascii_lowercase().as_str() {
                    "auto" => LifetimeFilter::Auto,
                    other => {
                        if flag(other)? {
                            LifetimeFilter::On
                        } else {
                            LifetimeFilter::Off
                        }
                    }
                }
            }
            "routing.discovery_timeout" => self.routing.discovery_timeout = positive(v)?,
            "routing.discovery_retries" => {
                self.routing.discovery_retries = count(v)?.try_into().map_err(|_| "too many retries".to_string())?
            }
            "traffic.packet_size" => self.traffic.packet_size = positive_count(v)?,
            "traffic.interval" => self.traffic.interval = positive(v)?,
            "traffic.flows" => self.traffic.flows = Some(count(v)?),
            "traffic.start_min" => self.traffic.start_min = nonneg(v)?,
            "traffic.start_max" => self.traffic.start_max = nonneg(v)?,
            "traffic.retransmit_timeout" => self.retransmit_timeout = nonneg(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |key: &str, reason: &str| {
            Err(ScenarioError::InvalidValue {
                line: None,
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.waypoint.min_speed > self.waypoint.max_speed {
            return fail("mobility.min_speed", "exceeds mobility.max_speed");
        }
        if self.traffic.start_min > self.traffic.start_max {
            return fail("traffic.start_min", "exceeds traffic.start_max");
        }
        if self.seeds.is_empty() {
            return fail("engine.seeds", "no seeds");
        }
        if self.routing.protocols.is_empty() {
            return fail("routing.protocol", "no protocol");
        }
        for kind in &self.routing.protocols {
            if let Err(e) = self.routing.policy_for(*kind).validate() {
                return fail("routing.protocol", &e.to_string());
            }
        }
        if self.neighbors.beacon_interval > 0.0
            && self.neighbors.neighbor_timeout < self.neighbors.beacon_interval
        {
            return fail("link.neighbor_timeout", "shorter than link.beacon_interval");
        }
        Ok(())
    }

    /// One scenario per sweep value (or just this one when there is no
    /// sweep), paired with the value's label.
    pub fn expand_sweep(&self) -> Vec<(Option<String>, Scenario)> {
        match &self.sweep {
            None => vec![(None, self.clone())],
            Some(sweep) => sweep
                .values
                .iter()
                .map(|value| {
                    let mut s = self.clone();
                    s.set(&sweep.key, value).expect("sweep values are validated at load time");
                    s.sweep = None;
                    (Some(value.clone()), s)
                })
                .collect(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let protocols: Vec<_> = self.routing.protocols.iter().map(|p| p.name()).collect();
        writeln!(f, "nodes            {}", self.node_count)?;
        writeln!(f, "sim_time         {} s", self.sim_time)?;
        writeln!(f, "seeds            {:?}", self.seeds)?;
        writeln!(f, "terrain          {} x {} m", self.terrain.width, self.terrain.height)?;
        writeln!(
            f,
            "speed            [{}, {}] m/s, pause {} s",
            self.waypoint.min_speed, self.waypoint.max_speed, self.waypoint.pause_time
        )?;
        writeln!(f, "radio range      {} m", self.radio.range)?;
        writeln!(f, "initial energy   {} J", self.initial_energy)?;
        writeln!(f, "protocols        {}", protocols.join(", "))?;
        writeln!(
            f,
            "weights          {}/{}/{}",
            self.routing.weights.w1, self.routing.weights.w2, self.routing.weights.w3
        )?;
        writeln!(f, "buffering time   {} s", self.routing.buffering_time)?;
        write!(
            f,
            "traffic          {} B every {} s, {} flow(s)",
            self.traffic.packet_size,
            self.traffic.interval,
            self.traffic.flow_count(self.node_count)
        )?;
        if let Some(sweep) = &self.sweep {
            write!(f, "\nsweep            {} over [{}]", sweep.key, sweep.values.join(", "))?;
        }
        Ok(())
    }
}
