use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn default_true_area() -> (f64, f64) {
    (1000.0, 1000.0)
}

/// Unit-disk radio abstraction. Broadcast delivery is symmetric; delivery
/// takes a fixed per-hop latency plus serialization time, with independent
/// Bernoulli loss per receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadioModel {
    /// Reception range, meters.
    pub range: f64,
    /// Fixed per-hop latency, seconds.
    pub per_hop_latency: f64,
    /// Independent per-receiver loss probability in [0, 1].
    pub loss_probability: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            range: 250.0,
            per_hop_latency: 0.001,
            loss_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Placement {
    Grid,
    #[default]
    UniformRandom,
    /// Positions supplied verbatim in the config.
    Explicit,
}

/// Rectangular region that kills every node inside it during [start, end].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Blackout {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub start: f64,
    pub end: f64,
}

impl Blackout {
    pub fn contains(&self, pos: (f64, f64)) -> bool {
        pos.0 >= self.x && pos.0 <= self.x + self.width && pos.1 >= self.y && pos.1 <= self.y + self.height
    }
}

/// Constant-bit-rate application flow.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CbrFlow {
    pub src: u32,
    pub dst: u32,
    pub packet_bytes: u32,
    pub rate_pps: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub start: f64,
    /// Stop emitting at this time; defaults to the scenario duration.
    #[cfg_attr(feature = "serde", serde(default))]
    pub end: Option<f64>,
    /// Hard cap on emitted packets, e.g. 1 for a single probe.
    #[cfg_attr(feature = "serde", serde(default))]
    pub max_packets: Option<u64>,
}

/// Reactive engine constants. The magnitudes follow common AODV practice;
/// every value is plain config.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ProtocolParams {
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
    /// Network-wide TTL used once the expanding rings are exhausted.
    pub net_ttl: u32,
    /// Retries allowed at network-wide TTL before buffered data is dropped.
    pub rreq_retries: u32,
    /// RREP wait per discovery attempt, seconds.
    pub net_traversal_time: f64,
    /// Multiplier applied to the RREP wait after each failed attempt.
    pub beb_multiplier: f64,
    /// Periodic HELLO interval `t`, seconds.
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    /// Active route timeout `T`, seconds.
    pub route_life_time: f64,
    /// RREQ duplicate-cache window, seconds.
    pub dup_cache_window: f64,
    /// Buffered DATA packets per destination awaiting discovery.
    pub buffer_capacity: usize,
    /// TTL of the bounded repair RREQ issued at a break point.
    pub local_repair_ttl: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            ttl_start: 1,
            ttl_increment: 2,
            ttl_threshold: 7,
            net_ttl: 35,
            rreq_retries: 2,
            net_traversal_time: 2.8,
            beb_multiplier: 2.0,
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            route_life_time: 10.0,
            dup_cache_window: 6.0,
            buffer_capacity: 64,
            local_repair_ttl: 2,
        }
    }
}

/// Full description of one simulation run; together with the seed it
/// determines the trace byte for byte.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub name: String,
    pub area: (f64, f64),
    pub node_count: u32,
    pub placement: Placement,
    /// Required when `placement` is `Explicit`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub positions: Option<Vec<(f64, f64)>>,
    /// Random-waypoint speed, m/s. Zero freezes the network.
    pub speed: f64,
    /// Pause at each waypoint, seconds.
    pub pause: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub radio: RadioModel,
    /// Link bandwidth for serialization delay, bits per second.
    #[cfg_attr(feature = "serde", serde(default = "default_bandwidth"))]
    pub bandwidth_bps: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub blackouts: Vec<Blackout>,
    /// Sparse per-node lifetimes, seconds; nodes die past their lifetime.
    #[cfg_attr(feature = "serde", serde(default))]
    pub node_lifetimes: Vec<(u32, f64)>,
    pub flows: Vec<CbrFlow>,
    pub duration: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: ProtocolParams,
}

fn default_bandwidth() -> f64 {
    2_000_000.0
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, node_count: u32) -> ScenarioConfig {
        ScenarioConfig {
            name: name.into(),
            area: default_true_area(),
            node_count,
            placement: Placement::UniformRandom,
            positions: None,
            speed: 0.0,
            pause: 0.0,
            radio: RadioModel::default(),
            bandwidth_bps: default_bandwidth(),
            blackouts: Vec::new(),
            node_lifetimes: Vec::new(),
            flows: Vec::new(),
            duration: 100.0,
            seed: 1,
            params: ProtocolParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::validation("node_count", "must be positive"));
        }
        if !(self.area.0 > 0.0) || !(self.area.1 > 0.0) {
            return Err(Error::validation("area", "must be positive"));
        }
        if !(self.duration >= 0.0) {
            return Err(Error::validation("duration", "must be non-negative"));
        }
        if !(self.radio.range > 0.0) {
            return Err(Error::validation("radio.range", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.radio.loss_probability) {
            return Err(Error::validation("radio.loss_probability", "out of [0,1]"));
        }
        if !(self.radio.per_hop_latency >= 0.0) {
            return Err(Error::validation("radio.per_hop_latency", "must be non-negative"));
        }
        if !(self.bandwidth_bps > 0.0) {
            return Err(Error::validation("bandwidth_bps", "must be positive"));
        }
        if self.speed < 0.0 || self.pause < 0.0 {
            return Err(Error::validation("speed", "speed and pause must be non-negative"));
        }
        match self.placement {
            Placement::Explicit => {
                let positions = self
                    .positions
                    .as_ref()
                    .ok_or_else(|| Error::validation("positions", "required for explicit placement"))?;
                if positions.len() != self.node_count as usize {
                    return Err(Error::validation("positions", "length must equal node_count"));
                }
            }
            _ => {}
        }
        for (idx, flow) in self.flows.iter().enumerate() {
            if flow.src >= self.node_count || flow.dst >= self.node_count {
                return Err(Error::validation_at("flows", idx, "src/dst out of range"));
            }
            if !(flow.rate_pps > 0.0) {
                return Err(Error::validation_at("flows", idx, "rate must be positive"));
            }
            if flow.packet_bytes == 0 {
                return Err(Error::validation_at("flows", idx, "packet size must be positive"));
            }
        }
        for (idx, (node, lifetime)) in self.node_lifetimes.iter().enumerate() {
            if *node >= self.node_count {
                return Err(Error::validation_at("node_lifetimes", idx, "node out of range"));
            }
            if !(*lifetime >= 0.0) {
                return Err(Error::validation_at("node_lifetimes", idx, "lifetime must be non-negative"));
            }
        }
        let p = &self.params;
        if p.ttl_start == 0 || p.net_ttl == 0 {
            return Err(Error::validation("params.ttl_start", "TTLs must be positive"));
        }
        if !(p.net_traversal_time > 0.0) || !(p.hello_interval > 0.0) {
            return Err(Error::validation("params.net_traversal_time", "timers must be positive"));
        }
        if !(p.beb_multiplier >= 1.0) {
            return Err(Error::validation("params.beb_multiplier", "must be at least 1"));
        }
        if !(p.route_life_time > 0.0) || !(p.dup_cache_window > 0.0) {
            return Err(Error::validation("params.route_life_time", "must be positive"));
        }
        Ok(())
    }
}
