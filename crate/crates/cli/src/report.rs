//! Run reports and their CSV projection.

use rro_core::metrics::{self, RunReport};
use rro_core::protocol::ProtocolProfile;
use rro_core::sim::engine::SimResult;
use rro_core::sim::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// First line of every CSV this tool emits.
pub const CSV_SCHEMA: &str = "# rro-csv 1";

pub const CSV_HEADER: &str = "seed,scenario,protocol,nodes,speed,pause,throughput_bps,\
mean_delay_s,nrl,rreq,rrep,rerr,hello,ack,throughput_pps";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: String,
    pub protocol: String,
    pub seed: u64,
    pub nodes: u32,
    pub speed: f64,
    pub pause: f64,
    pub duration: f64,
    pub metrics: RunReport,
}

impl SimReport {
    pub fn from_result(config: &ScenarioConfig, protocol: &str, result: &SimResult) -> SimReport {
        let payload = config.flows.first().map(|f| f.packet_bytes).unwrap_or(0);
        SimReport {
            scenario: config.name.clone(),
            protocol: protocol.to_string(),
            seed: config.seed,
            nodes: config.node_count,
            speed: config.speed,
            pause: config.pause,
            duration: config.duration,
            metrics: metrics::compute_with_payload(result, payload),
        }
    }

    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.scenario,
            self.protocol,
            self.nodes,
            self.speed,
            self.pause,
            m.throughput_bps,
            m.mean_delay_s,
            m.nrl,
            m.control.rreq,
            m.control.rrep,
            m.control.rerr,
            m.control.hello,
            m.control.ack,
            m.throughput_pps,
        )
    }
}

/// `aodv`, `dsr`, `dymo`, or `custom:<profile.json>`.
pub fn resolve_profile(arg: &str) -> Result<ProtocolProfile> {
    if let Some(profile) = ProtocolProfile::by_name(arg) {
        return Ok(profile);
    }
    if let Some(path) = arg.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path)?;
        let profile: ProtocolProfile = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
        return Ok(profile);
    }
    Err(CliError::Validation(format!(
        "unknown protocol '{arg}' (expected aodv, dsr, dymo or custom:<file>)"
    )))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}
