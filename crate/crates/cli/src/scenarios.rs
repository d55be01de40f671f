//! Bundled scenario library plus resolution of user-supplied files.

use std::path::Path;

use rro_core::sim::{Blackout, CbrFlow, Placement, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const BUILTIN_NAMES: &[&str] = &["static-line-5", "static-grid-25", "mobility-50"];

fn cbr(src: u32, dst: u32, rate_pps: f64, start: f64) -> CbrFlow {
    CbrFlow {
        src,
        dst,
        packet_bytes: 512,
        rate_pps,
        start,
        end: None,
        max_packets: None,
    }
}

/// 5-node line, 100 m spacing, immediate network-wide discovery, one probe
/// packet. The control counters have closed-form expected values: 4 RREQ,
/// 4 RREP, 80 HELLO, 0 RERR.
pub fn static_line_5() -> ScenarioConfig {
    let mut config = ScenarioConfig::new("static-line-5", 5);
    config.area = (500.0, 100.0);
    config.placement = Placement::Explicit;
    config.positions = Some(vec![
        (0.0, 0.0),
        (100.0, 0.0),
        (200.0, 0.0),
        (300.0, 0.0),
        (400.0, 0.0),
    ]);
    config.radio.range = 150.0;
    config.duration = 14.0;
    config.params.ttl_start = 35;
    let mut probe = cbr(0, 4, 1.0, 0.5);
    probe.max_packets = Some(1);
    config.flows = vec![probe];
    config
}

/// 5x5 grid with a mid-run blackout over the center column, forcing breaks
/// and reroutes on the corner-to-corner flows.
pub fn static_grid_25() -> ScenarioConfig {
    let mut config = ScenarioConfig::new("static-grid-25", 25);
    config.area = (500.0, 500.0);
    config.placement = Placement::Grid;
    config.radio.range = 150.0;
    config.duration = 60.0;
    config.blackouts = vec![Blackout {
        x: 200.0,
        y: 0.0,
        width: 100.0,
        height: 500.0,
        start: 20.0,
        end: 35.0,
    }];
    config.flows = vec![cbr(0, 24, 2.0, 1.0), cbr(4, 20, 2.0, 1.5)];
    config
}

/// 50 nodes over 1000 x 1000 m at 2 m/s with ten 512-byte CBR flows.
pub fn mobility_50() -> ScenarioConfig {
    let mut config = ScenarioConfig::new("mobility-50", 50);
    config.area = (1000.0, 1000.0);
    config.speed = 2.0;
    config.pause = 2.0;
    config.duration = 100.0;
    config.seed = 42;
    config.flows = (0..10u32)
        .map(|i| cbr(i, 49 - i, 4.0, 1.0 + 0.5 * i as f64))
        .collect();
    config
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "static-line-5" => Some(static_line_5()),
        "static-grid-25" => Some(static_grid_25()),
        "mobility-50" => Some(mobility_50()),
        _ => None,
    }
}

/// Resolve a scenario argument: builtin name first, then a JSON file path.
pub fn resolve(arg: &str) -> Result<ScenarioConfig> {
    if let Some(config) = builtin(arg) {
        return Ok(config);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "unknown scenario '{arg}' (builtins: {})",
            BUILTIN_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{arg}: {e}")))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Values are node speeds (m/s).
    Mobility,
    /// Values are node counts.
    Scalability,
    /// Values are per-flow CBR rates (packets/s).
    Traffic,
}

/// A grid of runs: every value x seed x protocol combination of a base
/// scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Builtin scenario name or inline scenario object.
    pub base: serde_json::Value,
    pub protocols: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.seeds.is_empty() || self.protocols.is_empty() {
            return Err(CliError::Validation(
                "sweep needs non-empty values, seeds and protocols".into(),
            ));
        }
        Ok(())
    }

    pub fn base_config(&self) -> Result<ScenarioConfig> {
        match &self.base {
            serde_json::Value::String(name) => resolve(name),
            other => {
                let config: ScenarioConfig = serde_json::from_value(other.clone())
                    .map_err(|e| CliError::Validation(format!("sweep base: {e}")))?;
                config.validate()?;
                Ok(config)
            }
        }
    }

    /// The base scenario with one axis value applied.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut config = base.clone();
        match self.axis {
            SweepAxis::Mobility => config.speed = value,
            SweepAxis::Scalability => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Validation(format!(
                        "scalability value {value} is not a positive integer"
                    )));
                }
                config.node_count = value as u32;
            }
            SweepAxis::Traffic => {
                for flow in &mut config.flows {
                    flow.rate_pps = value;
                }
            }
        }
        config.validate()?;
        Ok(config)
    }
}

/// 20/50/100-node scalability grid over five seeds and all three profiles.
pub fn scalability_sweep() -> SweepSpec {
    let mut base = ScenarioConfig::new("scalability-sweep", 20);
    base.area = (1000.0, 1000.0);
    base.speed = 1.0;
    base.pause = 2.0;
    base.duration = 60.0;
    base.flows = (0..5u32).map(|i| cbr(i, 19 - i, 4.0, 1.0 + 0.5 * i as f64)).collect();
    SweepSpec {
        axis: SweepAxis::Scalability,
        values: vec![20.0, 50.0, 100.0],
        seeds: vec![1, 2, 3, 4, 5],
        base: serde_json::to_value(base).expect("serializable config"),
        protocols: vec!["aodv".into(), "dsr".into(), "dymo".into()],
    }
}

pub fn resolve_sweep(arg: &str) -> Result<SweepSpec> {
    if arg == "scalability-sweep" {
        return Ok(scalability_sweep());
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "unknown sweep '{arg}' (builtin: scalability-sweep)"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let spec: SweepSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{arg}: {e}")))?;
    spec.validate()?;
    Ok(spec)
}
