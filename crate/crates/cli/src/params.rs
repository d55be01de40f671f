//! Input schemas for the analytical subcommands.

use rro_core::overhead::{FormulaMode, MonitoredRoute, NetworkShape};
use serde::{Deserialize, Serialize};

fn default_coverage() -> [f64; 3] {
    [1.0; 3]
}

/// One network shape as written in a parameters file; optional fields get
/// neutral defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub nodes: u32,
    pub hops: u32,
    pub p: f64,
    #[serde(default = "default_coverage")]
    pub coverage: [f64; 3],
    #[serde(default)]
    pub tiers: Vec<f64>,
    #[serde(default)]
    pub mode: FormulaMode,
}

impl ShapeSpec {
    pub fn to_shape(&self, mode_override: Option<FormulaMode>) -> NetworkShape {
        NetworkShape::new(self.nodes, self.hops, self.p)
            .with_coverage(self.coverage)
            .with_tier_neighbors(self.tiers.clone())
            .with_mode(mode_override.unwrap_or(self.mode))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteSpec {
    pub links: u32,
    pub lifetime: f64,
    pub interval: f64,
}

impl RouteSpec {
    pub fn to_route(&self) -> MonitoredRoute {
        MonitoredRoute::new(self.links, self.lifetime, self.interval)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsRow {
    pub shape: ShapeSpec,
    #[serde(default)]
    pub routes: Vec<RouteSpec>,
}

/// Top-level parameters file: a list of evaluation points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub rows: Vec<ParamsRow>,
}
