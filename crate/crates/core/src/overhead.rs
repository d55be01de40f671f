//! Closed-form control overhead of reactive route discovery and link
//! monitoring.
//!
//! Route discovery overhead is the sum of an RREQ flooding term and an RREP
//! return term; link monitoring contributes `2 * (T / t) * l` HELLO packets
//! per monitored route. All results are real-valued expectations of packet
//! counts; negative flood terms are clamped to zero per-term and the RREP
//! term never drops below the hop count itself.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Interpretation of the tier factor in the RREQ flooding sum.
///
/// The flooding sum runs a tier counter `k = 1..=H`. In [`Literal`] mode the
/// per-tier factor is the constant `4 * 3^(H-1)`; in [`Tiered`] mode it grows
/// with the tier as `4 * 3^(k-1)`. The two coincide at `H = 1`.
///
/// [`Literal`]: FormulaMode::Literal
/// [`Tiered`]: FormulaMode::Tiered
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FormulaMode {
    #[default]
    Literal,
    Tiered,
}

/// Analytic parameters of the modeled network.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkShape {
    /// Node count `n`.
    pub nodes: u32,
    /// Expected hop count source to destination `H`.
    pub hops: u32,
    /// Forwarding/connectivity probability `p` in `[0, 1]`.
    pub p: f64,
    /// Additional coverage indices `C_2, C_3, C_4`.
    pub coverage: [f64; 3],
    /// Expected neighbor counts per hop tier, `N_1..`. At least `H - 1`
    /// entries are required; extra entries allow evaluating the shape at
    /// larger hop counts (used by the discrete hop derivative).
    pub tier_neighbors: Vec<f64>,
    pub mode: FormulaMode,
}

impl NetworkShape {
    pub fn new(nodes: u32, hops: u32, p: f64) -> Self {
        NetworkShape {
            nodes,
            hops,
            p,
            coverage: [1.0; 3],
            tier_neighbors: Vec::new(),
            mode: FormulaMode::Literal,
        }
    }

    pub fn with_coverage(mut self, coverage: [f64; 3]) -> Self {
        self.coverage = coverage;
        self
    }

    pub fn with_tier_neighbors(mut self, tiers: Vec<f64>) -> Self {
        self.tier_neighbors = tiers;
        self
    }

    pub fn with_mode(mut self, mode: FormulaMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::validation("n", "node count must be at least 2"));
        }
        if self.hops < 1 {
            return Err(Error::validation("H", "hop count must be at least 1"));
        }
        if !self.p.is_finite() || !(0.0..=1.0).contains(&self.p) {
            return Err(Error::validation("p", "p out of [0,1]"));
        }
        for (idx, c) in self.coverage.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                return Err(Error::validation_at("C", idx + 2, "coverage index must be a non-negative finite real"));
            }
        }
        if self.tier_neighbors.len() + 1 < self.hops as usize {
            return Err(Error::validation(
                "tier_neighbors",
                "at least H - 1 per-tier neighbor counts are required",
            ));
        }
        for (idx, nj) in self.tier_neighbors.iter().enumerate() {
            if !nj.is_finite() || *nj < 0.0 {
                return Err(Error::validation_at("N", idx + 1, "tier neighbor count must be a non-negative finite real"));
            }
        }
        Ok(())
    }

    /// Sum of the first `H - 1` tier neighbor counts.
    pub fn tier_sum(&self) -> f64 {
        self.tier_neighbors
            .iter()
            .take(self.hops as usize - 1)
            .sum()
    }

    /// The same shape evaluated at a different hop count. Fails when the
    /// stored tier data is too short for the new hop count.
    pub fn at_hops(&self, hops: u32) -> Result<NetworkShape> {
        if self.tier_neighbors.len() + 1 < hops as usize {
            return Err(Error::validation(
                "tier_neighbors",
                "not enough tier data for the requested hop count",
            ));
        }
        let mut shape = self.clone();
        shape.hops = hops;
        Ok(shape)
    }
}

/// Maintenance parameters of one established route.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonitoredRoute {
    /// Link count `l`.
    pub links: u32,
    /// Route life time `T`, seconds.
    pub lifetime: f64,
    /// Periodic HELLO interval `t`, seconds.
    pub interval: f64,
}

impl MonitoredRoute {
    pub fn new(links: u32, lifetime: f64, interval: f64) -> Self {
        MonitoredRoute {
            links,
            lifetime,
            interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.links < 1 {
            return Err(Error::validation("l", "route must have at least one link"));
        }
        if !self.lifetime.is_finite() || self.lifetime < 0.0 {
            return Err(Error::validation("T", "route life time must be non-negative"));
        }
        if !self.interval.is_finite() || self.interval <= 0.0 {
            return Err(Error::validation("t", "periodic interval must be strictly positive"));
        }
        Ok(())
    }
}

fn validate_routes(routes: &[MonitoredRoute]) -> Result<()> {
    for (idx, route) in routes.iter().enumerate() {
        route.validate().map_err(|e| match e {
            Error::Validation { field, message } => Error::ValidationAt {
                field,
                index: idx,
                message,
            },
            other => other,
        })?;
    }
    Ok(())
}

/// Per-kind control overhead of one aggregate evaluation, in packets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverheadBreakdown {
    pub rreq: f64,
    pub rrep: f64,
    pub discovery: f64,
    pub hello: f64,
    pub total: f64,
}

/// RREQ flooding overhead, evaluated at a continuous node count.
///
/// Each tier contributes `factor * sum_{i=2..4} max(0, (n-1-i) - sum N_j) * p * C_i`
/// with `factor = 4 * 3^(H-1)` (literal) or `4 * 3^(k-1)` (tiered).
pub fn rreq_overhead_at(shape: &NetworkShape, n: f64) -> f64 {
    let tier_sum = shape.tier_sum();
    let mut total = 0.0;
    for k in 1..=shape.hops {
        let exponent = match shape.mode {
            FormulaMode::Literal => shape.hops - 1,
            FormulaMode::Tiered => k - 1,
        };
        let factor = 4.0 * libm::pow(3.0, exponent as f64);
        let mut inner = 0.0;
        for i in 2..=4u32 {
            let bracket = (n - 1.0 - i as f64) - tier_sum;
            if bracket > 0.0 {
                inner += bracket * shape.p * shape.coverage[i as usize - 2];
            }
        }
        total += factor * inner;
    }
    total
}

/// RREP return overhead at a continuous node count: `H + (H/2)(n - H - 2)p`,
/// clamped below at `H`.
pub fn rrep_overhead_at(shape: &NetworkShape, n: f64) -> f64 {
    let h = shape.hops as f64;
    let raw = h + (h / 2.0) * (n - h - 2.0) * shape.p;
    if raw < h {
        h
    } else {
        raw
    }
}

pub fn rreq_overhead(shape: &NetworkShape) -> Result<f64> {
    shape.validate()?;
    Ok(rreq_overhead_at(shape, shape.nodes as f64))
}

pub fn rrep_overhead(shape: &NetworkShape) -> Result<f64> {
    shape.validate()?;
    Ok(rrep_overhead_at(shape, shape.nodes as f64))
}

pub fn discovery_overhead(shape: &NetworkShape) -> Result<f64> {
    Ok(rreq_overhead(shape)? + rrep_overhead(shape)?)
}

/// HELLO overhead of one route, continuous form `2 * (T / t) * l`.
pub fn hello_overhead_route(route: &MonitoredRoute) -> Result<f64> {
    route.validate()?;
    Ok(2.0 * (route.lifetime / route.interval) * route.links as f64)
}

/// Discrete HELLO count `2 * l * floor(T / t)`, the quantity a packet-level
/// simulation of periodic beacons actually produces.
pub fn hello_overhead_route_discrete(route: &MonitoredRoute) -> Result<f64> {
    route.validate()?;
    Ok(2.0 * route.links as f64 * libm::floor(route.lifetime / route.interval))
}

pub fn hello_overhead_total(routes: &[MonitoredRoute]) -> Result<f64> {
    validate_routes(routes)?;
    Ok(routes
        .iter()
        .map(|r| 2.0 * (r.lifetime / r.interval) * r.links as f64)
        .sum())
}

/// Full breakdown of discovery plus monitoring overhead.
pub fn aggregate_overhead(shape: &NetworkShape, routes: &[MonitoredRoute]) -> Result<OverheadBreakdown> {
    let rreq = rreq_overhead(shape)?;
    let rrep = rrep_overhead(shape)?;
    let hello = hello_overhead_total(routes)?;
    let discovery = rreq + rrep;
    Ok(OverheadBreakdown {
        rreq,
        rrep,
        discovery,
        hello,
        total: discovery + hello,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64) {
        let scale = b.abs().max(1.0);
        assert!((a - b).abs() <= 1e-12 * scale, "{a} != {b}");
    }

    #[test]
    fn rreq_single_hop_literal() {
        // n=10, H=1, p=1, C_i=1: 4 * [(7)+(6)+(5)] = 72
        let shape = NetworkShape::new(10, 1, 1.0);
        close(rreq_overhead(&shape).unwrap(), 72.0);
    }

    #[test]
    fn rreq_two_hops_both_modes() {
        let shape = NetworkShape::new(20, 2, 1.0).with_tier_neighbors(vec![4.0]);
        close(rreq_overhead(&shape).unwrap(), 864.0);
        let tiered = shape.with_mode(FormulaMode::Tiered);
        close(rreq_overhead(&tiered).unwrap(), 576.0);
    }

    #[test]
    fn rreq_zero_p_is_zero() {
        let shape = NetworkShape::new(30, 3, 0.0).with_tier_neighbors(vec![2.0, 2.0]);
        close(rreq_overhead(&shape).unwrap(), 0.0);
    }

    #[test]
    fn rrep_fixtures() {
        close(rrep_overhead(&NetworkShape::new(20, 3, 1.0).with_tier_neighbors(vec![0.0, 0.0])).unwrap(), 25.5);
        close(rrep_overhead(&NetworkShape::new(40, 5, 0.0).with_tier_neighbors(vec![0.0; 4])).unwrap(), 5.0);
        close(rrep_overhead(&NetworkShape::new(3, 1, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn discovery_composes() {
        let shape = NetworkShape::new(10, 1, 1.0);
        close(discovery_overhead(&shape).unwrap(), 76.5);
        let zero_p = NetworkShape::new(12, 4, 0.0).with_tier_neighbors(vec![0.0; 3]);
        close(discovery_overhead(&zero_p).unwrap(), 4.0);
    }

    #[test]
    fn hello_fixtures() {
        // Four links, T = t -> 8 periodic messages.
        close(hello_overhead_route(&MonitoredRoute::new(4, 1.0, 1.0)).unwrap(), 8.0);
        close(hello_overhead_route(&MonitoredRoute::new(1, 900.0, 1.0)).unwrap(), 1800.0);
        close(hello_overhead_route(&MonitoredRoute::new(2, 0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn hello_totals() {
        let twice = [MonitoredRoute::new(1, 10.0, 1.0), MonitoredRoute::new(1, 10.0, 1.0)];
        close(hello_overhead_total(&twice).unwrap(), 40.0);
        close(hello_overhead_total(&[]).unwrap(), 0.0);
        let mixed = [MonitoredRoute::new(4, 1.0, 1.0), MonitoredRoute::new(1, 900.0, 1.0)];
        close(hello_overhead_total(&mixed).unwrap(), 1808.0);
    }

    #[test]
    fn hello_discrete_floor() {
        close(hello_overhead_route_discrete(&MonitoredRoute::new(1, 10.0, 1.0)).unwrap(), 20.0);
        close(hello_overhead_route_discrete(&MonitoredRoute::new(3, 10.5, 1.0)).unwrap(), 60.0);
    }

    #[test]
    fn aggregate_fixture() {
        let shape = NetworkShape::new(10, 1, 1.0);
        let routes = [MonitoredRoute::new(1, 10.0, 1.0)];
        let breakdown = aggregate_overhead(&shape, &routes).unwrap();
        close(breakdown.total, 96.5);
        close(breakdown.discovery, breakdown.rreq + breakdown.rrep);
        close(breakdown.total, breakdown.discovery + breakdown.hello);
    }

    #[test]
    fn aggregate_zero_p_empty_routes() {
        let shape = NetworkShape::new(9, 2, 0.0).with_tier_neighbors(vec![3.0]);
        let breakdown = aggregate_overhead(&shape, &[]).unwrap();
        close(breakdown.total, 2.0);
    }

    #[test]
    fn validation_errors_name_fields() {
        let mut shape = NetworkShape::new(10, 1, 1.5);
        assert!(matches!(shape.validate(), Err(Error::Validation { field: "p", .. })));
        shape.p = 0.5;
        shape.nodes = 1;
        assert!(matches!(shape.validate(), Err(Error::Validation { field: "n", .. })));

        let route = MonitoredRoute::new(1, 5.0, 0.0);
        assert!(matches!(route.validate(), Err(Error::Validation { field: "t", .. })));
        let routes = [MonitoredRoute::new(1, 5.0, 1.0), MonitoredRoute::new(0, 5.0, 1.0)];
        assert!(matches!(
            hello_overhead_total(&routes),
            Err(Error::ValidationAt { field: "l", index: 1, .. })
        ));
    }

    #[test]
    fn negative_brackets_clamp_to_zero() {
        // n small and tier sums large: every bracket is negative.
        let shape = NetworkShape::new(3, 2, 1.0).with_tier_neighbors(vec![10.0]);
        close(rreq_overhead(&shape).unwrap(), 0.0);
    }
}
