//! Rate of change of aggregate overhead with respect to node count, hop
//! count, route life time and HELLO interval.
//!
//! The `Analytic` method differentiates the overhead functions actually
//! implemented in [`crate::overhead`], so it can be validated against a
//! central finite difference. `PaperLiteral` evaluates a fixed set of
//! simplified derivative expressions kept for side-by-side reporting; they
//! drop the clamp terms and do not match the implemented function, so they
//! are never used as ground truth. The hop count indexes summation bounds
//! and is differentiated as a discrete forward difference of step one.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::overhead::{
    aggregate_overhead, hello_overhead_total, rreq_overhead_at, rrep_overhead_at, FormulaMode,
    MonitoredRoute, NetworkShape,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    #[default]
    Analytic,
    PaperLiteral,
    FiniteDifference,
}

/// Parameter perturbation used to assemble a total differential.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamDelta {
    pub dn: f64,
    pub dh: f64,
    pub dlifetime: f64,
    pub dinterval: f64,
}

impl ParamDelta {
    pub fn validate(&self) -> Result<()> {
        let all = [self.dn, self.dh, self.dlifetime, self.dinterval];
        if all.iter().any(|d| !d.is_finite()) {
            return Err(Error::validation("delta", "all delta components must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityReport {
    pub wrt_nodes: f64,
    pub wrt_hops: f64,
    pub wrt_lifetime: f64,
    pub wrt_interval: f64,
    pub method: Method,
    pub total_differential: f64,
    /// True when the evaluation point sits on a clamp boundary of the
    /// overhead function, where one-sided derivatives disagree.
    pub at_clamp_boundary: bool,
}

/// Default relative finite-difference step with an absolute floor.
pub fn default_step(x: f64) -> f64 {
    let rel = 1e-4 * x.abs().max(1.0);
    rel.max(1e-6)
}

/// Central difference `(f(x+step) - f(x-step)) / (2 step)`.
pub fn finite_difference<F>(f: F, x: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::validation("step", "finite-difference step must be positive"));
    }
    let hi = f(x + step)?;
    let lo = f(x - step)?;
    Ok((hi - lo) / (2.0 * step))
}

/// True when the shape sits exactly where a per-term clamp switches on or
/// off, making the overhead function non-smooth in `n`.
pub fn at_clamp_boundary(shape: &NetworkShape) -> bool {
    let n = shape.nodes as f64;
    let tier_sum = shape.tier_sum();
    for i in 2..=4u32 {
        if (n - 1.0 - i as f64) - tier_sum == 0.0 {
            return true;
        }
    }
    let h = shape.hops as f64;
    (h / 2.0) * (n - h - 2.0) * shape.p == 0.0 && shape.p > 0.0
}

fn analytic_wrt_nodes(shape: &NetworkShape) -> f64 {
    let n = shape.nodes as f64;
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
                inner += shape.p * shape.coverage[i as usize - 2];
            }
        }
        total += factor * inner;
    }
    let h = shape.hops as f64;
    let rrep_excess = (h / 2.0) * (n - h - 2.0) * shape.p;
    if rrep_excess >= 0.0 && shape.p > 0.0 && n - h - 2.0 >= 0.0 {
        total += (h / 2.0) * shape.p;
    }
    total
}

/// Simplified node-count derivative without clamp handling; comparison
/// tables only.
fn paper_literal_wrt_nodes(shape: &NetworkShape) -> f64 {
    let tier_sum = shape.tier_sum();
    let h = shape.hops as f64;
    let mut total = 0.0;
    for _k in 1..=shape.hops {
        let factor = 4.0 * libm::pow(3.0, (shape.hops - 1) as f64);
        let inner: f64 = (2..=4u32)
            .map(|i| ((-(i as f64)) - tier_sum) * shape.p * shape.coverage[i as usize - 2])
            .sum();
        total += factor * inner;
    }
    total + h + (h / 2.0) * (-h - 2.0) * shape.p
}

/// Simplified hop-count derivative using an `(H-1) * 3^(H-1)` middle term;
/// comparison tables only.
fn paper_literal_wrt_hops(shape: &NetworkShape) -> f64 {
    let n = shape.nodes as f64;
    let h = shape.hops as f64;
    let tier_sum = shape.tier_sum();
    let pow = libm::pow(3.0, (shape.hops - 1) as f64);
    let bracket_sum: f64 = (2..=4u32)
        .map(|i| ((n - 1.0 - i as f64) - tier_sum) * shape.p * shape.coverage[i as usize - 2])
        .sum();
    h * 4.0 * pow + (h - 1.0) * pow * bracket_sum + 1.0 + 0.5 * (n - 3.0) * shape.p
}

fn discovery_at(shape: &NetworkShape, n: f64) -> f64 {
    rreq_overhead_at(shape, n) + rrep_overhead_at(shape, n)
}

/// Partial derivative of aggregate overhead with respect to node count.
pub fn partial_wrt_nodes(
    shape: &NetworkShape,
    routes: &[MonitoredRoute],
    method: Method,
) -> Result<f64> {
    shape.validate()?;
    hello_overhead_total(routes)?;
    match method {
        Method::Analytic => Ok(analytic_wrt_nodes(shape)),
        Method::PaperLiteral => Ok(paper_literal_wrt_nodes(shape)),
        Method::FiniteDifference => {
            let n = shape.nodes as f64;
            let step = default_step(n);
            finite_difference(|x| Ok(discovery_at(shape, x)), n, step)
        }
    }
}

/// Discrete rate of change with respect to hop count: `R(H+1) - R(H)`.
/// `PaperLiteral` evaluates its simplified expression instead.
pub fn partial_wrt_hops(
    shape: &NetworkShape,
    routes: &[MonitoredRoute],
    method: Method,
) -> Result<f64> {
    shape.validate()?;
    if method == Method::PaperLiteral {
        return Ok(paper_literal_wrt_hops(shape));
    }
    let bumped = shape.at_hops(shape.hops + 1)?;
    let here = aggregate_overhead(shape, routes)?;
    let there = aggregate_overhead(&bumped, routes)?;
    Ok(there.total - here.total)
}

/// `sum_i (2 / t_i) * l_i`, non-negative for all valid routes.
pub fn partial_wrt_lifetime(routes: &[MonitoredRoute]) -> Result<f64> {
    hello_overhead_total(routes)?;
    Ok(routes
        .iter()
        .map(|r| (2.0 / r.interval) * r.links as f64)
        .sum())
}

/// `sum_i -2 (T_i / t_i^2) * l_i`, non-positive for all valid routes.
pub fn partial_wrt_interval(routes: &[MonitoredRoute]) -> Result<f64> {
    hello_overhead_total(routes)?;
    Ok(routes
        .iter()
        .map(|r| -2.0 * (r.lifetime / (r.interval * r.interval)) * r.links as f64)
        .sum())
}

fn fd_wrt_lifetime(routes: &[MonitoredRoute]) -> Result<f64> {
    // Shift every route lifetime in lockstep; the hello sum is linear so
    // a unit direction matches the sum of per-route partials.
    let f = |shift: f64| -> Result<f64> {
        let shifted: Vec<MonitoredRoute> = routes
            .iter()
            .map(|r| MonitoredRoute::new(r.links, r.lifetime + shift, r.interval))
            .collect();
        hello_overhead_total(&shifted)
    };
    finite_difference(f, 0.0, default_step(0.0))
}

fn fd_wrt_interval(routes: &[MonitoredRoute]) -> Result<f64> {
    let min_t = routes.iter().map(|r| r.interval).fold(f64::INFINITY, f64::min);
    let step = if routes.is_empty() {
        default_step(0.0)
    } else {
        default_step(0.0).min(min_t / 2.0)
    };
    let f = |shift: f64| -> Result<f64> {
        let shifted: Vec<MonitoredRoute> = routes
            .iter()
            .map(|r| MonitoredRoute::new(r.links, r.lifetime, r.interval + shift))
            .collect();
        hello_overhead_total(&shifted)
    };
    finite_difference(f, 0.0, step)
}

/// All four partials plus the first-order change along `delta`.
pub fn total_differential(
    shape: &NetworkShape,
    routes: &[MonitoredRoute],
    delta: &ParamDelta,
    method: Method,
) -> Result<SensitivityReport> {
    delta.validate()?;
    let wrt_nodes = partial_wrt_nodes(shape, routes, method)?;
    let wrt_hops = partial_wrt_hops(shape, routes, method)?;
    let (wrt_lifetime, wrt_interval) = match method {
        Method::FiniteDifference => (fd_wrt_lifetime(routes)?, fd_wrt_interval(routes)?),
        _ => (partial_wrt_lifetime(routes)?, partial_wrt_interval(routes)?),
    };
    let total_differential = wrt_nodes * delta.dn
        + wrt_hops * delta.dh
        + wrt_lifetime * delta.dlifetime
        + wrt_interval * delta.dinterval;
    Ok(SensitivityReport {
        wrt_nodes,
        wrt_hops,
        wrt_lifetime,
        wrt_interval,
        method,
        total_differential,
        at_clamp_boundary: at_clamp_boundary(shape),
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
    fn wrt_nodes_fixture() {
        let shape = NetworkShape::new(10, 1, 1.0);
        close(partial_wrt_nodes(&shape, &[], Method::Analytic).unwrap(), 12.5);
    }

    #[test]
    fn wrt_nodes_zero_p() {
        let shape = NetworkShape::new(15, 2, 0.0).with_tier_neighbors(vec![3.0]);
        close(partial_wrt_nodes(&shape, &[], Method::Analytic).unwrap(), 0.0);
    }

    #[test]
    fn wrt_nodes_matches_finite_difference() {
        let shape = NetworkShape::new(25, 3, 0.7).with_tier_neighbors(vec![2.0, 3.0]);
        let analytic = partial_wrt_nodes(&shape, &[], Method::Analytic).unwrap();
        let fd = partial_wrt_nodes(&shape, &[], Method::FiniteDifference).unwrap();
        let rel = (analytic - fd).abs() / analytic.abs().max(1.0);
        assert!(rel <= 1e-6, "analytic {analytic} vs fd {fd}");
    }

    #[test]
    fn wrt_hops_fixture() {
        let shape = NetworkShape::new(20, 1, 1.0).with_tier_neighbors(vec![4.0]);
        close(partial_wrt_hops(&shape, &[], Method::Analytic).unwrap(), 680.5);
    }

    #[test]
    fn wrt_hops_zero_p_is_one() {
        let shape = NetworkShape::new(20, 2, 0.0).with_tier_neighbors(vec![4.0, 4.0]);
        close(partial_wrt_hops(&shape, &[], Method::Analytic).unwrap(), 1.0);
    }

    #[test]
    fn wrt_hops_needs_tier_data() {
        let shape = NetworkShape::new(20, 2, 1.0).with_tier_neighbors(vec![4.0]);
        assert!(partial_wrt_hops(&shape, &[], Method::Analytic).is_err());
    }

    #[test]
    fn wrt_lifetime_fixtures() {
        close(partial_wrt_lifetime(&[MonitoredRoute::new(2, 5.0, 1.0)]).unwrap(), 4.0);
        close(
            partial_wrt_lifetime(&[MonitoredRoute::new(1, 5.0, 2.0), MonitoredRoute::new(3, 5.0, 1.0)]).unwrap(),
            7.0,
        );
        close(partial_wrt_lifetime(&[]).unwrap(), 0.0);
    }

    #[test]
    fn wrt_interval_fixtures() {
        close(partial_wrt_interval(&[MonitoredRoute::new(1, 10.0, 2.0)]).unwrap(), -5.0);
        close(partial_wrt_interval(&[MonitoredRoute::new(2, 4.0, 2.0)]).unwrap(), -4.0);
        close(
            partial_wrt_interval(&[MonitoredRoute::new(5, 0.0, 1.0), MonitoredRoute::new(2, 0.0, 3.0)]).unwrap(),
            0.0,
        );
    }

    #[test]
    fn total_differential_fixtures() {
        let shape = NetworkShape::new(10, 1, 1.0).with_tier_neighbors(vec![2.0]);
        let routes = [MonitoredRoute::new(2, 5.0, 1.0)];
        let delta = ParamDelta {
            dlifetime: 1.0,
            ..ParamDelta::default()
        };
        let report = total_differential(&shape, &routes, &delta, Method::Analytic).unwrap();
        close(report.total_differential, 4.0);

        let zero = total_differential(&shape, &routes, &ParamDelta::default(), Method::Analytic).unwrap();
        close(zero.total_differential, 0.0);

        let routes = [MonitoredRoute::new(1, 10.0, 2.0)];
        let delta = ParamDelta {
            dlifetime: 1.0,
            dinterval: 1.0,
            ..ParamDelta::default()
        };
        let report = total_differential(&shape, &routes, &delta, Method::Analytic).unwrap();
        close(report.total_differential, -4.0);
    }

    #[test]
    fn finite_difference_fixtures() {
        // Linear in T: exact.
        let fd = finite_difference(|t| Ok(2.0 * t), 5.0, 0.1).unwrap();
        close(fd, 2.0);
        // f(t) = 2 * 10 / t at t = 2 -> -5.
        let fd = finite_difference(|t| Ok(2.0 * 10.0 / t), 2.0, 1e-4).unwrap();
        assert!((fd + 5.0).abs() <= 1e-6);
        // Constant.
        let fd = finite_difference(|_| Ok(3.0), 1.0, 0.5).unwrap();
        close(fd, 0.0);
        assert!(finite_difference(|x| Ok(x), 1.0, 0.0).is_err());
    }

    #[test]
    fn clamp_boundary_flagged() {
        // n - H - 2 = 0 puts the rrep clamp exactly on its boundary. The hop
        // derivative evaluates at H + 1, so one tier of neighbor data rides
        // along.
        let shape = NetworkShape::new(3, 1, 1.0).with_tier_neighbors(vec![2.0]);
        let report =
            total_differential(&shape, &[], &ParamDelta::default(), Method::Analytic).unwrap();
        assert!(report.at_clamp_boundary);

        let smooth = NetworkShape::new(10, 1, 1.0).with_tier_neighbors(vec![3.0]);
        let report =
            total_differential(&smooth, &[], &ParamDelta::default(), Method::Analytic).unwrap();
        assert!(!report.at_clamp_boundary);
    }
}
