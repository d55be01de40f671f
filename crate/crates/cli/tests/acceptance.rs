//! Acceptance gate: nine end-to-end checks covering the closed-form overhead
//! model, its derivatives, and the packet-level simulator. Each check prints
//! one verdict line; the gate fails if any check fails.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rro_cli::report::SimReport;
use rro_cli::scenarios;
use rro_core::metrics;
use rro_core::overhead::{
    aggregate_overhead, hello_overhead_route, hello_overhead_route_discrete, hello_overhead_total,
    rrep_overhead, rrep_overhead_at, rreq_overhead, rreq_overhead_at, FormulaMode, MonitoredRoute,
    NetworkShape,
};
use rro_core::protocol::{PacketKind, ProtocolProfile};
use rro_core::sensitivity::{
    at_clamp_boundary, default_step, finite_difference, partial_wrt_hops, partial_wrt_interval,
    partial_wrt_lifetime, partial_wrt_nodes, total_differential, Method, ParamDelta,
};
use rro_core::sim::{CbrFlow, NodeId, Placement, ScenarioConfig, SimResult, Simulator};
use rro_core::trace::TraceKind;

type CheckResult = Result<(), String>;

fn close(label: &str, actual: f64, expected: f64, rel_tol: f64) -> CheckResult {
    let scale = expected.abs().max(1.0);
    if (actual - expected).abs() <= rel_tol * scale {
        Ok(())
    } else {
        Err(format!("{label}: got {actual}, expected {expected}"))
    }
}

fn line_scenario(name: &str, links: u32) -> ScenarioConfig {
    let mut config = ScenarioConfig::new(name, links + 1);
    config.placement = Placement::Explicit;
    config.positions = Some((0..=links).map(|i| (100.0 * i as f64, 0.0)).collect());
    config.radio.range = 150.0;
    config
}

fn probe_flow(src: u32, dst: u32, start: f64) -> CbrFlow {
    CbrFlow {
        src,
        dst,
        packet_bytes: 512,
        rate_pps: 1.0,
        start,
        end: None,
        max_packets: Some(1),
    }
}

fn count_tx(result: &SimResult, kind: PacketKind) -> u64 {
    result
        .records
        .iter()
        .filter(|r| r.kind == TraceKind::Transmit && r.packet_kind == kind)
        .count() as u64
}

// ----------------------------------------------------------------------
// 1. Closed-form fixtures.
// ----------------------------------------------------------------------

fn check_analytic_fixtures() -> CheckResult {
    let tol = 1e-12;

    close("rreq(10,1,1)", rreq_overhead(&NetworkShape::new(10, 1, 1.0)).unwrap(), 72.0, tol)?;
    let two_hop = NetworkShape::new(20, 2, 1.0).with_tier_neighbors(vec![4.0]);
    close("rreq(20,2,1) literal", rreq_overhead(&two_hop).unwrap(), 864.0, tol)?;
    close(
        "rreq(20,2,1) tiered",
        rreq_overhead(&two_hop.clone().with_mode(FormulaMode::Tiered)).unwrap(),
        576.0,
        tol,
    )?;
    close(
        "rreq p=0",
        rreq_overhead(&NetworkShape::new(30, 3, 0.0).with_tier_neighbors(vec![2.0, 2.0])).unwrap(),
        0.0,
        tol,
    )?;
    close(
        "rrep(20,3,1)",
        rrep_overhead(&NetworkShape::new(20, 3, 1.0).with_tier_neighbors(vec![0.0, 0.0])).unwrap(),
        25.5,
        tol,
    )?;
    close("rrep clamp", rrep_overhead(&NetworkShape::new(3, 1, 1.0)).unwrap(), 1.0, tol)?;

    close("hello 4 links T=t", hello_overhead_route(&MonitoredRoute::new(4, 1.0, 1.0)).unwrap(), 8.0, tol)?;
    close("hello 900s", hello_overhead_route(&MonitoredRoute::new(1, 900.0, 1.0)).unwrap(), 1800.0, tol)?;
    close(
        "hello discrete floor",
        hello_overhead_route_discrete(&MonitoredRoute::new(3, 10.5, 1.0)).unwrap(),
        60.0,
        tol,
    )?;
    close("hello empty", hello_overhead_total(&[]).unwrap(), 0.0, tol)?;

    let agg = aggregate_overhead(&NetworkShape::new(10, 1, 1.0), &[MonitoredRoute::new(1, 10.0, 1.0)]).unwrap();
    close("aggregate total", agg.total, 96.5, tol)?;
    close("aggregate composition", agg.total, agg.rreq + agg.rrep + agg.hello, tol)?;

    close(
        "d/dn(10,1,1)",
        partial_wrt_nodes(&NetworkShape::new(10, 1, 1.0), &[], Method::Analytic).unwrap(),
        12.5,
        tol,
    )?;
    close(
        "hop difference(20,1,1)",
        partial_wrt_hops(&NetworkShape::new(20, 1, 1.0).with_tier_neighbors(vec![4.0]), &[], Method::Analytic)
            .unwrap(),
        680.5,
        tol,
    )?;
    close(
        "d/dT route(2,5,1)",
        partial_wrt_lifetime(&[MonitoredRoute::new(2, 5.0, 1.0)]).unwrap(),
        4.0,
        tol,
    )?;
    close(
        "d/dt route(1,10,2)",
        partial_wrt_interval(&[MonitoredRoute::new(1, 10.0, 2.0)]).unwrap(),
        -5.0,
        tol,
    )?;
    let shape = NetworkShape::new(10, 1, 1.0).with_tier_neighbors(vec![2.0]);
    let delta = ParamDelta { dlifetime: 1.0, dinterval: 1.0, ..ParamDelta::default() };
    let report =
        total_differential(&shape, &[MonitoredRoute::new(1, 10.0, 2.0)], &delta, Method::Analytic).unwrap();
    close("total differential", report.total_differential, -4.0, tol)?;
    let zero = total_differential(&shape, &[], &ParamDelta::default(), Method::Analytic).unwrap();
    close("zero delta", zero.total_differential, 0.0, tol)?;

    let err = NetworkShape::new(10, 1, 1.5).validate().unwrap_err();
    if err.to_string() != "invalid p: p out of [0,1]" {
        return Err(format!("validation message changed: {err}"));
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 2. Analytic derivatives vs central finite differences at 100 random
//    points kept away from clamp boundaries.
// ----------------------------------------------------------------------

fn random_smooth_shape(rng: &mut ChaCha8Rng) -> Option<NetworkShape> {
    let hops = rng.gen_range(1..=4u32);
    let nodes = rng.gen_range(8..=60u32);
    let p = rng.gen_range(0.05..1.0);
    let coverage = [
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.5..1.5),
    ];
    // One extra tier entry so the shape can also be evaluated at H + 1.
    let tiers: Vec<f64> = (0..hops).map(|_| rng.gen_range(0.0..3.0)).collect();
    let shape = NetworkShape::new(nodes, hops, p)
        .with_coverage(coverage)
        .with_tier_neighbors(tiers);
    shape.validate().ok()?;
    if at_clamp_boundary(&shape) {
        return None;
    }
    // Keep a margin around every per-term clamp so the function is smooth in
    // a neighborhood of n and the central difference is trustworthy.
    let n = nodes as f64;
    let tier_sum = shape.tier_sum();
    for i in 2..=4 {
        if ((n - 1.0 - i as f64) - tier_sum).abs() < 0.1 {
            return None;
        }
    }
    if n - hops as f64 - 2.0 < 0.1 {
        return None;
    }
    Some(shape)
}

fn random_routes(rng: &mut ChaCha8Rng) -> Vec<MonitoredRoute> {
    (0..rng.gen_range(1..=3))
        .map(|_| {
            MonitoredRoute::new(
                rng.gen_range(1..=5),
                rng.gen_range(1.0..20.0),
                rng.gen_range(0.3..2.0),
            )
        })
        .collect()
}

fn check_derivative_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 100 {
        attempts += 1;
        if attempts > 100_000 {
            return Err("rejection sampling stalled".into());
        }
        let Some(shape) = random_smooth_shape(&mut rng) else { continue };
        let routes = random_routes(&mut rng);
        accepted += 1;

        let n = shape.nodes as f64;
        let analytic = partial_wrt_nodes(&shape, &routes, Method::Analytic).unwrap();
        let fd = finite_difference(
            |x| Ok(rreq_overhead_at(&shape, x) + rrep_overhead_at(&shape, x)),
            n,
            default_step(n),
        )
        .unwrap();
        close(&format!("d/dn at n={n} H={}", shape.hops), fd, analytic, 1e-6)?;

        let analytic_t = partial_wrt_lifetime(&routes).unwrap();
        let fd_t = finite_difference(
            |shift| {
                let shifted: Vec<MonitoredRoute> = routes
                    .iter()
                    .map(|r| MonitoredRoute::new(r.links, r.lifetime + shift, r.interval))
                    .collect();
                hello_overhead_total(&shifted)
            },
            0.0,
            default_step(0.0),
        )
        .unwrap();
        close("d/dT", fd_t, analytic_t, 1e-6)?;

        let analytic_i = partial_wrt_interval(&routes).unwrap();
        let min_t = routes.iter().map(|r| r.interval).fold(f64::INFINITY, f64::min);
        let fd_i = finite_difference(
            |shift| {
                let shifted: Vec<MonitoredRoute> = routes
                    .iter()
                    .map(|r| MonitoredRoute::new(r.links, r.lifetime, r.interval + shift))
                    .collect();
                hello_overhead_total(&shifted)
            },
            0.0,
            default_step(0.0).min(min_t / 2.0),
        )
        .unwrap();
        close("d/dt", fd_i, analytic_i, 1e-6)?;

        // The hop count indexes summation bounds; its rate of change is the
        // exact step-one difference of the aggregate.
        let diff = partial_wrt_hops(&shape, &routes, Method::Analytic).unwrap();
        let here = aggregate_overhead(&shape, &routes).unwrap().total;
        let there = aggregate_overhead(&shape.at_hops(shape.hops + 1).unwrap(), &routes)
            .unwrap()
            .total;
        if diff != there - here {
            return Err(format!("hop difference mismatch: {diff} vs {}", there - here));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 3. Simulated beacon counts equal the discrete closed form on static
//    l-link routes.
// ----------------------------------------------------------------------

fn check_hello_equivalence() -> CheckResult {
    for links in 1..=4u32 {
        for lifetime in [5.0f64, 10.0] {
            for interval in [0.5f64, 1.0] {
                let mut config = line_scenario("hello-line", links);
                config.duration = lifetime + 4.0;
                config.params.ttl_start = 35;
                config.params.route_life_time = lifetime;
                config.params.hello_interval = interval;
                config.flows = vec![probe_flow(0, links, 0.2)];
                let result = Simulator::run(config, ProtocolProfile::aodv())
                    .map_err(|e| e.to_string())?;
                let hello = count_tx(&result, PacketKind::Hello);
                let expected = 2 * links as u64 * (lifetime / interval).floor() as u64;
                if hello != expected {
                    return Err(format!(
                        "l={links} T={lifetime} t={interval}: {hello} beacons, expected {expected}"
                    ));
                }
            }
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 4 & 5. Random connected unit-disk graphs: full flood vs staged rings.
// ----------------------------------------------------------------------

struct Graph {
    positions: Vec<(f64, f64)>,
    range: f64,
    /// BFS distance from node 0.
    dist: Vec<u32>,
    /// A node at distance exactly 3 from node 0.
    near_dest: NodeId,
}

fn mst_max_edge(positions: &[(f64, f64)]) -> f64 {
    // Prim's algorithm on the complete Euclidean graph; the longest MST edge
    // is the connectivity threshold for the unit-disk radius.
    let n = positions.len();
    let d2 = |a: (f64, f64), b: (f64, f64)| {
        let dx = a.0 - b.0;
        let dy = a.1 - b.1;
        (dx * dx + dy * dy).sqrt()
    };
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut max_edge = 0.0f64;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        max_edge = max_edge.max(best[u]);
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(d2(positions[u], positions[v]));
            }
        }
    }
    max_edge
}

fn bfs_distances(positions: &[(f64, f64)], range: f64) -> Vec<u32> {
    let n = positions.len();
    let mut dist = vec![u32::MAX; n];
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if v != u && dist[v] == u32::MAX {
                let dx = positions[u].0 - positions[v].0;
                let dy = positions[u].1 - positions[v].1;
                if (dx * dx + dy * dy).sqrt() <= range {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

fn random_graph_corpus(count: usize) -> Result<Vec<Graph>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut graphs = Vec::new();
    let mut attempts = 0;
    while graphs.len() < count {
        attempts += 1;
        if attempts > 200_000 {
            return Err("graph sampling stalled".into());
        }
        let n = rng.gen_range(10..=20usize);
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
            .collect();
        // Scaling the MST threshold keeps the graph connected but sparse, so
        // long shortest paths survive.
        let range = mst_max_edge(&positions) * 1.05;
        let dist = bfs_distances(&positions, range);
        let ecc = *dist.iter().max().unwrap();
        if ecc == u32::MAX || ecc < 5 {
            continue;
        }
        let Some(near_dest) = dist.iter().position(|&d| d == 3) else { continue };
        graphs.push(Graph {
            positions,
            range,
            dist,
            near_dest: near_dest as NodeId,
        });
    }
    Ok(graphs)
}

fn graph_scenario(graph: &Graph, name: &str, dest: NodeId) -> ScenarioConfig {
    let mut config = ScenarioConfig::new(name, graph.positions.len() as u32);
    config.placement = Placement::Explicit;
    config.positions = Some(graph.positions.clone());
    config.radio.range = graph.range;
    config.duration = 12.0;
    config.flows = vec![probe_flow(0, dest, 0.5)];
    config
}

fn check_flood_oracle() -> CheckResult {
    let graphs = random_graph_corpus(100)?;
    for (idx, graph) in graphs.iter().enumerate() {
        let n = graph.positions.len() as u64;
        let far_dest = graph
            .dist
            .iter()
            .enumerate()
            .max_by_key(|(_, &d)| d)
            .map(|(i, _)| i as NodeId)
            .unwrap();
        let mut config = graph_scenario(graph, "flood", far_dest);
        config.params.ttl_start = 35; // straight to a network-wide flood
        let result = Simulator::run(config, ProtocolProfile::dymo()).map_err(|e| e.to_string())?;

        let rreq_tx = count_tx(&result, PacketKind::Rreq);
        if rreq_tx != n - 1 {
            return Err(format!("graph {idx}: {rreq_tx} flood transmissions, expected {}", n - 1));
        }

        // First reception per node: the hop count is how much TTL the request
        // spent getting there.
        let mut first_hops: BTreeMap<NodeId, u32> = BTreeMap::new();
        for record in &result.records {
            if record.kind == TraceKind::Receive && record.packet_kind == PacketKind::Rreq {
                first_hops.entry(record.node).or_insert(36 - record.ttl);
            }
        }
        for (node, &d) in graph.dist.iter().enumerate() {
            if node == 0 {
                continue;
            }
            let got = first_hops.get(&(node as NodeId)).copied();
            if got != Some(d) {
                return Err(format!(
                    "graph {idx}: node {node} first heard the request at {got:?} hops, BFS distance {d}"
                ));
            }
        }
    }
    Ok(())
}

fn check_ring_dominance() -> CheckResult {
    let graphs = random_graph_corpus(100)?;
    for (idx, graph) in graphs.iter().enumerate() {
        let n = graph.positions.len() as u64;
        // Default staged rings: TTL 1, then 3 — the destination three hops
        // out is reached on the second ring, well before a full flood.
        let config = graph_scenario(graph, "rings", graph.near_dest);
        let result = Simulator::run(config, ProtocolProfile::dymo()).map_err(|e| e.to_string())?;
        let staged = count_tx(&result, PacketKind::Rreq);
        let flood = n - 1;
        // Eccentricity >= 5 guarantees nodes beyond the second ring, so the
        // inequality must be strict on every corpus graph.
        if staged >= flood {
            return Err(format!(
                "graph {idx}: staged search used {staged} transmissions, flood would use {flood}"
            ));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 6. Per-protocol feature counters over the bundled scenario library.
// ----------------------------------------------------------------------

fn check_profile_conformance() -> CheckResult {
    for name in scenarios::BUILTIN_NAMES {
        let config = scenarios::builtin(name).unwrap();

        let dsr = Simulator::run(config.clone(), ProtocolProfile::dsr()).map_err(|e| e.to_string())?;
        let hello = count_tx(&dsr, PacketKind::Hello);
        if hello != 0 {
            return Err(format!("{name}: dsr sent {hello} beacons"));
        }

        let dymo = Simulator::run(config.clone(), ProtocolProfile::dymo()).map_err(|e| e.to_string())?;
        let grat = dymo
            .records
            .iter()
            .filter(|r| r.kind == TraceKind::Transmit && r.packet_kind == PacketKind::Rrep && r.grat)
            .count();
        if grat != 0 {
            return Err(format!("{name}: dymo sent {grat} gratuitous replies"));
        }

        // Zero-loss static topologies never break links, so an AODV run must
        // not report any. The grid scenario's scheduled blackout exists to
        // force breaks; strip it for this check.
        if config.speed == 0.0 {
            let mut quiet = config.clone();
            quiet.blackouts.clear();
            quiet.node_lifetimes.clear();
            let aodv = Simulator::run(quiet, ProtocolProfile::aodv()).map_err(|e| e.to_string())?;
            let rerr = count_tx(&aodv, PacketKind::Rerr);
            if rerr != 0 {
                return Err(format!("{name}: static zero-loss aodv sent {rerr} error reports"));
            }
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 7. Byte-identical reports for identical inputs.
// ----------------------------------------------------------------------

fn check_determinism() -> CheckResult {
    let render = || -> Result<String, String> {
        let config = scenarios::builtin("mobility-50").unwrap();
        if config.seed != 42 {
            return Err("mobility-50 default seed changed".into());
        }
        let result = Simulator::run(config.clone(), ProtocolProfile::aodv()).map_err(|e| e.to_string())?;
        let report = SimReport::from_result(&config, "aodv", &result);
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())
    };
    let first = render()?;
    let second = render()?;
    if first != second {
        return Err("two identical runs produced different JSON".into());
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 8. Trend checks, majority over 5 seeds.
// ----------------------------------------------------------------------

struct TrendPoint {
    control: u64,
    throughput: f64,
    delay: f64,
}

fn run_point(mut config: ScenarioConfig, seed: u64, profile: ProtocolProfile) -> Result<TrendPoint, String> {
    config.seed = seed;
    let payload = config.flows.first().map(|f| f.packet_bytes).unwrap_or(0);
    let result = Simulator::run(config, profile).map_err(|e| e.to_string())?;
    let report = metrics::compute_with_payload(&result, payload);
    Ok(TrendPoint {
        control: report.control.total(),
        throughput: report.throughput_bps,
        delay: report.mean_delay_s,
    })
}

fn trend_majorities(base: &ScenarioConfig, label: &str) -> CheckResult {
    let mut a = 0;
    let mut b = 0;
    let mut c = 0;
    for seed in 1..=5u64 {
        let aodv = run_point(base.clone(), seed, ProtocolProfile::aodv())?;
        let dsr = run_point(base.clone(), seed, ProtocolProfile::dsr())?;
        let dymo = run_point(base.clone(), seed, ProtocolProfile::dymo())?;
        a += (dymo.control < aodv.control) as u32;
        b += (dsr.throughput >= dymo.throughput) as u32;
        c += (aodv.delay >= dsr.delay) as u32;
    }
    if a < 3 {
        return Err(format!("{label}: dymo control < aodv control held in only {a}/5 seeds"));
    }
    if b < 3 {
        return Err(format!("{label}: dsr throughput >= dymo throughput held in only {b}/5 seeds"));
    }
    if c < 3 {
        return Err(format!("{label}: aodv delay >= dsr delay held in only {c}/5 seeds"));
    }
    Ok(())
}

fn check_trends() -> CheckResult {
    trend_majorities(&scenarios::builtin("mobility-50").unwrap(), "mobility-50")?;
    let sweep = scenarios::scalability_sweep();
    let base = sweep.base_config().map_err(|e| e.to_string())?;
    for &value in &sweep.values {
        let config = sweep.apply(&base, value).map_err(|e| e.to_string())?;
        trend_majorities(&config, &format!("scalability {value}"))?;
    }
    Ok(())
}

// ----------------------------------------------------------------------
// 9. No delivered packet revisits a node.
// ----------------------------------------------------------------------

fn check_loop_freedom() -> CheckResult {
    for name in scenarios::BUILTIN_NAMES {
        for seed in 1..=5u64 {
            for proto in ["aodv", "dsr", "dymo"] {
                let mut config = scenarios::builtin(name).unwrap();
                config.seed = seed;
                let result = Simulator::run(config, ProtocolProfile::by_name(proto).unwrap())
                    .map_err(|e| e.to_string())?;
                for record in &result.records {
                    if record.kind != TraceKind::AppDeliver {
                        continue;
                    }
                    let mut seen = std::collections::BTreeSet::new();
                    for node in &record.path {
                        if !seen.insert(*node) {
                            return Err(format!(
                                "{name} seed {seed} {proto}: packet {} revisits node {node} on {:?}",
                                record.packet_id, record.path
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance_gate() {
    let checks: [(&str, fn() -> CheckResult); 9] = [
        ("1/9 analytic fixtures", check_analytic_fixtures),
        ("2/9 derivative oracle", check_derivative_oracle),
        ("3/9 beacon-count equivalence", check_hello_equivalence),
        ("4/9 flood oracle", check_flood_oracle),
        ("5/9 staged-ring dominance", check_ring_dominance),
        ("6/9 profile conformance", check_profile_conformance),
        ("7/9 determinism", check_determinism),
        ("8/9 trend majorities", check_trends),
        ("9/9 loop freedom", check_loop_freedom),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("criterion {name}: PASS ({:.2}s)", start.elapsed().as_secs_f64()),
            Err(msg) => {
                println!("criterion {name}: FAIL — {msg}");
                failed += 1;
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
