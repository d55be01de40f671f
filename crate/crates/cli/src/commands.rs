//! Subcommand implementations. Each returns the text that goes to stdout;
//! side-effect files (reports, CSVs, traces) land in the chosen output
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rro_core::overhead::{self, FormulaMode, MonitoredRoute, NetworkShape};
use rro_core::sensitivity::{self, Method, ParamDelta};
use rro_core::sim::engine::{SimResult, Simulator};
use rro_core::sim::ScenarioConfig;

use crate::error::{CliError, Result};
use crate::params::ParamsFile;
use crate::report::{self, SimReport, CSV_HEADER, CSV_SCHEMA};
use crate::scenarios;

pub const OUT_DIR_ENV: &str = "RRO_OUT_DIR";

fn read_params(path: &str) -> Result<ParamsFile> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

/// `--out` wins; otherwise the `RRO_OUT_DIR` environment variable.
pub fn output_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Evaluate the overhead breakdown for every row of a parameters file.
pub fn cmd_model(params_path: &str, mode: Option<FormulaMode>) -> Result<String> {
    let file = read_params(params_path)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:>6} {:>4} {:>6}  {:>14} {:>14} {:>14} {:>14} {:>14}",
        "row", "n", "H", "p", "rreq", "rrep", "discovery", "hello", "total"
    );
    for (idx, row) in file.rows.iter().enumerate() {
        let shape = row.shape.to_shape(mode);
        let routes: Vec<MonitoredRoute> = row.routes.iter().map(|r| r.to_route()).collect();
        let breakdown = overhead::aggregate_overhead(&shape, &routes)?;
        let _ = writeln!(
            out,
            "{:>4}  {:>6} {:>4} {:>6}  {:>14.6} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            idx,
            shape.nodes,
            shape.hops,
            shape.p,
            breakdown.rreq,
            breakdown.rrep,
            breakdown.discovery,
            breakdown.hello,
            breakdown.total
        );
    }
    Ok(out)
}

/// Partials by every method side by side, plus the first-order change along
/// the supplied delta.
pub fn cmd_sensitivity(
    params_path: &str,
    delta: ParamDelta,
    mode: Option<FormulaMode>,
) -> Result<String> {
    let file = read_params(params_path)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<18} {:>14} {:>14} {:>14} {:>14} {:>16}  {}",
        "row", "method", "d/dn", "d/dH", "d/dT", "d/dt", "total_diff", "clamp"
    );
    let methods = [
        ("analytic", Method::Analytic),
        ("paper_literal", Method::PaperLiteral),
        ("finite_difference", Method::FiniteDifference),
    ];
    for (idx, row) in file.rows.iter().enumerate() {
        let shape = row.shape.to_shape(mode);
        let routes: Vec<MonitoredRoute> = row.routes.iter().map(|r| r.to_route()).collect();
        for (label, method) in methods {
            let report = sensitivity::total_differential(&shape, &routes, &delta, method)?;
            let _ = writeln!(
                out,
                "{:>4}  {:<18} {:>14.6} {:>14.6} {:>14.6} {:>14.6} {:>16.6}  {}",
                idx,
                label,
                report.wrt_nodes,
                report.wrt_hops,
                report.wrt_lifetime,
                report.wrt_interval,
                report.total_differential,
                if report.at_clamp_boundary { "boundary" } else { "-" }
            );
        }
    }
    Ok(out)
}

pub struct SimOptions {
    pub seed: Option<u64>,
    pub protocol: String,
    pub out: Option<PathBuf>,
    pub trace: bool,
}

fn run_scenario(config: &ScenarioConfig, protocol: &str) -> Result<SimResult> {
    let profile = report::resolve_profile(protocol)?;
    Simulator::run(config.clone(), profile).map_err(CliError::from)
}

fn append_csv_row(path: &Path, row: &str) -> Result<()> {
    let fresh = !path.exists();
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{CSV_SCHEMA}")?;
        writeln!(file, "{CSV_HEADER}")?;
    }
    writeln!(file, "{row}")?;
    Ok(())
}

fn write_trace(path: &Path, result: &SimResult) -> Result<()> {
    let mut text = String::new();
    for record in &result.records {
        text.push_str(&serde_json::to_string(record)?);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Run one scenario and report. Stdout carries the JSON report; with an
/// output directory set, the report, a CSV row and (optionally) the full
/// event trace are written there too.
pub fn cmd_sim(scenario_arg: &str, opts: &SimOptions) -> Result<String> {
    let mut config = scenarios::resolve(scenario_arg)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let result = run_scenario(&config, &opts.protocol)?;
    let report = SimReport::from_result(&config, &opts.protocol, &result);
    let json = serde_json::to_string_pretty(&report)?;

    if let Some(dir) = output_dir(opts.out.clone()) {
        ensure_dir(&dir)?;
        let stem = format!("{}-{}-{}", report.scenario, report.protocol, report.seed);
        fs::write(dir.join(format!("{stem}.json")), format!("{json}\n"))?;
        append_csv_row(&dir.join("runs.csv"), &report.csv_row())?;
        if opts.trace {
            write_trace(&dir.join(format!("{stem}.trace.jsonl")), &result)?;
        }
    }
    Ok(format!("{json}\n"))
}

/// One sweep cell: the rows are ordered by (axis value, protocol, seed) and
/// flushed to disk as they complete, so a failing run leaves the finished
/// rows behind.
pub fn cmd_sweep(sweep_arg: &str, out: Option<PathBuf>) -> Result<String> {
    let spec = scenarios::resolve_sweep(sweep_arg)?;
    let base = spec.base_config()?;

    let mut values = spec.values.clone();
    values.sort_by(|a, b| a.total_cmp(b));
    let mut protocols = spec.protocols.clone();
    protocols.sort();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();

    let dir = output_dir(out);
    let csv_path = dir.as_ref().map(|d| d.join(format!("sweep-{}.csv", base.name)));
    if let Some(dir) = &dir {
        ensure_dir(dir)?;
    }
    if let Some(path) = &csv_path {
        fs::write(path, format!("{CSV_SCHEMA}\nvalue,{CSV_HEADER}\n"))?;
    }

    let mut out_text = format!("{CSV_SCHEMA}\nvalue,{CSV_HEADER}\n");
    // (value, protocol) -> per-seed metric samples for the summary.
    let mut cells: Vec<((f64, String), Vec<SimReport>)> = Vec::new();
    for &value in &values {
        let configured = spec.apply(&base, value)?;
        for protocol in &protocols {
            let mut cell = Vec::new();
            for &seed in &seeds {
                let mut config = configured.clone();
                config.seed = seed;
                let result = run_scenario(&config, protocol)?;
                let report = SimReport::from_result(&config, protocol, &result);
                let row = format!("{},{}", value, report.csv_row());
                if let Some(path) = &csv_path {
                    let mut file = fs::OpenOptions::new().append(true).open(path)?;
                    writeln!(file, "{row}")?;
                }
                let _ = writeln!(out_text, "{row}");
                cell.push(report);
            }
            cells.push(((value, protocol.clone()), cell));
        }
    }

    let _ = writeln!(out_text, "# summary");
    let _ = writeln!(
        out_text,
        "value,protocol,throughput_bps_mean,throughput_bps_std,mean_delay_s_mean,\
mean_delay_s_std,nrl_mean,nrl_std,control_total_mean,control_total_std"
    );
    for ((value, protocol), reports) in &cells {
        let col = |f: &dyn Fn(&SimReport) -> f64| -> (f64, f64) {
            let samples: Vec<f64> = reports.iter().map(|r| f(r)).collect();
            report::mean_std(&samples)
        };
        let (tp_m, tp_s) = col(&|r| r.metrics.throughput_bps);
        let (dl_m, dl_s) = col(&|r| r.metrics.mean_delay_s);
        let (nr_m, nr_s) = col(&|r| r.metrics.nrl);
        let (ct_m, ct_s) = col(&|r| r.metrics.control.total() as f64);
        let _ = writeln!(
            out_text,
            "{value},{protocol},{tp_m},{tp_s},{dl_m},{dl_s},{nr_m},{nr_s},{ct_m},{ct_s}"
        );
    }
    Ok(out_text)
}

pub struct CompareOptions {
    pub seed: Option<u64>,
    pub protocol: String,
    pub allow_mobile: bool,
    pub mode: Option<FormulaMode>,
}

/// Hop distance between two nodes in the scenario's explicit topology, when
/// one is given.
fn topology_hops(config: &ScenarioConfig, src: u32, dst: u32) -> Option<u32> {
    let positions = config.positions.as_ref()?;
    let n = positions.len();
    let range2 = config.radio.range * config.radio.range;
    let mut dist = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[src as usize] = 0;
    queue.push_back(src as usize);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if dist[v] != u32::MAX || v == u {
                continue;
            }
            let dx = positions[u].0 - positions[v].0;
            let dy = positions[u].1 - positions[v].1;
            if dx * dx + dy * dy <= range2 {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (dist[dst as usize] != u32::MAX).then(|| dist[dst as usize])
}

fn delta_line(out: &mut String, label: &str, model: f64, sim: f64) {
    let delta = sim - model;
    let rel = if model != 0.0 { delta / model } else { 0.0 };
    let _ = writeln!(
        out,
        "{label:>6}  {model:>14.6} {sim:>14} {delta:>+14.6} {rel:>+12.4}",
        sim = sim
    );
}

/// Model-predicted control counts next to simulated ones. This is a report,
/// not a test: it always exits 0 once the inputs validate.
pub fn cmd_compare(scenario_arg: &str, params_path: &str, opts: &CompareOptions) -> Result<String> {
    let mut config = scenarios::resolve(scenario_arg)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if config.speed > 0.0 && !opts.allow_mobile {
        return Err(CliError::Validation(format!(
            "scenario '{}' is mobile; the closed-form model assumes a static network \
(pass --allow-mobile to compare anyway)",
            config.name
        )));
    }
    let file = read_params(params_path)?;
    let result = run_scenario(&config, &opts.protocol)?;
    let sim = rro_core::metrics::compute(&result);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} protocol {} seed {}",
        config.name, opts.protocol, config.seed
    );
    for (idx, row) in file.rows.iter().enumerate() {
        let shape: NetworkShape = row.shape.to_shape(opts.mode);
        let routes: Vec<MonitoredRoute> = row.routes.iter().map(|r| r.to_route()).collect();
        let model_rreq = overhead::rreq_overhead(&shape)?;
        let model_rrep = overhead::rrep_overhead(&shape)?;
        let mut model_hello = 0.0;
        for route in &routes {
            model_hello += overhead::hello_overhead_route_discrete(route)?;
        }

        if let Some(flow) = config.flows.first() {
            if let Some(hops) = topology_hops(&config, flow.src, flow.dst) {
                if hops != shape.hops {
                    let _ = writeln!(
                        out,
                        "warning: row {idx} assumes H={} but the topology distance \
{} -> {} is {} hops",
                        shape.hops, flow.src, flow.dst, hops
                    );
                }
            }
        }

        let _ = writeln!(
            out,
            "row {idx}: {:>6}  {:>14} {:>14} {:>14} {:>12}",
            "kind", "model", "simulated", "delta", "rel"
        );
        delta_line(&mut out, "rreq", model_rreq, sim.control.rreq as f64);
        delta_line(&mut out, "rrep", model_rrep, sim.control.rrep as f64);
        delta_line(&mut out, "hello", model_hello, sim.control.hello as f64);
    }
    Ok(out)
}
