//! Performance metrics computed purely from a run's event trace.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::protocol::packet::PacketKind;
use crate::sim::engine::SimResult;
use crate::sim::time::SimTime;
use crate::trace::{TraceKind, TraceRecord};

/// Control transmissions by packet type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlCounts {
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub hello: u64,
    pub ack: u64,
}

impl ControlCounts {
    pub fn total(&self) -> u64 {
        self.rreq + self.rrep + self.rerr + self.hello + self.ack
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub data_tx: u64,
    pub control: ControlCounts,
    /// Delivered payload bits per second of simulated time.
    pub throughput_bps: f64,
    pub throughput_pps: f64,
    pub delivery_ratio: f64,
    /// Mean one-way application delay, seconds.
    pub mean_delay_s: f64,
    /// Round-trip estimate: twice the mean one-way delay.
    pub round_trip_delay_s: f64,
    /// Normalized routing load: control transmissions per delivered packet.
    pub nrl: f64,
    /// Absolute routing load: every transmission that was not an
    /// application-level send (control traffic plus data forwarding hops).
    pub routing_load: u64,
}

pub fn compute(result: &SimResult) -> RunReport {
    compute_records(&result.records, result.duration)
}

pub fn compute_records(records: &[TraceRecord], duration: f64) -> RunReport {
    let mut sent_at: BTreeMap<u64, SimTime> = BTreeMap::new();
    let mut control = ControlCounts::default();
    let mut data_tx = 0u64;
    let mut data_sent = 0u64;
    let mut data_dropped = 0u64;
    let mut delays: Vec<f64> = Vec::new();

    for record in records {
        match record.kind {
            TraceKind::Transmit => match record.packet_kind {
                PacketKind::Rreq => control.rreq += 1,
                PacketKind::Rrep => control.rrep += 1,
                PacketKind::Rerr => control.rerr += 1,
                PacketKind::Hello => control.hello += 1,
                PacketKind::Ack => control.ack += 1,
                PacketKind::Data => data_tx += 1,
            },
            TraceKind::AppSend => {
                data_sent += 1;
                sent_at.insert(record.packet_id, record.time);
            }
            TraceKind::AppDeliver => {
                if let Some(start) = sent_at.get(&record.packet_id) {
                    delays.push(record.time.saturating_sub(*start).as_secs_f64());
                }
            }
            TraceKind::Drop => {
                if record.packet_kind == PacketKind::Data {
                    data_dropped += 1;
                }
            }
            TraceKind::Receive | TraceKind::Overhear => {}
        }
    }

    // The trace does not carry byte counts; callers that need throughput in
    // bits per second supply the payload size via `compute_with_payload`.
    let data_delivered = delays.len() as u64;

    finish(
        duration,
        data_sent,
        data_delivered,
        data_dropped,
        data_tx,
        control,
        &delays,
        None,
    )
}

/// Like [`compute`], with a uniform payload size (bytes) so throughput can be
/// reported in bits per second.
pub fn compute_with_payload(result: &SimResult, payload_bytes: u32) -> RunReport {
    let mut report = compute(result);
    if result.duration > 0.0 {
        report.throughput_bps =
            report.data_delivered as f64 * payload_bytes as f64 * 8.0 / result.duration;
    }
    report
}

#[allow(clippy::too_many_arguments)]
fn finish(
    duration: f64,
    data_sent: u64,
    data_delivered: u64,
    data_dropped: u64,
    data_tx: u64,
    control: ControlCounts,
    delays: &[f64],
    payload_bytes: Option<u32>,
) -> RunReport {
    let mean_delay_s = if delays.is_empty() {
        0.0
    } else {
        delays.iter().sum::<f64>() / delays.len() as f64
    };
    let throughput_pps = if duration > 0.0 {
        data_delivered as f64 / duration
    } else {
        0.0
    };
    let throughput_bps = match payload_bytes {
        Some(bytes) if duration > 0.0 => data_delivered as f64 * bytes as f64 * 8.0 / duration,
        _ => 0.0,
    };
    let nrl = if data_delivered > 0 {
        control.total() as f64 / data_delivered as f64
    } else {
        control.total() as f64
    };
    RunReport {
        data_sent,
        data_delivered,
        data_dropped,
        data_tx,
        control,
        throughput_bps,
        throughput_pps,
        delivery_ratio: if data_sent > 0 {
            data_delivered as f64 / data_sent as f64
        } else {
            0.0
        },
        mean_delay_s,
        round_trip_delay_s: 2.0 * mean_delay_s,
        nrl,
        routing_load: control.total() + data_tx.saturating_sub(data_sent),
    }
}
