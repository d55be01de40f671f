//! Event loop, radio, mobility and failure model.
//!
//! Everything runs on integer-nanosecond time with a (time, insertion-seq)
//! ordered heap, so a (config, seed) pair reproduces the trace byte for byte.
//! The radio is a unit disk: a transmission reaches every live node within
//! range after a fixed latency plus serialization time. Unicasts to an
//! unreachable partner come back as link-layer failure feedback; broadcast
//! receptions are additionally subject to independent Bernoulli loss.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::protocol::packet::{Packet, PacketKind};
use crate::protocol::profile::ProtocolProfile;
use crate::protocol::state::{Action, Ctx, ProtocolState, TimerKind};
use crate::sim::scenario::{Placement, ScenarioConfig};
use crate::sim::time::SimTime;
use crate::sim::NodeId;
use crate::trace::{TraceKind, TraceRecord};

// Independent RNG streams per stochastic concern, so reordering one concern
// never perturbs another.
const STREAM_PLACEMENT: u64 = 0;
const STREAM_MOBILITY: u64 = 1;
const STREAM_LOSS: u64 = 2;

#[derive(Debug, Clone)]
enum Event {
    Deliver {
        to: NodeId,
        packet: Packet,
        overheard: bool,
    },
    /// Link-layer feedback: `node`'s unicast toward `partner` failed.
    LinkFail {
        node: NodeId,
        partner: NodeId,
        packet: Packet,
    },
    Timer {
        node: NodeId,
        kind: TimerKind,
    },
    AppEmit {
        flow: usize,
        seq: u64,
    },
    /// Random-waypoint leg finished.
    WaypointArrive {
        node: NodeId,
    },
    /// Pause over; pick the next waypoint.
    WaypointDraw {
        node: NodeId,
    },
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

struct NodeRecord {
    state: ProtocolState,
    anchor: (f64, f64),
    anchor_time: SimTime,
    waypoint: (f64, f64),
    moving: bool,
    lifetime: Option<SimTime>,
}

impl NodeRecord {
    fn position(&self, speed: f64, now: SimTime) -> (f64, f64) {
        if !self.moving || speed <= 0.0 {
            return self.anchor;
        }
        let dx = self.waypoint.0 - self.anchor.0;
        let dy = self.waypoint.1 - self.anchor.1;
        let dist = libm::sqrt(dx * dx + dy * dy);
        if dist <= 0.0 {
            return self.anchor;
        }
        let travelled = speed * now.saturating_sub(self.anchor_time).as_secs_f64();
        if travelled >= dist {
            return self.waypoint;
        }
        let frac = travelled / dist;
        (self.anchor.0 + dx * frac, self.anchor.1 + dy * frac)
    }
}

/// Finished run: the full event trace plus a couple of cheap aggregates.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub records: Vec<TraceRecord>,
    pub duration: f64,
}

pub struct Simulator {
    config: ScenarioConfig,
    profile: ProtocolProfile,
    nodes: Vec<NodeRecord>,
    heap: BinaryHeap<Reverse<Scheduled>>,
    heap_seq: u64,
    next_packet_id: u64,
    rng_mobility: ChaCha8Rng,
    rng_loss: ChaCha8Rng,
    records: Vec<TraceRecord>,
    end: SimTime,
}

impl Simulator {
    pub fn new(config: ScenarioConfig, profile: ProtocolProfile) -> Result<Simulator> {
        config.validate()?;
        let end = SimTime::from_secs_f64(config.duration);
        let mut rng_placement = ChaCha8Rng::seed_from_u64(config.seed);
        rng_placement.set_stream(STREAM_PLACEMENT);
        let mut rng_mobility = ChaCha8Rng::seed_from_u64(config.seed);
        rng_mobility.set_stream(STREAM_MOBILITY);
        let mut rng_loss = ChaCha8Rng::seed_from_u64(config.seed);
        rng_loss.set_stream(STREAM_LOSS);

        let positions = initial_positions(&config, &mut rng_placement);
        let mut lifetimes: alloc::collections::BTreeMap<NodeId, SimTime> =
            alloc::collections::BTreeMap::new();
        for (node, secs) in &config.node_lifetimes {
            lifetimes.insert(*node, SimTime::from_secs_f64(*secs));
        }

        let nodes: Vec<NodeRecord> = positions
            .into_iter()
            .enumerate()
            .map(|(id, pos)| NodeRecord {
                state: ProtocolState::new(id as NodeId),
                anchor: pos,
                anchor_time: SimTime::ZERO,
                waypoint: pos,
                moving: false,
                lifetime: lifetimes.get(&(id as NodeId)).copied(),
            })
            .collect();

        let mut sim = Simulator {
            config,
            profile,
            nodes,
            heap: BinaryHeap::new(),
            heap_seq: 0,
            next_packet_id: 0,
            rng_mobility,
            rng_loss,
            records: Vec::new(),
            end,
        };
        sim.seed_events();
        Ok(sim)
    }

    pub fn run(config: ScenarioConfig, profile: ProtocolProfile) -> Result<SimResult> {
        let mut sim = Simulator::new(config, profile)?;
        sim.drive();
        Ok(SimResult {
            duration: sim.config.duration,
            records: sim.records,
        })
    }

    fn seed_events(&mut self) {
        if self.config.speed > 0.0 {
            for id in 0..self.config.node_count {
                self.draw_waypoint(id, SimTime::ZERO);
            }
        }
        for idx in 0..self.config.flows.len() {
            let start = SimTime::from_secs_f64(self.config.flows[idx].start);
            self.schedule(start, Event::AppEmit { flow: idx, seq: 0 });
        }
    }

    fn drive(&mut self) {
        while let Some(Reverse(item)) = self.heap.pop() {
            if item.time > self.end {
                break;
            }
            self.dispatch(item.time, item.event);
        }
    }

    fn schedule(&mut self, time: SimTime, event: Event) {
        self.heap_seq += 1;
        self.heap.push(Reverse(Scheduled {
            time,
            seq: self.heap_seq,
            event,
        }));
    }

    fn dispatch(&mut self, now: SimTime, event: Event) {
        match event {
            Event::Deliver {
                to,
                packet,
                overheard,
            } => {
                if !self.alive(to, now) {
                    return;
                }
                self.trace(
                    now,
                    to,
                    if overheard {
                        TraceKind::Overhear
                    } else {
                        TraceKind::Receive
                    },
                    &packet,
                );
                let actions = {
                    let ctx = Ctx {
                        profile: &self.profile,
                        params: &self.config.params,
                        now,
                    };
                    self.nodes[to as usize].state.handle_delivery(ctx, packet, overheard)
                };
                self.execute(to, now, actions);
            }
            Event::LinkFail {
                node,
                partner,
                packet,
            } => {
                if !self.alive(node, now) {
                    return;
                }
                // Beacons are fire-and-forget: a vanished partner is noticed
                // through the missed-HELLO timeout, not per-transmission
                // feedback.
                if packet.kind == PacketKind::Hello {
                    return;
                }
                let actions = {
                    let ctx = Ctx {
                        profile: &self.profile,
                        params: &self.config.params,
                        now,
                    };
                    self.nodes[node as usize]
                        .state
                        .link_break(ctx, partner, Some(packet))
                };
                self.execute(node, now, actions);
            }
            Event::Timer { node, kind } => {
                if !self.alive(node, now) {
                    return;
                }
                let actions = {
                    let ctx = Ctx {
                        profile: &self.profile,
                        params: &self.config.params,
                        now,
                    };
                    self.nodes[node as usize].state.handle_timer(ctx, kind)
                };
                self.execute(node, now, actions);
            }
            Event::AppEmit { flow, seq } => self.app_emit(now, flow, seq),
            Event::WaypointArrive { node } => {
                let pause = SimTime::from_secs_f64(self.config.pause);
                let record = &mut self.nodes[node as usize];
                record.anchor = record.waypoint;
                record.anchor_time = now;
                record.moving = false;
                if pause == SimTime::ZERO {
                    self.draw_waypoint(node, now);
                } else {
                    self.schedule(now + pause, Event::WaypointDraw { node });
                }
            }
            Event::WaypointDraw { node } => self.draw_waypoint(node, now),
        }
    }

    fn draw_waypoint(&mut self, node: NodeId, now: SimTime) {
        let (w, h) = self.config.area;
        let target = (
            self.rng_mobility.gen::<f64>() * w,
            self.rng_mobility.gen::<f64>() * h,
        );
        let record = &mut self.nodes[node as usize];
        record.anchor = record.position(self.config.speed, now);
        record.anchor_time = now;
        record.waypoint = target;
        record.moving = true;
        let dx = target.0 - record.anchor.0;
        let dy = target.1 - record.anchor.1;
        let dist = libm::sqrt(dx * dx + dy * dy);
        let travel = dist / self.config.speed.max(f64::MIN_POSITIVE);
        self.schedule(
            now + SimTime::from_secs_f64(travel),
            Event::WaypointArrive { node },
        );
    }

    fn app_emit(&mut self, now: SimTime, flow_idx: usize, seq: u64) {
        let flow = self.config.flows[flow_idx].clone();
        if let Some(cap) = flow.max_packets {
            if seq >= cap {
                return;
            }
        }
        let end = SimTime::from_secs_f64(flow.end.unwrap_or(self.config.duration));
        if now > end {
            return;
        }

        // Next emission first, so a dead source resumes cleanly after a
        // blackout lifts.
        let next = SimTime::from_secs_f64(flow.start + (seq + 1) as f64 / flow.rate_pps);
        self.schedule(
            next,
            Event::AppEmit {
                flow: flow_idx,
                seq: seq + 1,
            },
        );

        if !self.alive(flow.src, now) {
            return;
        }
        self.next_packet_id += 1;
        let mut packet = Packet::control(PacketKind::Data, flow.src, flow.dst, now);
        packet.payload_bytes = flow.packet_bytes;
        packet.ttl = self.config.params.net_ttl;
        packet.id = self.next_packet_id;
        self.trace(now, flow.src, TraceKind::AppSend, &packet);
        let actions = {
            let ctx = Ctx {
                profile: &self.profile,
                params: &self.config.params,
                now,
            };
            self.nodes[flow.src as usize].state.app_send(ctx, packet)
        };
        self.execute(flow.src, now, actions);
    }

    fn execute(&mut self, node: NodeId, now: SimTime, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Broadcast(mut packet) => {
                    self.assign_id(&mut packet);
                    self.trace(now, node, TraceKind::Transmit, &packet);
                    let arrival = now + self.airtime(&packet);
                    for to in self.receivers(node, now) {
                        if self.config.radio.loss_probability > 0.0
                            && self.rng_loss.gen::<f64>() < self.config.radio.loss_probability
                        {
                            continue;
                        }
                        self.schedule(
                            arrival,
                            Event::Deliver {
                                to,
                                packet: packet.clone(),
                                overheard: false,
                            },
                        );
                    }
                }
                Action::Unicast {
                    mut packet,
                    next_hop,
                } => {
                    self.assign_id(&mut packet);
                    self.trace(now, node, TraceKind::Transmit, &packet);
                    let arrival = now + self.airtime(&packet);
                    let reachable =
                        self.alive(next_hop, now) && self.in_range(node, next_hop, now);
                    // Unicasts model a link layer with ARQ: random loss is
                    // absorbed by retransmission, only a dead or out-of-range
                    // partner fails, and that failure is reported back.
                    if reachable {
                        if self.profile.promiscuous {
                            for to in self.receivers(node, now) {
                                if to != next_hop {
                                    self.schedule(
                                        arrival,
                                        Event::Deliver {
                                            to,
                                            packet: packet.clone(),
                                            overheard: true,
                                        },
                                    );
                                }
                            }
                        }
                        self.schedule(
                            arrival,
                            Event::Deliver {
                                to: next_hop,
                                packet,
                                overheard: false,
                            },
                        );
                    } else {
                        self.schedule(
                            arrival,
                            Event::LinkFail {
                                node,
                                partner: next_hop,
                                packet,
                            },
                        );
                    }
                }
                Action::SetTimer { timer, delay } => {
                    self.schedule(now + delay, Event::Timer { node, kind: timer });
                }
                Action::DeliverUp(packet) => {
                    self.trace_delivery(now, node, &packet);
                }
                Action::Drop { packet, reason: _ } => {
                    self.trace(now, node, TraceKind::Drop, &packet);
                }
            }
        }
    }

    fn assign_id(&mut self, packet: &mut Packet) {
        if packet.id == 0 {
            self.next_packet_id += 1;
            packet.id = self.next_packet_id;
        }
    }

    /// Serialization plus propagation time for one hop.
    fn airtime(&self, packet: &Packet) -> SimTime {
        let serialization = packet.total_bytes() as f64 * 8.0 / self.config.bandwidth_bps;
        SimTime::from_secs_f64(serialization + self.config.radio.per_hop_latency)
    }

    /// Live nodes inside radio range of `node`, in id order.
    fn receivers(&self, node: NodeId, now: SimTime) -> Vec<NodeId> {
        let mut out = Vec::new();
        for other in 0..self.config.node_count {
            if other != node && self.alive(other, now) && self.in_range(node, other, now) {
                out.push(other);
            }
        }
        out
    }

    fn in_range(&self, a: NodeId, b: NodeId, now: SimTime) -> bool {
        let pa = self.nodes[a as usize].position(self.config.speed, now);
        let pb = self.nodes[b as usize].position(self.config.speed, now);
        let dx = pa.0 - pb.0;
        let dy = pa.1 - pb.1;
        dx * dx + dy * dy <= self.config.radio.range * self.config.radio.range
    }

    fn alive(&self, node: NodeId, now: SimTime) -> bool {
        let record = &self.nodes[node as usize];
        if let Some(lifetime) = record.lifetime {
            if now > lifetime {
                return false;
            }
        }
        if self.config.blackouts.is_empty() {
            return true;
        }
        let secs = now.as_secs_f64();
        let pos = record.position(self.config.speed, now);
        !self
            .config
            .blackouts
            .iter()
            .any(|b| secs >= b.start && secs <= b.end && b.contains(pos))
    }

    fn trace(&mut self, time: SimTime, node: NodeId, kind: TraceKind, packet: &Packet) {
        self.records.push(TraceRecord {
            time,
            node,
            kind,
            packet_kind: packet.kind,
            src: packet.origin,
            dst: packet.destination,
            ttl: packet.ttl,
            packet_id: packet.id,
            grat: packet.grat,
            path: Vec::new(),
        });
    }

    fn trace_delivery(&mut self, time: SimTime, node: NodeId, packet: &Packet) {
        self.records.push(TraceRecord {
            time,
            node,
            kind: TraceKind::AppDeliver,
            packet_kind: packet.kind,
            src: packet.origin,
            dst: packet.destination,
            ttl: packet.ttl,
            packet_id: packet.id,
            grat: packet.grat,
            path: packet.traversed.clone(),
        });
    }
}

fn initial_positions(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = config.node_count as usize;
    match config.placement {
        Placement::Explicit => config
            .positions
            .clone()
            .expect("validated explicit positions"),
        Placement::Grid => {
            let cols = {
                let mut c = 1usize;
                while c * c < n {
                    c += 1;
                }
                c
            };
            let rows = (n + cols - 1) / cols;
            let dx = config.area.0 / cols.max(2) as f64;
            let dy = config.area.1 / rows.max(2) as f64;
            (0..n)
                .map(|i| {
                    let col = i % cols;
                    let row = i / cols;
                    (dx * (col as f64 + 0.5), dy * (row as f64 + 0.5))
                })
                .collect()
        }
        Placement::UniformRandom => (0..n)
            .map(|_| {
                (
                    rng.gen::<f64>() * config.area.0,
                    rng.gen::<f64>() * config.area.1,
                )
            })
            .collect(),
    }
}
