//! Per-node routing engine state and event handlers.
//!
//! Handlers never touch the radio or the clock directly; they consume a
//! delivered packet / expired timer and return [`Action`]s for the simulator
//! to execute. That keeps every protocol path unit-testable without an event
//! loop.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::protocol::packet::{Packet, PacketKind};
use crate::protocol::profile::ProtocolProfile;
use crate::sim::scenario::ProtocolParams;
use crate::sim::time::SimTime;
use crate::sim::NodeId;

/// Something the engine asks the simulator to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Broadcast(Packet),
    Unicast { packet: Packet, next_hop: NodeId },
    SetTimer { timer: TimerKind, delay: SimTime },
    /// Hand a DATA packet to the local application.
    DeliverUp(Packet),
    Drop { packet: Packet, reason: DropReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TimerKind {
    /// Discovery attempt for `dest` timed out; `token` guards staleness.
    RreqRetry { dest: NodeId, token: u32 },
    /// Periodic HELLO toward one monitored neighbor.
    Hello { partner: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    BufferOverflow,
    DiscoveryFailed,
    NoRoute,
    BrokenLink,
    LoopSuppressed,
    Malformed,
    Expired,
}

/// Read-only evaluation context for one handler call.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub profile: &'a ProtocolProfile,
    pub params: &'a ProtocolParams,
    pub now: SimTime,
}

impl<'a> Ctx<'a> {
    fn route_life(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.route_life_time)
    }

    fn hello_interval(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.hello_interval)
    }
}

/// How a route was learned; DYMO refuses to originate traffic over routes it
/// only saw while relaying for someone else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Learned {
    OwnDiscovery,
    Relay,
    Overheard,
}

/// Next-hop entry of the table-driven store.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub expiry: SimTime,
    pub dest_seq: u32,
    pub valid: bool,
    pub learned: Learned,
    /// Full path for source-routing profiles that keep a single route.
    pub full_route: Option<Vec<NodeId>>,
    /// Flow origins observed using this entry; RERR targets on breakage.
    pub precursors: BTreeSet<NodeId>,
}

impl RouteEntry {
    fn usable(&self, now: SimTime) -> bool {
        self.valid && self.expiry >= now
    }
}

/// One cached source route (DSR). `path` runs from this node to the
/// destination inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedRoute {
    pub path: Vec<NodeId>,
    pub expiry: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErsState {
    pub ttl_current: u32,
    pub retries_used: u32,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum DiscoveryKind {
    Normal,
    /// Bounded-TTL local repair; on failure the listed origins get RERRs.
    Repair { origins: BTreeSet<NodeId> },
}

#[derive(Debug, Clone, PartialEq)]
struct Discovery {
    ers: ErsState,
    buffered: VecDeque<Packet>,
    token: u32,
    kind: DiscoveryKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub expiry: SimTime,
    pub last_heard: SimTime,
    pub started: SimTime,
}

#[derive(Debug, Clone)]
pub struct ProtocolState {
    pub id: NodeId,
    seq: u32,
    next_rreq_id: u32,
    next_token: u32,
    pub table: BTreeMap<NodeId, RouteEntry>,
    pub cache: BTreeMap<NodeId, Vec<CachedRoute>>,
    rreq_seen: BTreeMap<(NodeId, u32), SimTime>,
    pending: BTreeMap<NodeId, Discovery>,
    pub monitors: BTreeMap<NodeId, Monitor>,
    /// Destinations this node has originated traffic toward.
    pub active_dests: BTreeSet<NodeId>,
}

impl ProtocolState {
    pub fn new(id: NodeId) -> ProtocolState {
        ProtocolState {
            id,
            seq: 0,
            next_rreq_id: 0,
            next_token: 0,
            table: BTreeMap::new(),
            cache: BTreeMap::new(),
            rreq_seen: BTreeMap::new(),
            pending: BTreeMap::new(),
            monitors: BTreeMap::new(),
            active_dests: BTreeSet::new(),
        }
    }

    pub fn has_pending_discovery(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    // ------------------------------------------------------------------
    // Entry points
    // ------------------------------------------------------------------

    /// Application handed us a fresh DATA packet.
    pub fn app_send(&mut self, ctx: Ctx<'_>, packet: Packet) -> Vec<Action> {
        debug_assert_eq!(packet.kind, PacketKind::Data);
        self.active_dests.insert(packet.destination);
        self.forward_data(ctx, packet)
    }

    /// A packet arrived over the radio.
    pub fn handle_delivery(&mut self, ctx: Ctx<'_>, packet: Packet, overheard: bool) -> Vec<Action> {
        if overheard {
            if ctx.profile.promiscuous {
                self.learn_overheard(ctx, &packet);
            }
            return Vec::new();
        }
        match packet.kind {
            PacketKind::Rreq => self.handle_rreq(ctx, packet),
            PacketKind::Rrep => self.handle_rrep(ctx, packet),
            PacketKind::Rerr => self.handle_rerr(ctx, packet),
            PacketKind::Hello => {
                let sender = packet.previous_hop;
                let mut actions = Vec::new();
                match self.monitors.get_mut(&sender) {
                    Some(monitor) => monitor.last_heard = ctx.now,
                    // Monitor back, so the sender keeps hearing us alive. The
                    // reciprocal monitor gets a fresh lifetime but receipt of
                    // further HELLOs never extends it, so idle links go quiet.
                    None if ctx.profile.hello_monitoring => {
                        self.add_monitor(ctx, sender, &mut actions);
                    }
                    None => {}
                }
                actions
            }
            PacketKind::Ack => Vec::new(),
            PacketKind::Data => self.handle_data(ctx, packet),
        }
    }

    pub fn handle_timer(&mut self, ctx: Ctx<'_>, timer: TimerKind) -> Vec<Action> {
        match timer {
            TimerKind::RreqRetry { dest, token } => self.on_rreq_retry(ctx, dest, token),
            TimerKind::Hello { partner } => self.on_hello_tick(ctx, partner),
        }
    }

    /// Link-layer feedback: a unicast toward `partner` could not be
    /// delivered. `in_flight` is the packet that failed, if any.
    pub fn link_break(&mut self, ctx: Ctx<'_>, partner: NodeId, in_flight: Option<Packet>) -> Vec<Action> {
        let mut actions = Vec::new();
        self.monitors.remove(&partner);
        self.purge_cached_link(self.id, partner);

        // Invalidate table routes through the broken link, remembering who
        // has to be told.
        let mut affected: Vec<(NodeId, BTreeSet<NodeId>)> = Vec::new();
        for (dest, entry) in self.table.iter_mut() {
            if entry.valid && entry.next_hop == partner {
                entry.valid = false;
                affected.push((*dest, entry.precursors.clone()));
            }
        }

        let mut repaired: Option<NodeId> = None;
        let mut notified: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        if let Some(mut pkt) = in_flight {
            if pkt.kind == PacketKind::Data {
                let dest = pkt.destination;
                if pkt.origin == self.id {
                    // Re-enter route discovery (or an alternate cached route).
                    pkt.source_route = None;
                    pkt.previous_hop = self.id;
                    // traversed keeps its other entries; strip self so the
                    // re-send does not trip loop suppression.
                    pkt.traversed.retain(|&n| n != self.id);
                    actions.extend(self.forward_data(ctx, pkt));
                } else if ctx.profile.local_repair {
                    let mut origins: BTreeSet<NodeId> = affected
                        .iter()
                        .filter(|(d, _)| *d == dest)
                        .flat_map(|(_, o)| o.iter().copied())
                        .collect();
                    origins.insert(pkt.origin);
                    origins.remove(&self.id);
                    actions.extend(self.start_repair(ctx, dest, origins, Some(pkt)));
                    repaired = Some(dest);
                } else {
                    let origin = pkt.origin;
                    // Salvage: a relay holding a cached route re-sources the
                    // packet from here. The origin is still told about the
                    // break. Routes revisiting already-traversed nodes would
                    // only die to loop suppression downstream, so they are
                    // not eligible.
                    let salvage = if ctx.profile.reuse_cached_routes {
                        self.best_cached_route(dest, ctx.now)
                            .filter(|path| path[1..].iter().all(|n| !pkt.traversed.contains(n)))
                    } else {
                        None
                    };
                    notified.insert((dest, origin));
                    let back = reverse_prefix(&pkt.traversed, self.id);
                    actions.extend(self.emit_rerr(ctx, dest, origin, (self.id, partner), back));
                    match salvage {
                        Some(path) => {
                            pkt.source_route = Some(path);
                            pkt.previous_hop = self.id;
                            actions.extend(self.forward_data(ctx, pkt));
                        }
                        None => actions.push(Action::Drop {
                            packet: pkt,
                            reason: DropReason::BrokenLink,
                        }),
                    }
                }
            }
        }

        // Notify remaining precursors of every invalidated route. A repair in
        // progress defers its RERRs until the repair itself gives up.
        for (dest, origins) in affected {
            if repaired == Some(dest) {
                continue;
            }
            // A break noticed without a data packet in hand (missed HELLOs,
            // failed control unicast) still gets a repair attempt when the
            // route is in active use; RERRs wait for the repair to give up.
            if ctx.profile.local_repair && !origins.is_empty() && !self.pending.contains_key(&dest)
            {
                let mut others = origins.clone();
                others.remove(&self.id);
                actions.extend(self.start_repair(ctx, dest, others, None));
                continue;
            }
            for origin in origins {
                if origin == self.id {
                    if self.active_dests.contains(&dest)
                        && self.route_for_data(dest, ctx).is_none()
                        && self.table_next_hop(dest, ctx.now).is_none()
                    {
                        actions.extend(self.start_discovery(ctx, dest, None));
                    }
                } else if notified.insert((dest, origin)) {
                    actions.extend(self.emit_rerr(ctx, dest, origin, (self.id, partner), None));
                }
            }
        }
        actions
    }

    // ------------------------------------------------------------------
    // DATA path
    // ------------------------------------------------------------------

    fn handle_data(&mut self, ctx: Ctx<'_>, packet: Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        if ctx.profile.ack_monitoring && packet.previous_hop != self.id {
            let mut ack = Packet::control(PacketKind::Ack, self.id, packet.previous_hop, ctx.now);
            ack.previous_hop = self.id;
            actions.push(Action::Unicast {
                next_hop: packet.previous_hop,
                packet: ack,
            });
        }
        // Refresh the reverse direction of the monitored link.
        let sender = packet.previous_hop;
        if let Some(monitor) = self.monitors.get_mut(&sender) {
            monitor.expiry = ctx.now + ctx.route_life();
        }
        if packet.traversed.contains(&self.id) {
            actions.push(Action::Drop {
                packet,
                reason: DropReason::LoopSuppressed,
            });
            return actions;
        }
        actions.extend(self.forward_data(ctx, packet));
        actions
    }

    /// Forward a DATA packet we own (origin enqueue, relay, or flush).
    fn forward_data(&mut self, ctx: Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        if !packet.traversed.contains(&self.id) {
            packet.traversed.push(self.id);
        }
        if packet.destination == self.id {
            actions.push(Action::DeliverUp(packet));
            return actions;
        }
        let dest = packet.destination;

        // Source-routed forwarding along the embedded path.
        if ctx.profile.source_routing {
            if packet.source_route.is_none() && packet.origin == self.id {
                if let Some(path) = self.route_for_data(dest, ctx) {
                    packet.source_route = Some(path);
                }
            }
            if let Some(route) = packet.source_route.clone() {
                match next_in_route(&route, self.id) {
                    Some(next) => {
                        self.refresh_forwarding_state(ctx, dest, next, packet.origin);
                        packet.previous_hop = self.id;
                        actions.push(Action::Unicast {
                            packet,
                            next_hop: next,
                        });
                        return actions;
                    }
                    None => {
                        actions.push(Action::Drop {
                            packet,
                            reason: DropReason::Malformed,
                        });
                        return actions;
                    }
                }
            }
        } else if let Some(next) = self.table_next_hop(dest, ctx.now) {
            self.refresh_forwarding_state(ctx, dest, next, packet.origin);
            packet.previous_hop = self.id;
            actions.push(Action::Unicast {
                packet,
                next_hop: next,
            });
            return actions;
        }

        // No route.
        if packet.origin == self.id {
            actions.extend(self.start_discovery(ctx, dest, Some(packet)));
        } else {
            let origin = packet.origin;
            let back = reverse_prefix(&packet.traversed, self.id);
            actions.push(Action::Drop {
                packet,
                reason: DropReason::NoRoute,
            });
            actions.extend(self.emit_rerr(ctx, dest, origin, (self.id, self.id), back));
        }
        actions
    }

    /// Route available for data this node originates or relays, as a full
    /// path (source routing) or a one-element path stub (unused).
    fn route_for_data(&mut self, dest: NodeId, ctx: Ctx<'_>) -> Option<Vec<NodeId>> {
        if ctx.profile.reuse_cached_routes || ctx.profile.route_cache_multi {
            if let Some(path) = self.best_cached_route(dest, ctx.now) {
                return Some(path);
            }
        }
        // Single-route source-routing store (DYMO style): only routes this
        // node discovered itself are eligible.
        if ctx.profile.source_routing {
            let entry = self.table.get(&dest)?;
            if entry.usable(ctx.now) && entry.learned == Learned::OwnDiscovery {
                return entry.full_route.clone();
            }
            return None;
        }
        None
    }

    fn table_next_hop(&self, dest: NodeId, now: SimTime) -> Option<NodeId> {
        let entry = self.table.get(&dest)?;
        if entry.usable(now) {
            Some(entry.next_hop)
        } else {
            None
        }
    }

    fn refresh_forwarding_state(&mut self, ctx: Ctx<'_>, dest: NodeId, next: NodeId, origin: NodeId) {
        let life = ctx.now + ctx.route_life();
        if let Some(entry) = self.table.get_mut(&dest) {
            if entry.valid {
                entry.expiry = entry.expiry.max(life);
                entry.precursors.insert(origin);
            }
        }
        if let Some(monitor) = self.monitors.get_mut(&next) {
            monitor.expiry = life;
        }
    }

    // ------------------------------------------------------------------
    // Discovery: ERS + BEB
    // ------------------------------------------------------------------

    fn start_discovery(&mut self, ctx: Ctx<'_>, dest: NodeId, data: Option<Packet>) -> Vec<Action> {
        let mut actions = Vec::new();
        if dest == self.id {
            if let Some(pkt) = data {
                actions.push(Action::DeliverUp(pkt));
            }
            return actions;
        }
        if self.pending.contains_key(&dest) {
            if let Some(pkt) = data {
                actions.extend(self.buffer_packet(dest, pkt, ctx));
            }
            return actions;
        }
        let token = self.bump_token();
        let mut buffered = VecDeque::new();
        if let Some(pkt) = data {
            buffered.push_back(pkt);
        }
        let ers = ErsState {
            ttl_current: ctx.params.ttl_start.min(ctx.params.net_ttl),
            retries_used: 0,
            attempts: 0,
        };
        self.pending.insert(
            dest,
            Discovery {
                ers,
                buffered,
                token,
                kind: DiscoveryKind::Normal,
            },
        );
        self.emit_attempt(ctx, dest, &mut actions);
        actions
    }

    fn start_repair(
        &mut self,
        ctx: Ctx<'_>,
        dest: NodeId,
        origins: BTreeSet<NodeId>,
        data: Option<Packet>,
    ) -> Vec<Action> {
        let mut actions = Vec::new();
        if let Some(existing) = self.pending.get_mut(&dest) {
            if let Some(pkt) = data {
                existing.buffered.push_back(pkt);
            }
            return actions;
        }
        let token = self.bump_token();
        let mut buffered = VecDeque::new();
        if let Some(pkt) = data {
            buffered.push_back(pkt);
        }
        self.pending.insert(
            dest,
            Discovery {
                ers: ErsState {
                    ttl_current: ctx.params.local_repair_ttl.max(1),
                    retries_used: 0,
                    attempts: 0,
                },
                buffered,
                token,
                kind: DiscoveryKind::Repair { origins },
            },
        );
        self.emit_attempt(ctx, dest, &mut actions);
        actions
    }

    fn buffer_packet(&mut self, dest: NodeId, pkt: Packet, ctx: Ctx<'_>) -> Vec<Action> {
        let capacity = ctx.params.buffer_capacity.max(1);
        let mut actions = Vec::new();
        if let Some(discovery) = self.pending.get_mut(&dest) {
            discovery.buffered.push_back(pkt);
            if discovery.buffered.len() > capacity {
                if let Some(oldest) = discovery.buffered.pop_front() {
                    actions.push(Action::Drop {
                        packet: oldest,
                        reason: DropReason::BufferOverflow,
                    });
                }
            }
        }
        actions
    }

    fn emit_attempt(&mut self, ctx: Ctx<'_>, dest: NodeId, actions: &mut Vec<Action>) {
        let id = self.id;
        let seq = self.bump_seq();
        let rreq_id = self.bump_rreq_id();
        let known_dest_seq = self.table.get(&dest).map(|e| e.dest_seq).unwrap_or(0);
        let discovery = self.pending.get_mut(&dest).expect("pending discovery");
        discovery.ers.attempts += 1;
        let attempts = discovery.ers.attempts;
        let token = discovery.token;

        let mut rreq = Packet::control(PacketKind::Rreq, id, dest, ctx.now);
        rreq.rreq_id = rreq_id;
        rreq.origin_seq = seq;
        rreq.dest_seq = known_dest_seq;
        rreq.ttl = discovery.ers.ttl_current;
        rreq.previous_hop = id;
        if ctx.profile.source_routing {
            rreq.source_route = Some(vec![id]);
        }
        actions.push(Action::Broadcast(rreq));

        let wait = ctx.params.net_traversal_time
            * libm::pow(ctx.params.beb_multiplier, (attempts - 1) as f64);
        actions.push(Action::SetTimer {
            timer: TimerKind::RreqRetry { dest, token },
            delay: SimTime::from_secs_f64(wait),
        });
    }

    fn on_rreq_retry(&mut self, ctx: Ctx<'_>, dest: NodeId, token: u32) -> Vec<Action> {
        let mut actions = Vec::new();
        let Some(discovery) = self.pending.get_mut(&dest) else {
            return actions;
        };
        if discovery.token != token {
            return actions;
        }
        let params = ctx.params;
        let give_up = match &discovery.kind {
            DiscoveryKind::Repair { .. } => true,
            DiscoveryKind::Normal => {
                let ers = &mut discovery.ers;
                if !ctx.profile.expanding_ring && ers.ttl_current < params.net_ttl {
                    // Two-stage search: one cheap local ring, then flood.
                    ers.ttl_current = params.net_ttl;
                    false
                } else if ers.ttl_current < params.ttl_threshold.min(params.net_ttl) {
                    ers.ttl_current = (ers.ttl_current + params.ttl_increment)
                        .min(params.ttl_threshold)
                        .min(params.net_ttl);
                    false
                } else if ers.ttl_current < params.net_ttl {
                    ers.ttl_current = params.net_ttl;
                    false
                } else if ers.retries_used < params.rreq_retries {
                    ers.retries_used += 1;
                    false
                } else {
                    true
                }
            }
        };
        if give_up {
            let discovery = self.pending.remove(&dest).expect("pending discovery");
            for pkt in discovery.buffered {
                actions.push(Action::Drop {
                    packet: pkt,
                    reason: DropReason::DiscoveryFailed,
                });
            }
            if let DiscoveryKind::Repair { origins } = discovery.kind {
                for origin in origins {
                    actions.extend(self.emit_rerr(ctx, dest, origin, (self.id, self.id), None));
                }
            }
            return actions;
        }
        self.emit_attempt(ctx, dest, &mut actions);
        actions
    }

    // ------------------------------------------------------------------
    // RREQ
    // ------------------------------------------------------------------

    fn handle_rreq(&mut self, ctx: Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        if packet.origin == self.id {
            return actions;
        }
        let key = (packet.origin, packet.rreq_id);
        let window = SimTime::from_secs_f64(ctx.params.dup_cache_window);
        let duplicate = self
            .rreq_seen
            .get(&key)
            .map(|seen| ctx.now.saturating_sub(*seen) <= window)
            .unwrap_or(false);
        self.rreq_seen.insert(key, ctx.now);
        self.gc_rreq_seen(ctx.now, window);

        let is_destination = packet.destination == self.id;
        if duplicate {
            // The destination of a multi-route profile answers every
            // distinct arrival path; everyone else discards repeats.
            if is_destination && ctx.profile.route_cache_multi {
                actions.extend(self.generate_rrep(ctx, &packet));
            }
            return actions;
        }

        // Reverse route toward the requester.
        self.install_reverse_route(ctx, &packet);

        if is_destination {
            actions.extend(self.generate_rrep(ctx, &packet));
            return actions;
        }

        if ctx.profile.grat_rrep {
            if let Some(rrep) = self.gratuitous_rrep(ctx, &packet) {
                actions.push(rrep);
                return actions;
            }
        }

        if packet.ttl <= 1 {
            return actions; // hop budget exhausted, no rebroadcast
        }
        packet.ttl -= 1;
        packet.hop_count += 1;
        packet.previous_hop = self.id;
        if ctx.profile.source_routing {
            if let Some(route) = packet.source_route.as_mut() {
                route.push(self.id);
            }
        }
        actions.push(Action::Broadcast(packet));
        actions
    }

    fn install_reverse_route(&mut self, ctx: Ctx<'_>, packet: &Packet) {
        let life = ctx.now + ctx.route_life();
        if ctx.profile.reuse_cached_routes || ctx.profile.route_cache_multi {
            if let Some(route) = packet.source_route.as_ref() {
                // Path back to the origin: self, then the accumulated route
                // reversed.
                let mut path = vec![self.id];
                path.extend(route.iter().rev().copied());
                self.cache_route(ctx, path, life);
            }
        }
        self.upsert_table_entry(
            packet.origin,
            RouteEntry {
                next_hop: packet.previous_hop,
                hop_count: packet.hop_count + 1,
                expiry: life,
                dest_seq: packet.origin_seq,
                valid: true,
                learned: Learned::Relay,
                full_route: None,
                precursors: BTreeSet::new(),
            },
        );
    }

    fn generate_rrep(&mut self, ctx: Ctx<'_>, rreq: &Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        let seq = self.bump_seq();
        let mut rrep = Packet::control(PacketKind::Rrep, rreq.origin, self.id, ctx.now);
        rrep.dest_seq = seq;
        rrep.origin_seq = rreq.origin_seq;
        rrep.ttl = ctx.params.net_ttl;
        rrep.hop_count = 0;
        rrep.previous_hop = self.id;
        if ctx.profile.source_routing {
            let mut route = rreq.source_route.clone().unwrap_or_else(|| vec![rreq.origin]);
            route.push(self.id);
            rrep.source_route = Some(route);
        }
        let next = rreq.previous_hop;
        if ctx.profile.hello_monitoring {
            self.add_monitor(ctx, next, &mut actions);
        }
        actions.push(Action::Unicast {
            packet: rrep,
            next_hop: next,
        });
        actions
    }

    /// RREP on behalf of the destination when we hold a fresh-enough route.
    fn gratuitous_rrep(&mut self, ctx: Ctx<'_>, rreq: &Packet) -> Option<Action> {
        let dest = rreq.destination;
        if ctx.profile.route_cache_multi || ctx.profile.reuse_cached_routes {
            let tail = self.best_cached_route(dest, ctx.now)?;
            // Only vouch for recently confirmed routes. Answering from an
            // aging cache entry hands the requester a whole buffered burst's
            // worth of losses when the route turns out to be gone.
            let age_budget = SimTime::from_secs_f64(ctx.params.route_life_time * 0.2);
            let freshest = self
                .cache
                .get(&dest)
                .and_then(|rs| rs.iter().map(|r| r.expiry).max())?;
            if freshest.saturating_sub(ctx.now) + age_budget < ctx.route_life() {
                return None;
            }
            let mut route = rreq.source_route.clone().unwrap_or_else(|| vec![rreq.origin]);
            // tail starts at self; self closes the request path.
            route.extend(tail.iter().copied());
            if !is_simple_path(&route) {
                return None;
            }
            let mut rrep = Packet::control(PacketKind::Rrep, rreq.origin, dest, ctx.now);
            rrep.dest_seq = self.table.get(&dest).map(|e| e.dest_seq).unwrap_or(0);
            rrep.origin_seq = rreq.origin_seq;
            rrep.ttl = ctx.params.net_ttl;
            rrep.hop_count = (tail.len().saturating_sub(1)) as u32;
            rrep.previous_hop = self.id;
            rrep.source_route = Some(route);
            rrep.grat = true;
            return Some(Action::Unicast {
                packet: rrep,
                next_hop: rreq.previous_hop,
            });
        }
        let entry = self.table.get(&dest)?;
        if !entry.usable(ctx.now) || entry.dest_seq < rreq.dest_seq {
            return None;
        }
        // Never reflect a route that runs back through the requester's side:
        // that would answer a repair with the very path under repair.
        if entry.next_hop == rreq.previous_hop || entry.next_hop == rreq.origin {
            return None;
        }
        let mut rrep = Packet::control(PacketKind::Rrep, rreq.origin, dest, ctx.now);
        rrep.dest_seq = entry.dest_seq;
        rrep.origin_seq = rreq.origin_seq;
        rrep.ttl = ctx.params.net_ttl;
        rrep.hop_count = entry.hop_count;
        rrep.previous_hop = self.id;
        rrep.grat = true;
        Some(Action::Unicast {
            packet: rrep,
            next_hop: rreq.previous_hop,
        })
    }

    // ------------------------------------------------------------------
    // RREP
    // ------------------------------------------------------------------

    fn handle_rrep(&mut self, ctx: Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        let flow_dest = packet.destination;
        // A reply vouched for hop by hop (the destination answered) earns the
        // full lifetime; a cache-sourced gratuitous reply is secondhand
        // information and decays quickly, so the authoritative reply from the
        // same discovery outlives and outranks it.
        let life = if packet.grat {
            ctx.now + SimTime::from_secs_f64(ctx.params.route_life_time * 0.25)
        } else {
            ctx.now + ctx.route_life()
        };

        if ctx.profile.source_routing && packet.source_route.is_none() {
            actions.push(Action::Drop {
                packet,
                reason: DropReason::Malformed,
            });
            return actions;
        }

        // Learn the forward route.
        if ctx.profile.reuse_cached_routes || ctx.profile.route_cache_multi {
            if let Some(route) = packet.source_route.as_ref() {
                if let Some(suffix) = suffix_from(route, self.id) {
                    self.cache_route(ctx, suffix, life);
                }
            }
        }
        let learned = if packet.origin == self.id {
            Learned::OwnDiscovery
        } else {
            Learned::Relay
        };
        let full_route = if ctx.profile.source_routing {
            packet
                .source_route
                .as_ref()
                .and_then(|r| suffix_from(r, self.id))
        } else {
            None
        };
        self.upsert_table_entry(
            flow_dest,
            RouteEntry {
                next_hop: packet.previous_hop,
                hop_count: packet.hop_count + 1,
                expiry: life,
                dest_seq: packet.dest_seq,
                valid: true,
                learned,
                full_route,
                precursors: BTreeSet::new(),
            },
        );
        if ctx.profile.hello_monitoring {
            self.add_monitor(ctx, packet.previous_hop, &mut actions);
        }

        if packet.origin == self.id {
            // Discovery (or repair) complete: flush buffered data.
            if let Some(discovery) = self.pending.remove(&flow_dest) {
                let buffered: Vec<Packet> = discovery.buffered.into_iter().collect();
                for pkt in buffered {
                    actions.extend(self.forward_data(ctx, pkt));
                }
            }
            return actions;
        }

        // Forward along the reverse path.
        let reverse = if let Some(route) = packet.source_route.as_ref() {
            prev_in_route(route, self.id)
        } else {
            self.table_next_hop(packet.origin, ctx.now)
        };
        let Some(reverse) = reverse else {
            actions.push(Action::Drop {
                packet,
                reason: DropReason::Expired,
            });
            return actions;
        };
        if let Some(entry) = self.table.get_mut(&flow_dest) {
            entry.precursors.insert(packet.origin);
        }
        if ctx.profile.hello_monitoring {
            self.add_monitor(ctx, reverse, &mut actions);
        }
        packet.hop_count += 1;
        packet.previous_hop = self.id;
        actions.push(Action::Unicast {
            packet,
            next_hop: reverse,
        });
        actions
    }

    // ------------------------------------------------------------------
    // RERR
    // ------------------------------------------------------------------

    /// `via`, when present, is a path from this node back to `origin` —
    /// normally the reversed prefix of the path the failed packet walked.
    /// Without it the reverse table route is the only option, and if that has
    /// expired too the origin simply never hears about the break.
    fn emit_rerr(
        &mut self,
        ctx: Ctx<'_>,
        unreachable: NodeId,
        origin: NodeId,
        broken: (NodeId, NodeId),
        via: Option<Vec<NodeId>>,
    ) -> Vec<Action> {
        let mut actions = Vec::new();
        if origin == self.id {
            return actions;
        }
        let via = via.filter(|p| p.len() >= 2 && p[0] == self.id && *p.last().unwrap() == origin);
        let (next, route) = match via {
            Some(path) => (path[1], Some(path)),
            None => match self.table_next_hop(origin, ctx.now) {
                Some(next) => (next, None),
                None => return actions, // no reverse path left
            },
        };
        let mut rerr = Packet::control(PacketKind::Rerr, self.id, origin, ctx.now);
        rerr.unreachable = Some(unreachable);
        rerr.broken_link = Some(broken);
        rerr.ttl = ctx.params.net_ttl;
        rerr.previous_hop = self.id;
        rerr.source_route = route;
        actions.push(Action::Unicast {
            packet: rerr,
            next_hop: next,
        });
        actions
    }

    fn handle_rerr(&mut self, ctx: Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let mut actions = Vec::new();
        let Some(unreachable) = packet.unreachable else {
            actions.push(Action::Drop {
                packet,
                reason: DropReason::Malformed,
            });
            return actions;
        };
        if let Some(link) = packet.broken_link {
            self.purge_cached_link(link.0, link.1);
        }

        if packet.destination == self.id {
            if let Some(entry) = self.table.get_mut(&unreachable) {
                entry.valid = false;
            }
            // One failed alternate is enough evidence that the cached picture
            // of this destination is stale; rediscover instead of burning a
            // data packet per leftover cache entry.
            if ctx.profile.reuse_cached_routes {
                self.cache.remove(&unreachable);
            }
            let has_alternate = self.route_for_data(unreachable, ctx).is_some()
                || (!ctx.profile.source_routing && self.table_next_hop(unreachable, ctx.now).is_some());
            if !has_alternate && self.active_dests.contains(&unreachable) {
                actions.extend(self.start_discovery(ctx, unreachable, None));
            }
            return actions;
        }

        // Intermediate: invalidate the poisoned entry and pass it on.
        if let Some(entry) = self.table.get_mut(&unreachable) {
            if entry.valid && entry.next_hop == packet.previous_hop {
                entry.valid = false;
            }
        }
        let embedded = packet
            .source_route
            .as_deref()
            .and_then(|route| next_in_route(route, self.id));
        let next = embedded.or_else(|| self.table_next_hop(packet.destination, ctx.now));
        let Some(next) = next else {
            actions.push(Action::Drop {
                packet,
                reason: DropReason::Expired,
            });
            return actions;
        };
        packet.previous_hop = self.id;
        actions.push(Action::Unicast {
            packet,
            next_hop: next,
        });
        actions
    }

    // ------------------------------------------------------------------
    // Link monitoring
    // ------------------------------------------------------------------

    fn add_monitor(&mut self, ctx: Ctx<'_>, partner: NodeId, actions: &mut Vec<Action>) {
        let expiry = ctx.now + ctx.route_life();
        match self.monitors.get_mut(&partner) {
            Some(monitor) => {
                monitor.expiry = monitor.expiry.max(expiry);
            }
            None => {
                self.monitors.insert(
                    partner,
                    Monitor {
                        expiry,
                        last_heard: ctx.now,
                        started: ctx.now,
                    },
                );
                actions.push(Action::SetTimer {
                    timer: TimerKind::Hello { partner },
                    delay: ctx.hello_interval(),
                });
            }
        }
    }

    fn on_hello_tick(&mut self, ctx: Ctx<'_>, partner: NodeId) -> Vec<Action> {
        let mut actions = Vec::new();
        let Some(monitor) = self.monitors.get(&partner).copied() else {
            return actions;
        };
        if ctx.now > monitor.expiry {
            self.monitors.remove(&partner);
            return actions;
        }
        let mut hello = Packet::control(PacketKind::Hello, self.id, partner, ctx.now);
        hello.previous_hop = self.id;
        actions.push(Action::Unicast {
            packet: hello,
            next_hop: partner,
        });
        let allowed = SimTime::from_secs_f64(
            ctx.params.hello_interval * ctx.params.allowed_hello_loss as f64,
        );
        if ctx.now.saturating_sub(monitor.last_heard) > allowed {
            actions.extend(self.link_break(ctx, partner, None));
            return actions;
        }
        actions.push(Action::SetTimer {
            timer: TimerKind::Hello { partner },
            delay: ctx.hello_interval(),
        });
        actions
    }

    // ------------------------------------------------------------------
    // Route stores
    // ------------------------------------------------------------------

    fn upsert_table_entry(&mut self, dest: NodeId, candidate: RouteEntry) {
        if dest == self.id {
            return;
        }
        match self.table.get_mut(&dest) {
            None => {
                self.table.insert(dest, candidate);
            }
            Some(existing) => {
                // Replacement rule: stale entries always lose, then newer
                // sequence number, then shorter path, then lowest next hop as
                // a deterministic tie break.
                let replace = !existing.valid
                    || candidate.dest_seq > existing.dest_seq
                    || (candidate.dest_seq == existing.dest_seq
                        && (candidate.hop_count < existing.hop_count
                            || (candidate.hop_count == existing.hop_count
                                && candidate.next_hop <= existing.next_hop)));
                if replace {
                    let precursors = core::mem::take(&mut existing.precursors);
                    *existing = candidate;
                    existing.precursors.extend(precursors);
                } else {
                    existing.expiry = existing.expiry.max(candidate.expiry);
                }
            }
        }
    }

    fn cache_route(&mut self, ctx: Ctx<'_>, path: Vec<NodeId>, expiry: SimTime) {
        if path.len() < 2 || path[0] != self.id || !is_simple_path(&path) {
            return;
        }
        let dest = *path.last().expect("non-empty path");
        if dest == self.id {
            return;
        }
        let multi = ctx.profile.route_cache_multi;
        let routes = self.cache.entry(dest).or_default();
        if let Some(existing) = routes.iter_mut().find(|r| r.path == path) {
            existing.expiry = existing.expiry.max(expiry);
            return;
        }
        routes.push(CachedRoute { path, expiry });
        if !multi {
            // Keep only the best route: shortest, then lexicographic.
            routes.sort_by(|a, b| a.path.len().cmp(&b.path.len()).then(a.path.cmp(&b.path)));
            routes.truncate(1);
        }
    }

    fn best_cached_route(&mut self, dest: NodeId, now: SimTime) -> Option<Vec<NodeId>> {
        let routes = self.cache.get_mut(&dest)?;
        routes.retain(|r| r.expiry >= now);
        // Freshest first: under mobility a recently learned route is far more
        // likely to still exist than an old short one. Length and lexical
        // order only break ties.
        routes
            .iter()
            .min_by(|a, b| {
                b.expiry
                    .cmp(&a.expiry)
                    .then(a.path.len().cmp(&b.path.len()))
                    .then(a.path.cmp(&b.path))
            })
            .map(|r| r.path.clone())
    }

    fn purge_cached_link(&mut self, from: NodeId, to: NodeId) {
        for routes in self.cache.values_mut() {
            routes.retain(|r| !contains_link(&r.path, from, to));
        }
        self.cache.retain(|_, routes| !routes.is_empty());
    }

    /// Promiscuous learning from a packet not addressed to us. Bad news
    /// spreads too: an overheard error report purges the broken link from the
    /// listener's cache before it can mislead anyone else.
    fn learn_overheard(&mut self, ctx: Ctx<'_>, packet: &Packet) {
        if let (PacketKind::Rerr, Some((from, to))) = (packet.kind, packet.broken_link) {
            self.purge_cached_link(from, to);
            return;
        }
        let life = ctx.now + ctx.route_life();
        let Some(route) = packet.source_route.as_ref() else {
            return;
        };
        // Only the suffix from a node actually on the route is trustworthy;
        // splicing "I can hear the transmitter" links onto someone else's
        // route fabricates paths that mostly do not exist under mobility.
        if let Some(suffix) = suffix_from(route, self.id) {
            self.cache_route(ctx, suffix, life);
        }
    }

    fn gc_rreq_seen(&mut self, now: SimTime, window: SimTime) {
        if self.rreq_seen.len() > 1024 {
            self.rreq_seen.retain(|_, seen| now.saturating_sub(*seen) <= window);
        }
    }

    fn bump_seq(&mut self) -> u32 {
        self.seq += 1;
        self.seq
    }

    fn bump_rreq_id(&mut self) -> u32 {
        self.next_rreq_id += 1;
        self.next_rreq_id
    }

    fn bump_token(&mut self) -> u32 {
        self.next_token += 1;
        self.next_token
    }
}

fn next_in_route(route: &[NodeId], node: NodeId) -> Option<NodeId> {
    let idx = route.iter().position(|&n| n == node)?;
    route.get(idx + 1).copied()
}

fn prev_in_route(route: &[NodeId], node: NodeId) -> Option<NodeId> {
    let idx = route.iter().position(|&n| n == node)?;
    if idx == 0 {
        None
    } else {
        route.get(idx - 1).copied()
    }
}

/// Visited nodes up to and including `node`, reversed: the way back from
/// `node` to the list's head.
fn reverse_prefix(traversed: &[NodeId], node: NodeId) -> Option<Vec<NodeId>> {
    let idx = traversed.iter().rposition(|&n| n == node)?;
    let mut path: Vec<NodeId> = traversed[..=idx].to_vec();
    path.reverse();
    Some(path)
}

fn suffix_from(route: &[NodeId], node: NodeId) -> Option<Vec<NodeId>> {
    let idx = route.iter().position(|&n| n == node)?;
    Some(route[idx..].to_vec())
}

fn contains_link(path: &[NodeId], from: NodeId, to: NodeId) -> bool {
    path.windows(2)
        .any(|w| (w[0] == from && w[1] == to) || (w[0] == to && w[1] == from))
}

fn is_simple_path(path: &[NodeId]) -> bool {
    let mut seen = BTreeSet::new();
    path.iter().all(|n| seen.insert(*n))
}
