//! Newline-friendly event records emitted by simulation runs. Metrics are
//! computed purely from this trace.

use alloc::vec::Vec;

use crate::protocol::packet::PacketKind;
use crate::sim::time::SimTime;
use crate::sim::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TraceKind {
    /// One radio transmission (broadcast or unicast).
    Transmit,
    /// Packet handed to the routing layer of the addressed node.
    Receive,
    /// Packet heard promiscuously by a bystander.
    Overhear,
    /// Application enqueued a DATA packet at its origin.
    AppSend,
    /// DATA packet handed to the application at its destination.
    AppDeliver,
    /// Packet dropped (buffer overflow, failed discovery, dead route...).
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: TraceKind,
    pub packet_kind: PacketKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub ttl: u32,
    pub packet_id: u64,
    /// Gratuitous RREP marker.
    pub grat: bool,
    /// Visited-node list, populated on AppDeliver records only.
    pub path: Vec<NodeId>,
}
