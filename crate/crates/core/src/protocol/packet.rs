use alloc::vec::Vec;

use crate::sim::time::SimTime;
use crate::sim::NodeId;

/// Bytes charged for serialization delay of any control packet. Wire-format
/// fidelity is out of scope; a single small size keeps timing simple.
pub const CONTROL_PACKET_BYTES: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum PacketKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
    Ack,
    Data,
}

impl PacketKind {
    pub fn is_control(self) -> bool {
        self != PacketKind::Data
    }

    pub fn label(self) -> &'static str {
        match self {
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Hello => "HELLO",
            PacketKind::Ack => "ACK",
            PacketKind::Data => "DATA",
        }
    }
}

/// One routing-layer packet as carried by simulation events.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub kind: PacketKind,
    /// Node the packet ultimately originates from (flow source for DATA,
    /// requester for RREQ/RREP).
    pub origin: NodeId,
    /// Node the packet is ultimately about (flow destination, or the node to
    /// notify for RERR).
    pub destination: NodeId,
    pub previous_hop: NodeId,
    /// Discovery identifier, unique per (origin, counter).
    pub rreq_id: u32,
    pub origin_seq: u32,
    pub dest_seq: u32,
    pub ttl: u32,
    pub hop_count: u32,
    /// Accumulated/embedded route for source-routing profiles.
    pub source_route: Option<Vec<NodeId>>,
    /// Broken link reported by an RERR.
    pub broken_link: Option<(NodeId, NodeId)>,
    /// Destination that became unreachable (RERR only).
    pub unreachable: Option<NodeId>,
    pub payload_bytes: u32,
    /// Simulator-unique packet id, used for delay matching and tracing.
    pub id: u64,
    /// Application enqueue time for DATA; creation time otherwise.
    pub sent_at: SimTime,
    /// Audit trail of nodes the packet visited (simulator-only).
    pub traversed: Vec<NodeId>,
    /// True for RREPs generated by an intermediate node on behalf of the
    /// destination.
    pub grat: bool,
}

impl Packet {
    pub fn control(kind: PacketKind, origin: NodeId, destination: NodeId, now: SimTime) -> Packet {
        Packet {
            kind,
            origin,
            destination,
            previous_hop: origin,
            rreq_id: 0,
            origin_seq: 0,
            dest_seq: 0,
            ttl: 1,
            hop_count: 0,
            source_route: None,
            broken_link: None,
            unreachable: None,
            payload_bytes: CONTROL_PACKET_BYTES,
            id: 0,
            sent_at: now,
            traversed: Vec::new(),
            grat: false,
        }
    }

    pub fn total_bytes(&self) -> u32 {
        self.payload_bytes
    }
}
