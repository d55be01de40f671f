//! Generalized reactive routing engine, specialized into AODV-, DSR- and
//! DYMO-style behavior through [`ProtocolProfile`] feature flags.

pub mod packet;
pub mod profile;
pub mod state;

pub use packet::{Packet, PacketKind};
pub use profile::ProtocolProfile;
pub use state::{Action, Ctx, DropReason, ProtocolState, TimerKind};
