use alloc::string::String;

#[cfg(feature = "serde")]
fn default_true() -> bool {
    true
}

/// Feature-flag record selecting protocol behavior on the shared reactive
/// engine. The three built-ins mirror the standard AODV/DSR/DYMO feature
/// matrix; arbitrary hybrids can be loaded from a scenario config.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolProfile {
    pub name: String,
    /// Packets carry the full route; otherwise forwarding is table-driven.
    pub source_routing: bool,
    /// Intermediate nodes holding a fresh route answer RREQs themselves.
    pub grat_rrep: bool,
    /// Keep multiple cached routes per destination.
    pub route_cache_multi: bool,
    /// Periodic HELLO beacons on active links.
    pub hello_monitoring: bool,
    /// One ACK per forwarded DATA packet, counted as control overhead.
    /// Applies when `hello_monitoring` is off; a profile with neither relies
    /// on link-layer transmission feedback alone.
    pub ack_monitoring: bool,
    /// Learn routes from overheard packets.
    pub promiscuous: bool,
    /// Walk the full expanding-ring TTL schedule on discovery. When off, a
    /// failed first ring escalates straight to a network-wide flood, trading
    /// extra broadcast overhead for a shorter worst-case discovery.
    #[cfg_attr(feature = "serde", serde(default = "default_true"))]
    pub expanding_ring: bool,
    /// Attempt a bounded-TTL repair at the break point before issuing RERR.
    pub local_repair: bool,
    /// Answer a fresh discovery from cached/stored routing information.
    pub reuse_cached_routes: bool,
}

impl ProtocolProfile {
    pub fn aodv() -> ProtocolProfile {
        ProtocolProfile {
            name: String::from("aodv"),
            source_routing: false,
            grat_rrep: true,
            route_cache_multi: false,
            hello_monitoring: true,
            ack_monitoring: false,
            promiscuous: false,
            expanding_ring: true,
            local_repair: false,
            reuse_cached_routes: false,
        }
    }

    pub fn dsr() -> ProtocolProfile {
        ProtocolProfile {
            name: String::from("dsr"),
            source_routing: true,
            grat_rrep: true,
            route_cache_multi: true,
            hello_monitoring: false,
            ack_monitoring: true,
            promiscuous: true,
            expanding_ring: false,
            local_repair: false,
            reuse_cached_routes: true,
        }
    }

    pub fn dymo() -> ProtocolProfile {
        ProtocolProfile {
            name: String::from("dymo"),
            source_routing: true,
            grat_rrep: false,
            route_cache_multi: false,
            hello_monitoring: false,
            ack_monitoring: false,
            promiscuous: false,
            expanding_ring: true,
            local_repair: false,
            reuse_cached_routes: false,
        }
    }

    pub fn by_name(name: &str) -> Option<ProtocolProfile> {
        match name {
            "aodv" => Some(ProtocolProfile::aodv()),
            "dsr" => Some(ProtocolProfile::dsr()),
            "dymo" => Some(ProtocolProfile::dymo()),
            _ => None,
        }
    }
}
