//! Core library for studying control overhead of reactive ad-hoc routing.
//!
//! Two halves live here:
//!
//! * a closed-form model of route-discovery and link-monitoring overhead,
//!   together with its parameter sensitivities ([`overhead`], [`sensitivity`]),
//! * a deterministic packet-level simulator running a generalized reactive
//!   routing engine that can be specialized into AODV-, DSR- and DYMO-style
//!   behavior via feature flags ([`sim`], [`protocol`], [`metrics`]).
//!
//! The crate is `no_std` + `alloc` compatible; everything that needs files,
//! clocks or a terminal lives in the companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod metrics;
pub mod overhead;
pub mod protocol;
pub mod sensitivity;
pub mod sim;
pub mod trace;

pub use error::Error;
