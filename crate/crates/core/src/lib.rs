//! Selfish-node detection in a simulated wireless mesh.
//!
//! The crate bundles a deterministic discrete-event simulator ([`sim`]), a
//! control-plane AODV implementation with selfish behavior policies
//! ([`aodv`]), per-node FSM watchdogs ([`watchdog`]), the statistical
//! classification pipeline ([`detector`]) with its special functions
//! ([`numerics`]), and the experiment controller ([`expctl`]).

#![allow(clippy::needless_range_loop)]

pub mod aodv;
pub mod detector;
pub mod expctl;
pub mod numerics;
pub mod sim;
pub mod watchdog;

pub use sim::NodeId;
