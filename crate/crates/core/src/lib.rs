//! Link engineering, packet pipeline, and a deterministic two-node simulator
//! for half-duplex secure voice over LoRa chirp-spread-spectrum radios.
//!
//! The crate is organised along the signal path:
//!
//! - [`linkbudget`] — free-space path loss, received power, link margin,
//!   receiver sensitivity, and maximum-range solving.
//! - [`phy`] — LoRa symbol timing, time-on-air, and effective bitrate.
//! - [`pipeline`] — VOX gating, the codec bitrate model, CRC-16 framing, and
//!   AES-128-CTR packet encryption.
//! - [`mac`] — the half-duplex SLEEP/LISTEN/TRANSMIT state machine with
//!   listen-before-talk and duty-cycle accounting.
//! - [`energy`] — duty-cycle-weighted average power and battery endurance.
//! - [`sim`] — the discrete-event engine tying the layers together over a
//!   shadowed channel, plus parameter sweeps.
//!
//! All numeric behaviour is deterministic: simulations use integer
//! microsecond clocks and a seeded, stream-split ChaCha8 generator, so a
//! scenario plus a seed always reproduces the same report byte for byte.

pub mod energy;
pub mod error;
pub mod linkbudget;
pub mod mac;
pub mod phy;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
