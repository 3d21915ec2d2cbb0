//! Simulation toolkit for a time-variant dual-LFSR arbiter PUF and its
//! replay-resistant two-time authentication protocol.
//!
//! The pipeline runs LFSR pair -> arbiter PUF -> voter -> XOR inside each
//! lane of a [`PufDevice`]; a [`ServerRegistry`] mirrors it from enrolled
//! data; [`protocol`] carries the two-challenge exchange over a tick-based
//! channel; [`adversary`] holds the replay and modeling attackers and the
//! PUF quality metrics.

pub mod adversary;
pub mod apuf;
pub mod bits;
pub mod device;
pub mod error;
pub mod lfsr;
pub mod obfuscator;
pub mod persist;
pub mod postproc;
pub mod protocol;
pub mod report;
mod seed;
pub mod server;

pub use apuf::{ApufInstance, Challenge};
pub use bits::BitString;
pub use device::{build_device, DeviceConfig, PufDevice};
pub use error::{Error, Result};
pub use lfsr::{LfsrSpec, LfsrState};
pub use obfuscator::{DualLfsrSpec, Mode};
pub use protocol::{run_authentication, run_registration, AuthResult, Channel, Frame, Transcript};
pub use seed::mix_seed;
pub use server::{compare, ServerRegistry, Session};
