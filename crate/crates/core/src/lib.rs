//! Cooperative multihop relaying in Poisson-distributed M2M networks.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation:
//!
//! * [`netmodel`]: Poisson node fields, slotted-ALOHA roles, Rayleigh fading,
//!   SIR and per-block mutual information.
//! * [`protocol`]: the slot-by-slot relaying engine for no cooperation (NC),
//!   repetition combining (RC) and incremental redundancy combining (IRC).
//! * [`contention`]: the pulse-based P-bit relay contention.
//! * [`analytic`]: decoding-cell areas and the recursive expected-progress
//!   approximation.
//! * [`experiments`]: Monte Carlo estimators, progress rate density (PRD) and
//!   the `(R, p)` optimizers.
//!
//! IO, configuration files and the command line live in the `relaynet` crate.

#![no_std]

extern crate alloc;

pub mod analytic;
pub mod contention;
mod error;
pub mod experiments;
pub mod netmodel;
pub mod protocol;
pub mod quadrature;
pub mod random;

pub use error::{Error, Result};
pub use netmodel::{NetworkConfig, NetworkRealization, Point, Scheme};
pub use protocol::{EpisodeResult, RelaySelection};
