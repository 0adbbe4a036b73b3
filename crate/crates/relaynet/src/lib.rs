//! Configuration-driven experiment runner for the `relaynet-core` models.
//!
//! Experiments are described in TOML ([`spec`]), executed on a thread pool
//! ([`exec`]) and written as CSV ([`runner`]). The figure setups ship as
//! built-in [`suites`].

pub mod exec;
pub mod runner;
pub mod spec;
pub mod suites;
