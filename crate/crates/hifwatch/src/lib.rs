//! Arcing high-impedance fault synthesis and detection on feeder current.
//!
//! - [`wavesim`] synthesizes primary-side current with scheduled events.
//! - [`havok`] builds delay embeddings, truncated SVDs, the forcing signal
//!   and DMD Koopman approximations.
//! - [`s2g`] turns a series into a subsequence graph and scores paths on it.
//! - [`detector`] chains the two, thresholds and evaluates.
//! - [`config`], [`io`] and [`cli`] back the `hifwatch` binary.

pub mod cli;
pub mod config;
pub mod detector;
pub mod havok;
pub mod io;
pub mod s2g;
pub mod wavesim;
