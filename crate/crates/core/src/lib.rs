//! Simulation and analysis of a 1xN SIMO indoor channel sounder.
//!
//! A CW tone is received by a small array (a four-element ULA or a Π-shaped
//! array), complex gains are estimated per element with a matched filter, and
//! the gain snapshots are reduced to RSS, gain-ratio and capacity metrics.
//!
//! * [`channel`]: gain vectors, capacity, normalized capacity, RSS.
//! * [`geometry`]: array layouts, free-space LoS and a single wall replica.
//! * [`sounder`]: block fading, IQ synthesis, estimation, the simulation loop.
//! * [`analysis`]: metric series, summaries and comparisons.
//! * [`io`]: config, CSV and report formats. [`cli`] drives the binary.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod sounder;

pub use channel::{capacity, normalized_capacity, GainVector, Snr};
pub use error::{Error, Result};
