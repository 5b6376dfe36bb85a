//! Simulation library for an active-IRS-aided multi-user MIMO downlink.
//!
//! The crate is organized as a pipeline:
//!
//! * [`matcore`] — dense complex linear algebra with one tolerance policy;
//! * [`channels`] — array geometry, propagation regimes, channel synthesis;
//! * [`dof`] — spatial degrees-of-freedom bounds and empirical rank checks;
//! * [`beamformers`] — closed-form transmit/reflect/receive designs;
//! * [`metrics`] — achievable-rate and SNR evaluation;
//! * [`harness`] — Monte-Carlo sweeps, CSV/SVG emission, and the CLI surface.

pub mod beamformers;
pub mod channels;
pub mod dof;
pub mod harness;
pub mod matcore;
pub mod metrics;
