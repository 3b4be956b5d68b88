//! Finite-volume flux kernel on a simulated fabric of processing elements.
//!
//! The library has two execution paths for the same residual kernel and a
//! shared accounting layer:
//!
//! * [`solver`] — a plain cell-based evaluation used as the trusted oracle.
//! * [`fabric`] — a message-level simulator of a 2-D grid of processing
//!   elements, one per x-y column, that exchanges cell data over cardinal
//!   and two-hop diagonal routes and must reproduce the oracle bit for bit.
//! * [`metrics`] — per-cell operation census, data-movement totals,
//!   arithmetic intensity, throughput, and roofline classification.
//!
//! Supporting cast: [`physics`] holds the `f32` flux arithmetic both paths
//! share, [`mesh`] the structured grid with cardinal + in-plane diagonal +
//! vertical connectivity and the deterministic synthetic generators, and
//! [`format`] the little-endian file formats for meshes and fields.

pub mod error;
pub mod fabric;
pub mod format;
pub mod mesh;
pub mod metrics;
pub mod physics;
pub mod solver;

pub use error::{Error, Result};
