//! Traffic and compute counters, and the closed-form traffic laws they are
//! checked against.
//!
//! Counting rules:
//!
//! * a word is **sent** once when its origin PE first pushes it onto a link,
//! * **forwarded** once each time an intermediary relays it another hop,
//! * **received** once per delivery into a PE's receive slot.
//!
//! Every emitted word is delivered (boundary PEs simply never emit toward
//! absent neighbors), so `sent + forwarded == received` holds exactly.
//! `hops_total` sums the hop count of every *delivered* data message: 1 per
//! cardinal block, 2 per diagonal block.

use serde::Serialize;

use crate::mesh::MeshDims;

/// Pure data-movement counters. Identical between a normal run and a
/// communication-only run of the same configuration.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrafficCounts {
    pub words_sent: u64,
    pub words_received: u64,
    pub words_forwarded: u64,
    pub hops_total: u64,
    pub control_messages: u64,
}

impl TrafficCounts {
    pub fn add(&mut self, other: &TrafficCounts) {
        self.words_sent += other.words_sent;
        self.words_received += other.words_received;
        self.words_forwarded += other.words_forwarded;
        self.hops_total += other.hops_total;
        self.control_messages += other.control_messages;
    }
}

/// Kernel-evaluation counters. All zero in communication-only mode.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComputeCounts {
    /// Face-flux evaluations performed (one per face per z cell).
    pub flux_evals: u64,
    /// Density (exponential) evaluations performed.
    pub density_evals: u64,
}

impl ComputeCounts {
    pub fn add(&mut self, other: &ComputeCounts) {
        self.flux_evals += other.flux_evals;
        self.density_evals += other.density_evals;
    }
}

/// Data messages delivered per protocol phase, plus router-switch commands.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseMessages {
    pub cardinal_step_a: u64,
    pub cardinal_step_b: u64,
    pub diagonal: u64,
    pub router_switch: u64,
}

/// Counters of one PE, with its position attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeCounterSnapshot {
    pub px: usize,
    pub py: usize,
    pub traffic: TrafficCounts,
    pub compute: ComputeCounts,
    /// Cardinal steps this PE spent in each router role.
    pub steps_as_sender: u64,
    pub steps_as_receiver: u64,
}

/// Full counter state of a fabric: per-PE rows plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FabricCounters {
    pub traffic: TrafficCounts,
    pub compute: ComputeCounts,
    pub messages_per_phase: PhaseMessages,
    pub per_pe: Vec<PeCounterSnapshot>,
}

impl FabricCounters {
    /// `sent + forwarded == received`, in aggregate.
    pub fn words_conserved(&self) -> bool {
        self.traffic.words_sent + self.traffic.words_forwarded == self.traffic.words_received
    }
}

/// Per-PE memory footprint against the configured budget. Exceeding the
/// budget is a diagnostic, never a failure: the simulator is not obliged to
/// fit, only to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    pub budget_bytes: usize,
    pub max_pe_bytes: usize,
    pub min_pe_bytes: usize,
    pub total_bytes: usize,
    pub pes_over_budget: usize,
}

/// Directed cardinal adjacencies of an `nx * ny` PE grid: every interior
/// east-west and north-south pair, counted in both directions.
pub fn directed_cardinal_pairs(dims: MeshDims) -> u64 {
    let (nx, ny) = (dims.nx as u64, dims.ny as u64);
    2 * ((nx - 1) * ny + nx * (ny - 1))
}

/// Directed diagonal adjacencies: both in-plane diagonal families, counted
/// in both directions.
pub fn directed_diagonal_pairs(dims: MeshDims) -> u64 {
    let (nx, ny) = (dims.nx as u64, dims.ny as u64);
    4 * (nx - 1) * (ny - 1)
}

/// Words delivered by the two cardinal steps in one application: one block
/// of `2 * nz` words per directed cardinal adjacency.
pub fn analytic_cardinal_words(dims: MeshDims) -> u64 {
    2 * dims.nz as u64 * directed_cardinal_pairs(dims)
}

/// Words delivered by the diagonal phase in one application: one forwarded
/// block per directed diagonal adjacency.
pub fn analytic_diagonal_words(dims: MeshDims) -> u64 {
    2 * dims.nz as u64 * directed_diagonal_pairs(dims)
}

/// Total words received per application. Also equals words sent plus words
/// forwarded, since every emission is delivered exactly once.
pub fn analytic_words_received(dims: MeshDims) -> u64 {
    analytic_cardinal_words(dims) + analytic_diagonal_words(dims)
}
