//! Messages, links, and colors of the fabric interconnect.
//!
//! Every processing element (PE) owns a router with five links: four to its
//! compass neighbors and a `Ramp` between the PE and its own router. Data
//! moves as messages of 32-bit words tagged with a *color* that identifies
//! the communication pattern:
//!
//! * [`COLOR_CARDINAL_A`] / [`COLOR_CARDINAL_B`] — the two alternating
//!   cardinal broadcast steps. Each sending PE pushes its own column block
//!   on all in-bounds links.
//! * [`COLOR_DIAGONAL`] — a cardinal block being relayed one further hop by
//!   an intermediary so it reaches the diagonal neighbor of its origin.
//! * [`COLOR_ROUTER_SWITCH`] — zero-payload control commands that move
//!   router switch positions between steps. Counted separately from data.
//!
//! The compass is anchored to mesh coordinates: north is `-y`, south `+y`,
//! east `+x`, west `-x`. A message sent on a link is delivered to the
//! neighbor on that side, which sees it arriving *from* the opposite side.

use crate::mesh::FaceDirection;

/// Cardinal data broadcast, first step (initial senders).
pub const COLOR_CARDINAL_A: u8 = 0;
/// Cardinal data broadcast, second step (roles switched).
pub const COLOR_CARDINAL_B: u8 = 1;
/// Diagonal payload on its second hop, forwarded by an intermediary.
pub const COLOR_DIAGONAL: u8 = 2;
/// Router-switch control command.
pub const COLOR_ROUTER_SWITCH: u8 = 3;

/// Grid position of a PE. One PE owns the whole z column of mesh cells at
/// its (x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeId {
    pub px: usize,
    pub py: usize,
}

impl PeId {
    pub fn new(px: usize, py: usize) -> Self {
        Self { px, py }
    }
}

/// One of the five router links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    North,
    East,
    South,
    West,
    /// Between a PE and its own router; not a fabric hop.
    Ramp,
}

impl Link {
    /// Grid offset a message sent on this link travels.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Link::North => (0, -1),
            Link::East => (1, 0),
            Link::South => (0, 1),
            Link::West => (-1, 0),
            Link::Ramp => (0, 0),
        }
    }

    /// Link on which to push data toward the cardinal neighbor `direction`.
    pub fn toward(direction: FaceDirection) -> Link {
        match direction {
            FaceDirection::XNeg => Link::West,
            FaceDirection::XPos => Link::East,
            FaceDirection::YNeg => Link::North,
            FaceDirection::YPos => Link::South,
            _ => panic!("only cardinal directions map onto links, got {direction:?}"),
        }
    }

    /// Where the receiver sees the sender: a message arriving over the east
    /// link of its sender comes from the receiver's west, and so on.
    pub fn arrival_direction(self) -> FaceDirection {
        match self {
            Link::North => FaceDirection::YPos,
            Link::East => FaceDirection::XNeg,
            Link::South => FaceDirection::YNeg,
            Link::West => FaceDirection::XPos,
            Link::Ramp => panic!("ramp deliveries have no arrival direction"),
        }
    }
}

/// Router switch position for the cardinal data pattern. `Sending` is the
/// broadcast root (configuration 0), `Receiving` the sink (configuration 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchPosition {
    Sending,
    Receiving,
}

/// What a message carries.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    /// A column block: `2 * nz` words, pressures first, elevations second,
    /// each an `f32` bit pattern. Never empty.
    Data(Vec<u32>),
    /// Zero-payload command: set the receiving router's cardinal-pattern
    /// switch to `next`. Commands are position-setting, not toggling, so a
    /// receiver reached by several senders in the same step converges to
    /// the same state no matter how many commands arrive.
    RouterSwitch { next: SwitchPosition },
}

/// One message in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub color: u8,
    pub kind: MessageKind,
    /// PE that produced the payload — for forwarded diagonal blocks this is
    /// the corner cell, not the intermediary doing the forwarding.
    pub origin: PeId,
    /// Link the emitting PE pushed the message onto.
    pub link: Link,
    /// Fabric link traversals completed so far. The router increments this
    /// on every hop; ramp transfers do not count.
    pub hops: u32,
}

impl Message {
    pub fn data(color: u8, origin: PeId, link: Link, words: Vec<u32>, hops: u32) -> Self {
        debug_assert!(!words.is_empty(), "data payloads are never empty");
        Self {
            color,
            kind: MessageKind::Data(words),
            origin,
            link,
            hops,
        }
    }

    pub fn router_switch(origin: PeId, link: Link, next: SwitchPosition) -> Self {
        Self {
            color: COLOR_ROUTER_SWITCH,
            kind: MessageKind::RouterSwitch { next },
            origin,
            link,
            hops: 0,
        }
    }

    /// Number of 32-bit data words, zero for control messages.
    pub fn word_count(&self) -> u64 {
        match &self.kind {
            MessageKind::Data(words) => words.len() as u64,
            MessageKind::RouterSwitch { .. } => 0,
        }
    }
}

/// Packs a pressure column and an elevation column into payload words.
pub fn pack_block(pressure: &[f32], elevation: &[f32]) -> Vec<u32> {
    debug_assert_eq!(pressure.len(), elevation.len());
    pressure
        .iter()
        .chain(elevation.iter())
        .map(|v| v.to_bits())
        .collect()
}

/// Splits payload words back into (pressure, elevation) columns.
#[cfg(test)]
pub fn unpack_block(words: &[u32]) -> (Vec<f32>, Vec<f32>) {
    debug_assert!(words.len() % 2 == 0, "block must hold two equal columns");
    let nz = words.len() / 2;
    let pressure = words[..nz].iter().map(|&w| f32::from_bits(w)).collect();
    let elevation = words[nz..].iter().map(|&w| f32::from_bits(w)).collect();
    (pressure, elevation)
}
