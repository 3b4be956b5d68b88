//! State and per-phase behavior of one processing element.
//!
//! A PE owns the full z column of mesh cells at its (x, y): pressures,
//! elevations, cached densities, residuals, the transmissibilities of every
//! face its cells touch, receive buffers for the eight in-plane neighbor
//! blocks, and one partial-flux column per face direction. Vertical faces
//! are internal to the column and never touch the fabric.
//!
//! The flux arithmetic is exactly [`crate::physics`]; the only job of this
//! module is to get the right neighbor data into the right slot and to
//! accumulate the ten partial-flux columns in canonical direction order.

use crate::fabric::counters::{ComputeCounts, TrafficCounts};
use crate::fabric::message::{
    pack_block, Link, Message, MessageKind, PeId, SwitchPosition, COLOR_DIAGONAL,
};
use crate::mesh::FaceDirection;
use crate::physics::{face_flux_with_densities, fluid_density, CellState, FluidProps};

/// The cardinal directions in canonical order; the only ones PEs send on.
pub(crate) const CARDINAL: [FaceDirection; 4] = [
    FaceDirection::XNeg,
    FaceDirection::XPos,
    FaceDirection::YNeg,
    FaceDirection::YPos,
];

/// Where an intermediary relays a cardinal block it received, under the
/// clockwise assignment: a target's northwest payload travels via its north
/// neighbor, northeast via east, southeast via south, southwest via west
/// (north being -y). Seen from the intermediary, that means:
/// received from -x is relayed to +y, from -y to -x, from +x to -y,
/// and from +y to +x.
pub(crate) fn forward_direction(arrival: FaceDirection) -> FaceDirection {
    match arrival {
        FaceDirection::XNeg => FaceDirection::YPos,
        FaceDirection::YNeg => FaceDirection::XNeg,
        FaceDirection::XPos => FaceDirection::YNeg,
        FaceDirection::YPos => FaceDirection::XPos,
        other => panic!("only cardinal blocks are forwarded, got {other:?}"),
    }
}

/// The intermediary a diagonal payload must pass through on its way to
/// `target` from the diagonal neighbor in `direction`.
pub fn diagonal_intermediary(target: PeId, direction: FaceDirection) -> PeId {
    let (dx, dy) = match direction {
        FaceDirection::DiagNegNeg => (0isize, -1isize), // northwest via north
        FaceDirection::DiagPosNeg => (1, 0),            // northeast via east
        FaceDirection::DiagPosPos => (0, 1),            // southeast via south
        FaceDirection::DiagNegPos => (-1, 0),           // southwest via west
        other => panic!("{other:?} is not a diagonal direction"),
    };
    PeId::new(
        target.px.checked_add_signed(dx).unwrap(),
        target.py.checked_add_signed(dy).unwrap(),
    )
}

/// One received neighbor block: two `f32` columns plus provenance.
#[derive(Debug, Clone)]
pub struct RecvSlot {
    pub pressure: Vec<f32>,
    pub elevation: Vec<f32>,
    /// PE whose column this is.
    pub origin: PeId,
    /// Intermediary that relayed the block; `None` for cardinal arrivals.
    pub via: Option<PeId>,
    /// Fabric hops the block traveled: 1 cardinal, 2 diagonal.
    pub hops: u32,
    /// Set when the block for the current application has arrived.
    pub filled: bool,
}

impl RecvSlot {
    fn empty(nz: usize) -> Self {
        Self {
            pressure: vec![0.0; nz],
            elevation: vec![0.0; nz],
            origin: PeId::new(0, 0),
            via: None,
            hops: 0,
            filled: false,
        }
    }
}

/// Counters local to one PE.
#[derive(Debug, Default, Clone, Copy)]
pub struct PeCounters {
    pub traffic: TrafficCounts,
    pub compute: ComputeCounts,
    pub steps_as_sender: u64,
    pub steps_as_receiver: u64,
}

/// Full state of one processing element.
#[derive(Debug)]
pub struct PeState {
    id: PeId,
    nz: usize,
    /// Initial router position for the cardinal pattern, restored at the
    /// start of every application (static schedule).
    home_position: SwitchPosition,
    router_position: SwitchPosition,

    // Own column.
    pressure: Vec<f32>,
    elevation: Vec<f32>,
    density: Vec<f32>,
    residual: Vec<f32>,

    // Transmissibility views. `htrans[d]` is one value per z layer for the
    // in-plane direction with ordinal `d`, `None` where the neighbor is
    // absent. `vtrans[z]` couples layer z to layer z+1.
    htrans: [Option<Vec<f32>>; 8],
    vtrans: Vec<f32>,
    neighbors: [Option<PeId>; 8],

    // Receive buffers and partial-flux slots, same layout as `htrans`.
    recv: [Option<RecvSlot>; 8],
    hflux: [Option<Vec<f32>>; 8],
    zneg_flux: Vec<f32>,
    zpos_flux: Vec<f32>,

    pub(crate) outbox: Vec<Message>,
    pub(crate) inbox: Vec<Message>,
    counters: PeCounters,
}

impl PeState {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        id: PeId,
        nz: usize,
        elevation: Vec<f32>,
        htrans: [Option<Vec<f32>>; 8],
        vtrans: Vec<f32>,
        neighbors: [Option<PeId>; 8],
        home_position: SwitchPosition,
    ) -> Self {
        let recv = std::array::from_fn(|d| neighbors[d].map(|_| RecvSlot::empty(nz)));
        let hflux = std::array::from_fn(|d| neighbors[d].map(|_| vec![0.0f32; nz]));
        Self {
            id,
            nz,
            home_position,
            router_position: home_position,
            pressure: vec![0.0; nz],
            elevation,
            density: vec![0.0; nz],
            residual: vec![0.0; nz],
            htrans,
            vtrans,
            neighbors,
            recv,
            hflux,
            zneg_flux: vec![0.0; nz],
            zpos_flux: vec![0.0; nz],
            outbox: Vec::new(),
            inbox: Vec::new(),
            counters: PeCounters::default(),
        }
    }

    #[inline]
    pub fn id(&self) -> PeId {
        self.id
    }

    #[inline]
    pub fn counters(&self) -> &PeCounters {
        &self.counters
    }

    #[inline]
    pub fn router_position(&self) -> SwitchPosition {
        self.router_position
    }

    #[inline]
    pub fn neighbor(&self, direction: FaceDirection) -> Option<PeId> {
        self.neighbors[direction.ordinal()]
    }

    /// Receive buffer for an in-plane direction, if that neighbor exists.
    pub fn recv_slot(&self, direction: FaceDirection) -> Option<&RecvSlot> {
        self.recv[direction.ordinal()].as_ref()
    }

    #[inline]
    pub fn residual(&self) -> &[f32] {
        &self.residual
    }

    /// Loads the pressure column for one application and caches densities
    /// once per cell (skipped in communication-only mode, which never
    /// computes). Resets per-application state: receive slots and the
    /// router position, which the static schedule re-arms at its home value.
    pub(crate) fn load_application(&mut self, pressure: &[f32], props: &FluidProps, comm_only: bool) {
        self.pressure.copy_from_slice(pressure);
        self.router_position = self.home_position;
        for slot in self.recv.iter_mut().flatten() {
            slot.filled = false;
        }
        self.residual.fill(0.0);
        if !comm_only {
            for z in 0..self.nz {
                self.density[z] = fluid_density(self.pressure[z], props);
            }
            self.counters.compute.density_evals += self.nz as u64;
        }
    }

    /// Emits this PE's block on every in-bounds cardinal link if the router
    /// is in the sending position, followed by the switch commands that
    /// exchange sender and receiver roles for the next step.
    pub(crate) fn emit_cardinal(&mut self, color: u8) {
        if self.router_position != SwitchPosition::Sending {
            self.counters.steps_as_receiver += 1;
            return;
        }
        self.counters.steps_as_sender += 1;
        let block = pack_block(&self.pressure, &self.elevation);
        for direction in CARDINAL {
            if self.neighbors[direction.ordinal()].is_some() {
                self.counters.traffic.words_sent += block.len() as u64;
                self.outbox.push(Message::data(
                    color,
                    self.id,
                    Link::toward(direction),
                    block.clone(),
                    0,
                ));
            }
        }
        // After the data: tell the neighbors to send next and this router to
        // receive. Position-setting commands converge no matter how many
        // senders reach the same receiver.
        for direction in CARDINAL {
            if self.neighbors[direction.ordinal()].is_some() {
                self.counters.traffic.control_messages += 1;
                self.outbox.push(Message::router_switch(
                    self.id,
                    Link::toward(direction),
                    SwitchPosition::Sending,
                ));
            }
        }
        self.counters.traffic.control_messages += 1;
        self.outbox
            .push(Message::router_switch(self.id, Link::Ramp, SwitchPosition::Receiving));
    }

    /// Relays every cardinal block received this application one hop onward
    /// per [`forward_direction`], so it reaches the diagonal neighbor of its
    /// origin. The partial flux for the face this PE shares with the block's
    /// origin was already computed on arrival; forwarding is pure routing.
    pub(crate) fn emit_diagonal_forwards(&mut self) {
        for arrival in CARDINAL {
            let Some(slot) = self.recv[arrival.ordinal()].as_ref() else {
                continue;
            };
            if !slot.filled {
                continue;
            }
            let forward = forward_direction(arrival);
            if self.neighbors[forward.ordinal()].is_none() {
                continue;
            }
            let words = pack_block(&slot.pressure, &slot.elevation);
            self.counters.traffic.words_forwarded += words.len() as u64;
            self.outbox.push(Message::data(
                COLOR_DIAGONAL,
                slot.origin,
                Link::toward(forward),
                words,
                slot.hops,
            ));
        }
    }

    /// Consumes every delivered message: data blocks land in their receive
    /// slot and (outside communication-only mode) immediately produce the
    /// partial-flux column for that face; switch commands move the router.
    pub(crate) fn process_inbox(&mut self, props: &FluidProps, comm_only: bool) {
        let inbox = std::mem::take(&mut self.inbox);
        for msg in inbox {
            match msg.kind {
                MessageKind::RouterSwitch { next } => {
                    self.router_position = next;
                }
                MessageKind::Data(ref words) => {
                    let direction = if msg.color == COLOR_DIAGONAL {
                        let dx = msg.origin.px as isize - self.id.px as isize;
                        let dy = msg.origin.py as isize - self.id.py as isize;
                        diag_direction(dx, dy)
                    } else {
                        msg.link.arrival_direction()
                    };
                    let via = (msg.color == COLOR_DIAGONAL).then(|| {
                        let (ldx, ldy) = msg.link.offset();
                        PeId::new(
                            self.id.px.checked_add_signed(-ldx).unwrap(),
                            self.id.py.checked_add_signed(-ldy).unwrap(),
                        )
                    });
                    self.store_block(direction, words, msg.origin, via, msg.hops);
                    if !comm_only {
                        self.compute_face_column(direction, props);
                    }
                }
            }
        }
    }

    fn store_block(
        &mut self,
        direction: FaceDirection,
        words: &[u32],
        origin: PeId,
        via: Option<PeId>,
        hops: u32,
    ) {
        let slot = self.recv[direction.ordinal()]
            .as_mut()
            .unwrap_or_else(|| panic!("PE {:?} has no {direction:?} neighbor", self.id));
        debug_assert!(!slot.filled, "duplicate delivery for {direction:?}");
        debug_assert_eq!(words.len(), 2 * self.nz);
        for z in 0..self.nz {
            slot.pressure[z] = f32::from_bits(words[z]);
            slot.elevation[z] = f32::from_bits(words[self.nz + z]);
        }
        slot.origin = origin;
        slot.via = via;
        slot.hops = hops;
        slot.filled = true;
        self.counters.traffic.words_received += words.len() as u64;
        self.counters.traffic.hops_total += hops as u64;
    }

    /// Partial fluxes of every cell in the column against the neighbor
    /// column in `direction`, using the cached own densities and a fresh
    /// density per received neighbor value.
    fn compute_face_column(&mut self, direction: FaceDirection, props: &FluidProps) {
        let d = direction.ordinal();
        let slot = self.recv[d].as_ref().expect("slot exists for computed face");
        let ups = self.htrans[d].as_ref().expect("trans view exists");
        let flux = self.hflux[d].as_mut().expect("flux slot exists");
        let mut flux_evals = 0u64;
        let mut density_evals = 0u64;
        for z in 0..self.nz {
            let k = CellState::new(self.pressure[z], self.elevation[z]);
            let l = CellState::new(slot.pressure[z], slot.elevation[z]);
            let rho_l = fluid_density(l.p, props);
            density_evals += 1;
            flux[z] = face_flux_with_densities(ups[z], k, l, self.density[z], rho_l, props);
            flux_evals += 1;
        }
        self.counters.compute.flux_evals += flux_evals;
        self.counters.compute.density_evals += density_evals;
    }

    /// Vertical fluxes (column-internal, no fabric traffic) and the final
    /// canonical-order accumulation into the residual column.
    pub(crate) fn finish_residual(&mut self, props: &FluidProps, comm_only: bool) {
        if comm_only {
            return;
        }
        for z in 1..self.nz {
            let k = CellState::new(self.pressure[z], self.elevation[z]);
            let l = CellState::new(self.pressure[z - 1], self.elevation[z - 1]);
            self.zneg_flux[z] = face_flux_with_densities(
                self.vtrans[z - 1],
                k,
                l,
                self.density[z],
                self.density[z - 1],
                props,
            );
        }
        for z in 0..self.nz.saturating_sub(1) {
            let k = CellState::new(self.pressure[z], self.elevation[z]);
            let l = CellState::new(self.pressure[z + 1], self.elevation[z + 1]);
            self.zpos_flux[z] = face_flux_with_densities(
                self.vtrans[z],
                k,
                l,
                self.density[z],
                self.density[z + 1],
                props,
            );
        }
        self.counters.compute.flux_evals += 2 * (self.nz.saturating_sub(1)) as u64;

        for z in 0..self.nz {
            let mut r = 0.0f32;
            for direction in FaceDirection::ALL {
                match direction {
                    FaceDirection::ZNeg => {
                        if z > 0 {
                            r += self.zneg_flux[z];
                        }
                    }
                    FaceDirection::ZPos => {
                        if z + 1 < self.nz {
                            r += self.zpos_flux[z];
                        }
                    }
                    _ => {
                        if let Some(flux) = &self.hflux[direction.ordinal()] {
                            r += flux[z];
                        }
                    }
                }
            }
            self.residual[z] = r;
        }
    }

    /// First in-bounds cardinal direction still waiting on a block.
    pub(crate) fn missing_cardinal(&self) -> Option<FaceDirection> {
        CARDINAL.into_iter().find(|d| self.waiting_on(*d))
    }

    /// First in-bounds diagonal direction still waiting on a block.
    pub(crate) fn missing_diagonal(&self) -> Option<FaceDirection> {
        use FaceDirection::*;
        [DiagNegNeg, DiagPosNeg, DiagNegPos, DiagPosPos]
            .into_iter()
            .find(|d| self.waiting_on(*d))
    }

    fn waiting_on(&self, direction: FaceDirection) -> bool {
        match &self.recv[direction.ordinal()] {
            Some(slot) => !slot.filled,
            None => false,
        }
    }

    /// Bytes of column state this PE keeps resident.
    pub fn memory_bytes(&self) -> usize {
        let f32s = self.pressure.len()
            + self.elevation.len()
            + self.density.len()
            + self.residual.len()
            + self.htrans.iter().flatten().map(Vec::len).sum::<usize>()
            + self.vtrans.len()
            + self
                .recv
                .iter()
                .flatten()
                .map(|s| s.pressure.len() + s.elevation.len())
                .sum::<usize>()
            + self.hflux.iter().flatten().map(Vec::len).sum::<usize>()
            + self.zneg_flux.len()
            + self.zpos_flux.len();
        f32s * 4
    }
}

/// Maps a (-1|1, -1|1) origin offset to the diagonal direction slot.
fn diag_direction(dx: isize, dy: isize) -> FaceDirection {
    match (dx, dy) {
        (-1, -1) => FaceDirection::DiagNegNeg,
        (1, -1) => FaceDirection::DiagPosNeg,
        (-1, 1) => FaceDirection::DiagNegPos,
        (1, 1) => FaceDirection::DiagPosPos,
        _ => panic!("diagonal payload origin offset ({dx}, {dy}) is not diagonal"),
    }
}
