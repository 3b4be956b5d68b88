//! Message-level simulator of a 2-D fabric of processing elements.
//!
//! One PE per (x, y) column of the mesh. Each application of the kernel
//! runs four phases, separated by barriers:
//!
//! 1. **Load** — every PE takes its pressure column and caches densities.
//! 2. **Cardinal exchange** — two steps. In each step the PEs whose router
//!    is in the sending position broadcast their column block (`2 * nz`
//!    words: pressures then elevations) on all in-bounds links, then issue
//!    router-switch commands that swap the roles; the other half receives,
//!    storing each block and computing the partial fluxes for that face on
//!    arrival. The fabric is checkerboard-colored, so after two steps every
//!    PE has every in-bounds cardinal block and was the sender exactly once.
//! 3. **Diagonal exchange** — every PE relays each cardinal block it holds
//!    one hop onward (see [`pe::forward_direction`]), completing the
//!    two-hop corner routes; targets compute the diagonal partial fluxes on
//!    arrival. Intermediaries already used the same data for their own face,
//!    so a corner block does double duty and each diagonal payload travels
//!    exactly 2 hops.
//! 4. **Finish** — vertical fluxes locally, then per-cell accumulation of
//!    the ten partial-flux slots in canonical direction order.
//!
//! Phases are deterministic by construction: messages land in per-direction
//! slots that identify them uniquely, every PE's work reads only its own
//! state, and parallel execution over PEs cannot reorder anything
//! observable. A run with one worker is bit-identical to a run with many.

mod counters;
mod message;
mod pe;

pub use counters::{
    analytic_cardinal_words, analytic_diagonal_words, analytic_words_received,
    directed_cardinal_pairs, directed_diagonal_pairs, ComputeCounts, FabricCounters,
    MemoryReport, PeCounterSnapshot, PhaseMessages, TrafficCounts,
};
pub use message::{
    Link, Message, MessageKind, PeId, SwitchPosition, COLOR_CARDINAL_A, COLOR_CARDINAL_B,
    COLOR_DIAGONAL, COLOR_ROUTER_SWITCH,
};
pub use pe::{diagonal_intermediary, PeCounters, PeState, RecvSlot};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{
    face_in_direction, pressure_field, CellField, FaceDirection, FieldParams, Mesh, MeshDims,
};
use crate::physics::FluidProps;
use crate::solver::{digest, AppDigest};

/// Execution knobs of a fabric run.
#[derive(Debug, Clone, Copy)]
pub struct FabricConfig {
    /// Worker threads driving the PE phases. 1 runs everything on the
    /// calling thread (the debugging mode); results never depend on this.
    pub workers: usize,
    /// Skip all flux and density computation, keeping communication
    /// identical. Residuals come back all zero.
    pub comm_only: bool,
    /// Per-PE memory budget for diagnostics. Exceeding it is reported by
    /// [`Fabric::memory_report`], never an error.
    pub memory_budget_bytes: usize,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            comm_only: false,
            memory_budget_bytes: 48 * 1024,
        }
    }
}

/// Digests and counters of a multi-application fabric run.
#[derive(Debug, Clone)]
pub struct FabricRunOutcome {
    pub digests: Vec<AppDigest>,
    pub counters: FabricCounters,
    pub memory: MemoryReport,
}

/// The simulated fabric: a dense `nx * ny` grid of PEs.
pub struct Fabric {
    dims: MeshDims,
    props: FluidProps,
    config: FabricConfig,
    pes: Vec<PeState>,
    pool: Option<rayon::ThreadPool>,
    phase_messages: PhaseMessages,
}

impl Fabric {
    /// Distributes a mesh onto the fabric: PE (x, y) gets its column's
    /// elevations and the transmissibility views of every face its cells
    /// touch. Both PEs of a face hold the same coefficient.
    pub fn build(mesh: &Mesh, props: FluidProps, config: FabricConfig) -> Result<Fabric> {
        if config.workers == 0 {
            return Err(Error::InvalidParameter(
                "worker count must be at least 1".into(),
            ));
        }
        let pool = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?,
            )
        } else {
            None
        };

        let dims = mesh.dims();
        let mut pes = Vec::with_capacity(dims.nx * dims.ny);
        for py in 0..dims.ny {
            for px in 0..dims.nx {
                let elevation: Vec<f32> =
                    (0..dims.nz).map(|z| mesh.elevation().get(px, py, z)).collect();

                let mut htrans: [Option<Vec<f32>>; 8] = Default::default();
                let mut neighbors: [Option<PeId>; 8] = Default::default();
                for direction in FaceDirection::HORIZONTAL {
                    let Some(desc) = face_in_direction(dims, px, py, 0, direction) else {
                        continue;
                    };
                    neighbors[direction.ordinal()] =
                        Some(PeId::new(desc.neighbor.0, desc.neighbor.1));
                    let view: Vec<f32> = (0..dims.nz)
                        .map(|z| {
                            let desc = face_in_direction(dims, px, py, z, direction)
                                .expect("face exists on every layer");
                            mesh.transmissibility(&desc)
                        })
                        .collect();
                    htrans[direction.ordinal()] = Some(view);
                }

                let vtrans: Vec<f32> = (0..dims.nz.saturating_sub(1))
                    .map(|z| {
                        let desc = face_in_direction(dims, px, py, z, FaceDirection::ZPos)
                            .expect("vertical face exists below the top layer");
                        mesh.transmissibility(&desc)
                    })
                    .collect();

                // Checkerboard: even-parity PEs open in the sending position.
                let home = if (px + py) % 2 == 0 {
                    SwitchPosition::Sending
                } else {
                    SwitchPosition::Receiving
                };
                pes.push(PeState::new(
                    PeId::new(px, py),
                    dims.nz,
                    elevation,
                    htrans,
                    vtrans,
                    neighbors,
                    home,
                ));
            }
        }

        Ok(Fabric {
            dims,
            props,
            config,
            pes,
            pool,
            phase_messages: PhaseMessages::default(),
        })
    }

    #[inline]
    pub fn dims(&self) -> MeshDims {
        self.dims
    }

    #[inline]
    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    /// Read access to one PE, mostly for inspection in tests and reports.
    pub fn pe(&self, px: usize, py: usize) -> &PeState {
        &self.pes[px + self.dims.nx * py]
    }

    /// Runs `f` over every PE, across the worker pool when one exists.
    /// Every PE touches only its own state, so scheduling cannot affect
    /// results.
    fn each_pe<F>(pool: &Option<rayon::ThreadPool>, pes: &mut [PeState], f: F)
    where
        F: Fn(&mut PeState) + Sync + Send,
    {
        match pool {
            None => pes.iter_mut().for_each(f),
            Some(pool) => pool.install(|| pes.par_iter_mut().for_each(f)),
        }
    }

    /// Delivers every outbox message. Serial and in PE order, so inbox
    /// contents are deterministic; message counts land in the per-phase
    /// tallies.
    fn route(&mut self) {
        let nx = self.dims.nx;
        for i in 0..self.pes.len() {
            let msgs = std::mem::take(&mut self.pes[i].outbox);
            for mut msg in msgs {
                match msg.kind {
                    MessageKind::RouterSwitch { .. } => self.phase_messages.router_switch += 1,
                    MessageKind::Data(_) => match msg.color {
                        COLOR_CARDINAL_A => self.phase_messages.cardinal_step_a += 1,
                        COLOR_CARDINAL_B => self.phase_messages.cardinal_step_b += 1,
                        _ => self.phase_messages.diagonal += 1,
                    },
                }
                if let Link::Ramp = msg.link {
                    self.pes[i].inbox.push(msg);
                    continue;
                }
                let (dx, dy) = msg.link.offset();
                let px = self.pes[i].id().px.checked_add_signed(dx);
                let py = self.pes[i].id().py.checked_add_signed(dy);
                let (px, py) = match (px, py) {
                    (Some(px), Some(py)) if px < nx && py < self.dims.ny => (px, py),
                    _ => unreachable!("PEs never emit toward absent neighbors"),
                };
                msg.hops += 1;
                self.pes[px + nx * py].inbox.push(msg);
            }
        }
    }

    /// Loads the analytic pressure field for `app_index` into the PEs.
    pub fn load_application(&mut self, app_index: u32, params: &FieldParams) -> Result<()> {
        let field = pressure_field(self.dims, app_index, params)?;
        self.load_pressure(&field)
    }

    /// Loads an explicit pressure field into the PEs.
    pub fn load_pressure(&mut self, pressure: &CellField) -> Result<()> {
        if pressure.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: pressure.dims(),
            });
        }
        let props = self.props;
        let comm_only = self.config.comm_only;
        let dims = self.dims;
        Self::each_pe(&self.pool, &mut self.pes, |pe| {
            let id = pe.id();
            let column: Vec<f32> = (0..dims.nz).map(|z| pressure.get(id.px, id.py, z)).collect();
            pe.load_application(&column, &props, comm_only);
        });
        Ok(())
    }

    /// The two cardinal broadcast steps, with a completeness check: a PE
    /// still waiting on an in-bounds cardinal block afterwards means the
    /// protocol itself is broken, reported as a deadlock naming PE and
    /// color.
    pub fn cardinal_exchange(&mut self) -> Result<()> {
        for color in [COLOR_CARDINAL_A, COLOR_CARDINAL_B] {
            let props = self.props;
            let comm_only = self.config.comm_only;
            Self::each_pe(&self.pool, &mut self.pes, |pe| pe.emit_cardinal(color));
            self.route();
            Self::each_pe(&self.pool, &mut self.pes, |pe| {
                pe.process_inbox(&props, comm_only)
            });
        }
        for pe in &self.pes {
            if let Some(direction) = pe.missing_cardinal() {
                let neighbor = pe.neighbor(direction).expect("missing implies in-bounds");
                // The sender that never delivered is identified by the step
                // in which its parity was scheduled to broadcast.
                let color = if (neighbor.px + neighbor.py) % 2 == 0 {
                    COLOR_CARDINAL_A
                } else {
                    COLOR_CARDINAL_B
                };
                return Err(Error::Deadlock {
                    px: pe.id().px,
                    py: pe.id().py,
                    color,
                    what: cardinal_label(direction),
                });
            }
        }
        Ok(())
    }

    /// The forwarding phase that completes every two-hop diagonal route,
    /// with the analogous completeness check.
    pub fn diagonal_exchange(&mut self) -> Result<()> {
        let props = self.props;
        let comm_only = self.config.comm_only;
        Self::each_pe(&self.pool, &mut self.pes, |pe| pe.emit_diagonal_forwards());
        self.route();
        Self::each_pe(&self.pool, &mut self.pes, |pe| {
            pe.process_inbox(&props, comm_only)
        });
        for pe in &self.pes {
            if let Some(direction) = pe.missing_diagonal() {
                return Err(Error::Deadlock {
                    px: pe.id().px,
                    py: pe.id().py,
                    color: COLOR_DIAGONAL,
                    what: diagonal_label(direction),
                });
            }
        }
        Ok(())
    }

    /// Runs one full application and gathers the residual field.
    pub fn run_application(&mut self, app_index: u32, params: &FieldParams) -> Result<CellField> {
        self.load_application(app_index, params)?;
        self.cardinal_exchange()?;
        self.diagonal_exchange()?;
        let props = self.props;
        let comm_only = self.config.comm_only;
        Self::each_pe(&self.pool, &mut self.pes, |pe| {
            pe.finish_residual(&props, comm_only)
        });
        Ok(self.gather_residual())
    }

    /// Runs `n_apps` applications against the analytic pressure fields and
    /// digests every gathered residual.
    pub fn run_applications(
        &mut self,
        n_apps: u32,
        params: &FieldParams,
    ) -> Result<FabricRunOutcome> {
        let mut digests = Vec::with_capacity(n_apps as usize);
        for app_index in 0..n_apps {
            let residual = self.run_application(app_index, params)?;
            digests.push(digest(&residual, app_index));
        }
        Ok(FabricRunOutcome {
            digests,
            counters: self.counters(),
            memory: self.memory_report(),
        })
    }

    /// Assembles the per-PE residual columns into a cell field.
    pub fn gather_residual(&self) -> CellField {
        let mut field = CellField::zeros(self.dims);
        for pe in &self.pes {
            let id = pe.id();
            for (z, &r) in pe.residual().iter().enumerate() {
                field.set(id.px, id.py, z, r);
            }
        }
        field
    }

    /// Counter snapshot: per-PE rows plus their aggregate.
    pub fn counters(&self) -> FabricCounters {
        let mut traffic = TrafficCounts::default();
        let mut compute = ComputeCounts::default();
        let per_pe: Vec<PeCounterSnapshot> = self
            .pes
            .iter()
            .map(|pe| {
                let c = pe.counters();
                traffic.add(&c.traffic);
                compute.add(&c.compute);
                PeCounterSnapshot {
                    px: pe.id().px,
                    py: pe.id().py,
                    traffic: c.traffic,
                    compute: c.compute,
                    steps_as_sender: c.steps_as_sender,
                    steps_as_receiver: c.steps_as_receiver,
                }
            })
            .collect();
        FabricCounters {
            traffic,
            compute,
            messages_per_phase: self.phase_messages,
            per_pe,
        }
    }

    /// Per-PE memory footprint against the configured budget.
    pub fn memory_report(&self) -> MemoryReport {
        let budget = self.config.memory_budget_bytes;
        let mut max_pe = 0usize;
        let mut min_pe = usize::MAX;
        let mut total = 0usize;
        let mut over = 0usize;
        for pe in &self.pes {
            let bytes = pe.memory_bytes();
            max_pe = max_pe.max(bytes);
            min_pe = min_pe.min(bytes);
            total += bytes;
            if bytes > budget {
                over += 1;
            }
        }
        MemoryReport {
            budget_bytes: budget,
            max_pe_bytes: max_pe,
            min_pe_bytes: if self.pes.is_empty() { 0 } else { min_pe },
            total_bytes: total,
            pes_over_budget: over,
        }
    }
}

fn cardinal_label(direction: FaceDirection) -> &'static str {
    match direction {
        FaceDirection::XNeg => "cardinal block from the -x neighbor",
        FaceDirection::XPos => "cardinal block from the +x neighbor",
        FaceDirection::YNeg => "cardinal block from the -y neighbor",
        FaceDirection::YPos => "cardinal block from the +y neighbor",
        _ => unreachable!("cardinal label for {direction:?}"),
    }
}

fn diagonal_label(direction: FaceDirection) -> &'static str {
    match direction {
        FaceDirection::DiagNegNeg => "diagonal block from the (-x,-y) neighbor",
        FaceDirection::DiagPosNeg => "diagonal block from the (+x,-y) neighbor",
        FaceDirection::DiagNegPos => "diagonal block from the (-x,+y) neighbor",
        FaceDirection::DiagPosPos => "diagonal block from the (+x,+y) neighbor",
        _ => unreachable!("diagonal label for {direction:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_synthetic, GenParams};
    use crate::solver;

    fn mesh(nx: usize, ny: usize, nz: usize) -> Mesh {
        generate_synthetic(MeshDims::new(nx, ny, nz).unwrap(), &GenParams::default()).unwrap()
    }

    fn fabric(nx: usize, ny: usize, nz: usize) -> Fabric {
        Fabric::build(&mesh(nx, ny, nz), FluidProps::water(), FabricConfig::default()).unwrap()
    }

    #[test]
    fn build_distributes_transmissibility_views() {
        let m = mesh(3, 3, 4);
        let f = Fabric::build(&m, FluidProps::water(), FabricConfig::default()).unwrap();
        // The center PE sees all eight in-plane neighbors; a corner sees
        // three (+x, +y, and the (+x,+y) diagonal).
        let center = f.pe(1, 1);
        let corner = f.pe(0, 0);
        let horiz = |pe: &PeState| {
            FaceDirection::HORIZONTAL
                .iter()
                .filter(|d| pe.neighbor(**d).is_some())
                .count()
        };
        assert_eq!(horiz(center), 8);
        assert_eq!(horiz(corner), 3);
        // Spot-check one view value against the mesh storage.
        let desc = face_in_direction(m.dims(), 1, 1, 2, FaceDirection::XPos).unwrap();
        let expected = m.transmissibility(&desc);
        // The view is private; verify it through behavior instead: a run is
        // checked bit-for-bit against the reference solver below, which
        // exercises every view. Here just confirm the neighbor map.
        assert_eq!(center.neighbor(FaceDirection::XPos), Some(PeId::new(2, 1)));
        assert!(expected > 0.0);
    }

    #[test]
    fn workers_zero_is_rejected() {
        let m = mesh(2, 2, 2);
        let config = FabricConfig {
            workers: 0,
            ..FabricConfig::default()
        };
        assert!(Fabric::build(&m, FluidProps::water(), config).is_err());
    }

    #[test]
    fn cardinal_exchange_fills_every_in_bounds_slot_and_restores_roles() {
        let mut f = fabric(3, 3, 2);
        f.load_application(0, &FieldParams::default()).unwrap();
        f.cardinal_exchange().unwrap();
        for py in 0..3 {
            for px in 0..3 {
                let pe = f.pe(px, py);
                for d in [
                    FaceDirection::XNeg,
                    FaceDirection::XPos,
                    FaceDirection::YNeg,
                    FaceDirection::YPos,
                ] {
                    if pe.neighbor(d).is_some() {
                        let slot = pe.recv_slot(d).unwrap();
                        assert!(slot.filled, "PE ({px},{py}) missing {d:?}");
                        assert_eq!(slot.hops, 1);
                        assert_eq!(slot.via, None);
                        assert_eq!(slot.origin, pe.neighbor(d).unwrap());
                    }
                }
                // Each PE took each role exactly once...
                assert_eq!(pe.counters().steps_as_sender, 1);
                assert_eq!(pe.counters().steps_as_receiver, 1);
                // ...and the switch commands restored the home position.
                let home = if (px + py) % 2 == 0 {
                    SwitchPosition::Sending
                } else {
                    SwitchPosition::Receiving
                };
                assert_eq!(pe.router_position(), home);
            }
        }
    }

    #[test]
    fn diagonal_payloads_travel_two_hops_via_clockwise_intermediaries() {
        let mut f = fabric(3, 3, 2);
        f.load_application(0, &FieldParams::default()).unwrap();
        f.cardinal_exchange().unwrap();
        f.diagonal_exchange().unwrap();
        for py in 0..3 {
            for px in 0..3 {
                let pe = f.pe(px, py);
                for d in [
                    FaceDirection::DiagNegNeg,
                    FaceDirection::DiagPosNeg,
                    FaceDirection::DiagNegPos,
                    FaceDirection::DiagPosPos,
                ] {
                    if pe.neighbor(d).is_some() {
                        let slot = pe.recv_slot(d).unwrap();
                        assert!(slot.filled, "PE ({px},{py}) missing {d:?}");
                        assert_eq!(slot.hops, 2);
                        assert_eq!(slot.origin, pe.neighbor(d).unwrap());
                        assert_eq!(
                            slot.via,
                            Some(diagonal_intermediary(pe.id(), d)),
                            "PE ({px},{py}) direction {d:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn corner_pe_receives_exactly_one_diagonal_payload() {
        let mut f = fabric(3, 3, 1);
        f.load_application(0, &FieldParams::default()).unwrap();
        f.cardinal_exchange().unwrap();
        f.diagonal_exchange().unwrap();
        let corner = f.pe(0, 0);
        let filled: Vec<FaceDirection> = [
            FaceDirection::DiagNegNeg,
            FaceDirection::DiagPosNeg,
            FaceDirection::DiagNegPos,
            FaceDirection::DiagPosPos,
        ]
        .into_iter()
        .filter(|&d| corner.recv_slot(d).is_some_and(|s| s.filled))
        .collect();
        assert_eq!(filled, vec![FaceDirection::DiagPosPos]);
        let slot = corner.recv_slot(FaceDirection::DiagPosPos).unwrap();
        assert_eq!(slot.origin, PeId::new(1, 1));
        // The (+x,+y) payload relays through the +y cardinal neighbor.
        assert_eq!(slot.via, Some(PeId::new(0, 1)));
    }

    #[test]
    fn skipping_the_cardinal_phase_is_reported_as_deadlock() {
        let mut f = fabric(3, 3, 2);
        f.load_application(0, &FieldParams::default()).unwrap();
        // Diagonal forwarding without any cardinal data: intermediaries hold
        // nothing, so every diagonal wait must trip the deadlock check.
        let err = f.diagonal_exchange().unwrap_err();
        match err {
            Error::Deadlock { color, .. } => assert_eq!(color, COLOR_DIAGONAL),
            other => panic!("expected deadlock, got {other:?}"),
        }
    }

    #[test]
    fn fabric_matches_reference_solver_bit_for_bit() {
        let m = mesh(4, 3, 5);
        let params = FieldParams::default();
        let props = FluidProps::water();
        let mut f = Fabric::build(&m, props, FabricConfig::default()).unwrap();
        for app in 0..3 {
            let got = f.run_application(app, &params).unwrap();
            let pressure = pressure_field(m.dims(), app, &params).unwrap();
            let expected = solver::apply(&m, &pressure, &props).unwrap();
            assert_eq!(
                solver::digest(&got, app).checksum,
                solver::digest(&expected, app).checksum,
                "application {app}"
            );
        }
    }

    #[test]
    fn single_column_fabric_moves_no_words() {
        let m = mesh(1, 1, 6);
        let params = FieldParams::default();
        let props = FluidProps::water();
        let mut f = Fabric::build(&m, props, FabricConfig::default()).unwrap();
        let outcome = f.run_applications(2, &params).unwrap();
        assert_eq!(outcome.counters.traffic.words_sent, 0);
        assert_eq!(outcome.counters.traffic.words_received, 0);
        assert_eq!(outcome.counters.traffic.words_forwarded, 0);
        // The residual still matches the oracle: pure vertical flow.
        let pressure = pressure_field(m.dims(), 1, &params).unwrap();
        let expected = solver::digest(&solver::apply(&m, &pressure, &props).unwrap(), 1);
        assert_eq!(outcome.digests[1].checksum, expected.checksum);
    }

    #[test]
    fn single_row_fabric_uses_only_x_traffic() {
        let m = mesh(4, 1, 3);
        let mut f = Fabric::build(&m, FluidProps::water(), FabricConfig::default()).unwrap();
        let outcome = f.run_applications(1, &FieldParams::default()).unwrap();
        assert_eq!(
            outcome.counters.traffic.words_received,
            analytic_cardinal_words(m.dims())
        );
        assert_eq!(outcome.counters.messages_per_phase.diagonal, 0);
        let end = f.pe(3, 0);
        assert!(end.recv_slot(FaceDirection::YNeg).is_none());
        assert!(end.recv_slot(FaceDirection::YPos).is_none());
        assert!(end.recv_slot(FaceDirection::XNeg).unwrap().filled);
    }

    #[test]
    fn counters_match_the_analytic_word_law() {
        for (nx, ny, nz) in [(2, 2, 1), (3, 4, 2), (5, 3, 3), (1, 5, 2)] {
            let m = mesh(nx, ny, nz);
            let mut f = Fabric::build(&m, FluidProps::water(), FabricConfig::default()).unwrap();
            let outcome = f.run_applications(1, &FieldParams::default()).unwrap();
            let t = &outcome.counters.traffic;
            assert_eq!(t.words_sent, analytic_cardinal_words(m.dims()), "{nx}x{ny}x{nz}");
            assert_eq!(
                t.words_forwarded,
                analytic_diagonal_words(m.dims()),
                "{nx}x{ny}x{nz}"
            );
            assert_eq!(
                t.words_received,
                analytic_words_received(m.dims()),
                "{nx}x{ny}x{nz}"
            );
            assert!(outcome.counters.words_conserved());
        }
    }

    #[test]
    fn counters_are_linear_in_application_count() {
        let m = mesh(4, 4, 2);
        let params = FieldParams::default();
        let props = FluidProps::water();
        let once = Fabric::build(&m, props, FabricConfig::default())
            .unwrap()
            .run_applications(1, &params)
            .unwrap();
        let thrice = Fabric::build(&m, props, FabricConfig::default())
            .unwrap()
            .run_applications(3, &params)
            .unwrap();
        let scale = |t: &TrafficCounts, k: u64| TrafficCounts {
            words_sent: t.words_sent * k,
            words_received: t.words_received * k,
            words_forwarded: t.words_forwarded * k,
            hops_total: t.hops_total * k,
            control_messages: t.control_messages * k,
        };
        assert_eq!(thrice.counters.traffic, scale(&once.counters.traffic, 3));
        assert_eq!(
            thrice.counters.compute.flux_evals,
            3 * once.counters.compute.flux_evals
        );
    }

    #[test]
    fn comm_only_run_keeps_traffic_and_drops_compute() {
        let m = mesh(4, 3, 3);
        let params = FieldParams::default();
        let props = FluidProps::water();
        let full = Fabric::build(&m, props, FabricConfig::default())
            .unwrap()
            .run_applications(2, &params)
            .unwrap();
        let comm = Fabric::build(
            &m,
            props,
            FabricConfig {
                comm_only: true,
                ..FabricConfig::default()
            },
        )
        .unwrap()
        .run_applications(2, &params)
        .unwrap();
        assert_eq!(comm.counters.traffic, full.counters.traffic);
        assert_eq!(comm.counters.messages_per_phase, full.counters.messages_per_phase);
        assert_eq!(comm.counters.compute, ComputeCounts::default());
        assert!(full.counters.compute.flux_evals > 0);
        // Residuals are all zero in comm-only mode.
        assert_eq!(comm.digests[0].l2, 0.0);
    }

    #[test]
    fn interior_pe_receives_sixteen_words_per_z_cell() {
        let m = mesh(3, 3, 4);
        let mut f = Fabric::build(&m, FluidProps::water(), FabricConfig::default()).unwrap();
        f.run_applications(1, &FieldParams::default()).unwrap();
        let center = f.pe(1, 1).counters();
        assert_eq!(center.traffic.words_received, 16 * 4);
    }

    #[test]
    fn worker_pool_does_not_change_results() {
        let m = mesh(5, 4, 3);
        let params = FieldParams::default();
        let props = FluidProps::water();
        let serial = Fabric::build(&m, props, FabricConfig::default())
            .unwrap()
            .run_applications(2, &params)
            .unwrap();
        let pooled = Fabric::build(
            &m,
            props,
            FabricConfig {
                workers: 4,
                ..FabricConfig::default()
            },
        )
        .unwrap()
        .run_applications(2, &params)
        .unwrap();
        for (a, b) in serial.digests.iter().zip(&pooled.digests) {
            assert_eq!(a.checksum, b.checksum);
        }
        assert_eq!(serial.counters.traffic, pooled.counters.traffic);
    }

    #[test]
    fn memory_report_flags_only_overrun_pes() {
        let m = mesh(3, 3, 246);
        let f = Fabric::build(&m, FluidProps::water(), FabricConfig::default()).unwrap();
        let report = f.memory_report();
        // A 246-cell column fits the default 48 KiB budget.
        assert!(report.max_pe_bytes <= report.budget_bytes, "{report:?}");
        assert_eq!(report.pes_over_budget, 0);

        let tight = Fabric::build(
            &m,
            FluidProps::water(),
            FabricConfig {
                memory_budget_bytes: 1024,
                ..FabricConfig::default()
            },
        )
        .unwrap();
        let report = tight.memory_report();
        assert_eq!(report.pes_over_budget, 9);
        // Diagnostic only: the run itself still works.
        let mut tight = tight;
        assert!(tight.run_application(0, &FieldParams::default()).is_ok());
    }
}
