//! Report shapes and their JSON/CSV rendering.
//!
//! JSON is the canonical format: field order is fixed by the struct
//! definitions below, so byte-identical inputs give byte-identical reports
//! — except for wall-clock measurements, which are confined to the
//! explicitly labeled `timings` objects. CSV is a lossy convenience
//! projection of the per-application and per-size rows.

use serde::Serialize;

use fvsim_core::fabric::{ComputeCounts, MemoryReport, PhaseMessages, TrafficCounts};
use fvsim_core::mesh::{FieldParams, GenParams, MeshDims};
use fvsim_core::metrics::{KernelRoofline, MachineModel, OpCensus};
use fvsim_core::physics::FluidProps;
use fvsim_core::solver::AppDigest;

/// The resolved configuration a command actually ran with.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub dims: MeshDims,
    pub cells: u64,
    pub n_apps: u32,
    pub mode: &'static str,
    pub workers: usize,
    pub mesh_file: Option<String>,
    pub fluid: FluidProps,
    pub generator: GenParams,
    pub field: FieldParams,
    pub tolerance: f64,
}

/// Aggregate fabric counters (per-PE rows stay internal).
#[derive(Debug, Serialize)]
pub struct CountersBlock {
    pub traffic: TrafficCounts,
    pub compute: ComputeCounts,
    pub messages_per_phase: PhaseMessages,
    pub words_conserved: bool,
}

/// The closed-form kernel metrics; everything here is deterministic.
#[derive(Debug, Serialize)]
pub struct MetricsBlock {
    pub census: OpCensus,
    pub flops_per_cell: u64,
    pub memory_accesses_per_cell: u64,
    pub memory_traffic_bytes_per_cell: u64,
    pub fabric_words_per_cell: u64,
    pub fabric_traffic_bytes_per_cell: u64,
    pub memory_intensity: f64,
    pub fabric_intensity: f64,
    pub machine: Option<MachineModel>,
    pub roofline: Option<KernelRoofline>,
}

impl MetricsBlock {
    pub fn new(census: OpCensus, machine: Option<MachineModel>) -> MetricsBlock {
        let roofline = machine
            .as_ref()
            .map(|m| fvsim_core::metrics::kernel_roofline(&census, m));
        MetricsBlock {
            census,
            flops_per_cell: census.flops(),
            memory_accesses_per_cell: census.memory_accesses(),
            memory_traffic_bytes_per_cell: census.memory_traffic_bytes(),
            fabric_words_per_cell: census.fabric_words(),
            fabric_traffic_bytes_per_cell: census.fabric_traffic_bytes(),
            memory_intensity: census.memory_intensity(),
            fabric_intensity: census.fabric_intensity(),
            machine,
            roofline,
        }
    }
}

/// Simulator-vs-reference comparison over every application.
#[derive(Debug, Serialize)]
pub struct Comparison {
    pub apps_compared: u32,
    pub bit_exact: bool,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    pub tolerance: f64,
    pub verdict: &'static str,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.verdict != "mismatch"
    }
}

/// Wall-clock measurements and their derivatives. Everything in this
/// struct varies run to run; nothing outside it does.
#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub reference_seconds: Option<f64>,
    pub simulate_seconds: Option<f64>,
    pub cells_per_sec: Option<f64>,
    pub flops_per_sec: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub digests: Vec<AppDigest>,
    pub counters: Option<CountersBlock>,
    pub memory: Option<MemoryReport>,
    pub metrics: MetricsBlock,
    pub comparison: Option<Comparison>,
    pub timings: Timings,
}

/// One grid size of a scaling sweep.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub cells: u64,
    pub n_apps: u32,
    pub traffic: TrafficCounts,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub n_apps: u32,
    pub workers: usize,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub metrics: MetricsBlock,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report structs always serialize");
    s.push('\n');
    s
}

/// CSV projection of a run report: the per-application digests.
pub fn run_report_csv(report: &RunReport) -> String {
    let mut out = String::from("app_index,sum,l2,checksum\n");
    for d in &report.digests {
        out.push_str(&format!(
            "{},{},{},{:016x}\n",
            d.app_index, d.sum, d.l2, d.checksum
        ));
    }
    out
}

/// CSV projection of a sweep: one row per grid size. The `seconds` and
/// `cells_per_sec` columns are wall-clock measurements.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "nx,ny,nz,cells,n_apps,words_sent,words_forwarded,words_received,hops_total,\
         control_messages,seconds,cells_per_sec\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.nx,
            r.ny,
            r.nz,
            r.cells,
            r.n_apps,
            r.traffic.words_sent,
            r.traffic.words_forwarded,
            r.traffic.words_received,
            r.traffic.hops_total,
            r.traffic.control_messages,
            r.timings.simulate_seconds.unwrap_or(0.0),
            r.timings.cells_per_sec.unwrap_or(0.0),
        ));
    }
    out
}

/// CSV projection of the metrics block: key,value pairs.
pub fn metrics_csv(m: &MetricsBlock) -> String {
    let mut out = String::from("key,value\n");
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k},{v}\n"));
    kv("fmul", m.census.fmul.to_string());
    kv("fsub", m.census.fsub.to_string());
    kv("fneg", m.census.fneg.to_string());
    kv("fadd", m.census.fadd.to_string());
    kv("fma", m.census.fma.to_string());
    kv("fmov", m.census.fmov.to_string());
    kv("flops_per_cell", m.flops_per_cell.to_string());
    kv("memory_accesses_per_cell", m.memory_accesses_per_cell.to_string());
    kv(
        "memory_traffic_bytes_per_cell",
        m.memory_traffic_bytes_per_cell.to_string(),
    );
    kv("fabric_words_per_cell", m.fabric_words_per_cell.to_string());
    kv(
        "fabric_traffic_bytes_per_cell",
        m.fabric_traffic_bytes_per_cell.to_string(),
    );
    kv("memory_intensity", m.memory_intensity.to_string());
    kv("fabric_intensity", m.fabric_intensity.to_string());
    if let (Some(machine), Some(roofline)) = (&m.machine, &m.roofline) {
        kv("machine", machine.name.clone());
        kv("attainable_flops", roofline.attainable_flops.to_string());
        kv(
            "memory_bound",
            format!("{:?}", roofline.memory.bound).to_lowercase(),
        );
        kv(
            "fabric_bound",
            format!("{:?}", roofline.fabric.bound).to_lowercase(),
        );
    }
    out
}
