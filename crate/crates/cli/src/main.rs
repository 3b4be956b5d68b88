//! `fvsim` — batch driver for the column-fabric kernel suite.
//!
//! Subcommands: `generate` writes synthetic meshes, `run` executes the
//! reference solver and/or the fabric simulator, `compare` is `run` pinned
//! to checking mode, `scaling-sweep` tabulates counters across grid sizes,
//! and `metrics` prints the closed-form kernel metrics.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 file I/O,
//! 4 simulator/reference mismatch, 5 fabric deadlock.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use fvsim_core::fabric::{Fabric, FabricConfig};
use fvsim_core::mesh::{
    generate_synthetic, pressure_field, FieldParams, GenParams, Mesh, MeshDims,
};
use fvsim_core::metrics::{MachineModel, OpCensus};
use fvsim_core::physics::FluidProps;
use fvsim_core::solver::{self, AppDigest};
use fvsim_core::{format, Error};

use report::{
    metrics_csv, run_report_csv, sweep_csv, to_json, Comparison, ConfigEcho, CountersBlock,
    MetricsBlock, MetricsReport, RunReport, SweepReport, SweepRow, Timings,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_MISMATCH: u8 = 4;
const EXIT_DEADLOCK: u8 = 5;

#[derive(Parser)]
#[command(
    name = "fvsim",
    version,
    about = "Finite-volume column kernel: reference solver, fabric simulator, metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic mesh file (deterministic for fixed parameters)
    Generate(GenerateArgs),
    /// Run the kernel in the selected mode and emit a report
    Run(RunArgs),
    /// Run simulator against the reference solver and verify equality
    Compare(CompareArgs),
    /// Run the simulator across grid sizes and tabulate traffic counters
    ScalingSweep(SweepArgs),
    /// Print the per-cell operation census, intensities, and roofline
    Metrics(MetricsArgs),
}

/// Where the mesh comes from and which analytic parameters apply.
#[derive(Args)]
struct MeshSource {
    /// Mesh file to load; omit to generate one in-process from --dims
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Synthetic mesh dimensions (ignored when --mesh is given)
    #[arg(long, value_name = "NX,NY,NZ", default_value = "32,32,8", value_parser = parse_dims)]
    dims: MeshDims,
    /// JSON file overriding generator/field/fluid parameters
    #[arg(long, value_name = "FILE")]
    seed_params: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Report destination; omit for stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Destination mesh file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Kernel applications to run
    #[arg(long, default_value_t = 100)]
    apps: u32,
    /// Execution mode
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    /// Fabric worker threads (default: $FVSIM_WORKERS, then 1)
    #[arg(long)]
    workers: Option<usize>,
    /// Machine model file enabling the roofline block
    #[arg(long, value_name = "FILE")]
    machine: Option<PathBuf>,
    /// Max absolute residual difference tolerated in checking modes
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Kernel applications to compare
    #[arg(long, default_value_t = 100)]
    apps: u32,
    /// Fabric worker threads (default: $FVSIM_WORKERS, then 1)
    #[arg(long)]
    workers: Option<usize>,
    /// Max absolute residual difference tolerated
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid sizes to sweep, e.g. 8x8,16x16,32x32
    #[arg(long, value_name = "NXxNY,...", value_parser = parse_sizes)]
    sizes: Sizes,
    /// Column height shared by every size
    #[arg(long, default_value_t = 8)]
    nz: usize,
    /// Kernel applications per size
    #[arg(long, default_value_t = 1)]
    apps: u32,
    /// Fabric worker threads (default: $FVSIM_WORKERS, then 1)
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file overriding generator/field/fluid parameters
    #[arg(long, value_name = "FILE")]
    seed_params: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MetricsArgs {
    /// Machine model file enabling the roofline block
    #[arg(long, value_name = "FILE")]
    machine: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Reference solver only
    Reference,
    /// Fabric simulator only
    Simulate,
    /// Both engines, compared per application
    Both,
    /// Fabric simulator with arithmetic disabled (counters only)
    CommOnly,
}

impl Mode {
    fn label(self) -> &'static str {
        match self {
            Mode::Reference => "reference",
            Mode::Simulate => "simulate",
            Mode::Both => "both",
            Mode::CommOnly => "comm-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
struct Sizes(Vec<(usize, usize)>);

fn parse_dims(s: &str) -> Result<MeshDims, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected NX,NY,NZ, got {s:?}"));
    }
    let dim = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad dimension {p:?}"));
    MeshDims::new(dim(parts[0])?, dim(parts[1])?, dim(parts[2])?).map_err(|e| e.to_string())
}

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let mut sizes = Vec::new();
    for entry in s.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let Some((nx, ny)) = entry.split_once(['x', 'X']) else {
            return Err(format!("expected NXxNY, got {entry:?}"));
        };
        let nx = nx.trim().parse::<usize>().map_err(|_| format!("bad size {entry:?}"))?;
        let ny = ny.trim().parse::<usize>().map_err(|_| format!("bad size {entry:?}"))?;
        if nx == 0 || ny == 0 {
            return Err(format!("sizes must be positive, got {entry:?}"));
        }
        sizes.push((nx, ny));
    }
    if sizes.is_empty() {
        return Err("size list is empty".into());
    }
    Ok(Sizes(sizes))
}

/// Parameter overrides loaded from `--seed-params`. Every section and
/// every field is optional; omissions keep the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SeedParams {
    generator: GenParams,
    field: FieldParams,
    fluid: FluidProps,
}

struct Inputs {
    mesh: Mesh,
    mesh_file: Option<String>,
    generator: GenParams,
    field: FieldParams,
    props: FluidProps,
}

fn load_seed_params(path: Option<&Path>) -> Result<SeedParams, Error> {
    let Some(path) = path else {
        return Ok(SeedParams::default());
    };
    let text = std::fs::read_to_string(path)?;
    let params: SeedParams = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    // Re-validate the fluid constants; serde only checks the shape.
    FluidProps::new(
        params.fluid.rho_ref,
        params.fluid.p_ref,
        params.fluid.c_f,
        params.fluid.mu,
        params.fluid.g,
    )?;
    Ok(params)
}

fn load_inputs(source: &MeshSource) -> Result<Inputs, Error> {
    let params = load_seed_params(source.seed_params.as_deref())?;
    let (mesh, mesh_file) = match &source.mesh {
        Some(path) => (
            format::load_mesh_file(path)?,
            Some(path.display().to_string()),
        ),
        None => (generate_synthetic(source.dims, &params.generator)?, None),
    };
    Ok(Inputs {
        mesh,
        mesh_file,
        generator: params.generator,
        field: params.field,
        props: params.fluid,
    })
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("FVSIM_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(1)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::ScalingSweep(args) => cmd_sweep(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::BadMagic { .. }
        | Error::VersionMismatch { .. }
        | Error::Truncated { .. } => EXIT_IO,
        Error::Deadlock { .. } => EXIT_DEADLOCK,
        _ => EXIT_USAGE,
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8, Error> {
    let inputs = load_inputs(&args.source)?;
    format::save_mesh_file(&inputs.mesh, &args.out)?;
    let dims = inputs.mesh.dims();
    println!(
        "wrote {} ({} x {} x {}, {} cells)",
        args.out.display(),
        dims.nx,
        dims.ny,
        dims.nz,
        dims.cell_count()
    );
    Ok(0)
}

fn cmd_run(args: RunArgs) -> Result<u8, Error> {
    let inputs = load_inputs(&args.source)?;
    let workers = resolve_workers(args.workers);
    let machine = args.machine.as_deref().map(MachineModel::load).transpose()?;
    execute_run(
        inputs,
        args.apps,
        args.mode,
        workers,
        args.tolerance,
        machine,
        &args.output,
    )
}

fn cmd_compare(args: CompareArgs) -> Result<u8, Error> {
    let inputs = load_inputs(&args.source)?;
    let workers = resolve_workers(args.workers);
    execute_run(
        inputs,
        args.apps,
        Mode::Both,
        workers,
        args.tolerance,
        None,
        &args.output,
    )
}

fn execute_run(
    inputs: Inputs,
    n_apps: u32,
    mode: Mode,
    workers: usize,
    tolerance: f64,
    machine: Option<MachineModel>,
    output: &OutputArgs,
) -> Result<u8, Error> {
    if n_apps == 0 {
        return Err(Error::InvalidParameter("n_apps must be at least 1".into()));
    }
    if tolerance < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
    }
    let mesh = &inputs.mesh;
    let dims = mesh.dims();
    let census = OpCensus::default();

    let mut digests: Vec<AppDigest> = Vec::with_capacity(n_apps as usize);
    let mut counters = None;
    let mut memory = None;
    let mut comparison = None;
    let mut timings = Timings::default();

    match mode {
        Mode::Reference => {
            let start = Instant::now();
            digests = solver::run_applications(mesh, &inputs.props, n_apps, &inputs.field)?;
            timings.reference_seconds = Some(start.elapsed().as_secs_f64());
        }
        Mode::Simulate | Mode::CommOnly => {
            let config = FabricConfig {
                workers,
                comm_only: mode == Mode::CommOnly,
                ..FabricConfig::default()
            };
            let mut fabric = Fabric::build(mesh, inputs.props, config)?;
            let start = Instant::now();
            let outcome = fabric.run_applications(n_apps, &inputs.field)?;
            timings.simulate_seconds = Some(start.elapsed().as_secs_f64());
            digests = outcome.digests;
            counters = Some(CountersBlock {
                words_conserved: outcome.counters.words_conserved(),
                traffic: outcome.counters.traffic,
                compute: outcome.counters.compute,
                messages_per_phase: outcome.counters.messages_per_phase,
            });
            memory = Some(outcome.memory);
        }
        Mode::Both => {
            let config = FabricConfig {
                workers,
                ..FabricConfig::default()
            };
            let mut fabric = Fabric::build(mesh, inputs.props, config)?;
            let mut reference_seconds = 0.0;
            let mut simulate_seconds = 0.0;
            let mut bit_exact = true;
            let mut max_abs_diff = 0.0f64;
            let mut max_rel_diff = 0.0f64;
            for app_index in 0..n_apps {
                let pressure = pressure_field(dims, app_index, &inputs.field)?;
                let t = Instant::now();
                let expected = solver::apply(mesh, &pressure, &inputs.props)?;
                reference_seconds += t.elapsed().as_secs_f64();
                let t = Instant::now();
                let simulated = fabric.run_application(app_index, &inputs.field)?;
                simulate_seconds += t.elapsed().as_secs_f64();
                for (a, b) in expected.values().iter().zip(simulated.values()) {
                    if a.to_bits() != b.to_bits() {
                        bit_exact = false;
                    }
                    let d = (f64::from(*a) - f64::from(*b)).abs();
                    max_abs_diff = max_abs_diff.max(d);
                    let denom = f64::from(a.abs()).max(f64::from(b.abs()));
                    if denom > 0.0 {
                        max_rel_diff = max_rel_diff.max(d / denom);
                    }
                }
                digests.push(solver::digest(&simulated, app_index));
            }
            timings.reference_seconds = Some(reference_seconds);
            timings.simulate_seconds = Some(simulate_seconds);
            let agg = fabric.counters();
            counters = Some(CountersBlock {
                words_conserved: agg.words_conserved(),
                traffic: agg.traffic,
                compute: agg.compute,
                messages_per_phase: agg.messages_per_phase,
            });
            memory = Some(fabric.memory_report());
            let verdict = if bit_exact {
                "bit-exact"
            } else if max_abs_diff <= tolerance {
                "within-tolerance"
            } else {
                "mismatch"
            };
            comparison = Some(Comparison {
                apps_compared: n_apps,
                bit_exact,
                max_abs_diff,
                max_rel_diff,
                tolerance,
                verdict,
            });
        }
    }

    // Wall-clock throughput of whichever engine the mode measures.
    let seconds = timings.simulate_seconds.or(timings.reference_seconds);
    if let Some(seconds) = seconds.filter(|s| *s > 0.0) {
        let cells_per_sec = fvsim_core::metrics::throughput_cells_per_sec(
            dims.cell_count() as u64,
            n_apps as u64,
            seconds,
        );
        timings.cells_per_sec = Some(cells_per_sec);
        timings.flops_per_sec = Some(census.flops() as f64 * cells_per_sec);
    }

    let report = RunReport {
        config: ConfigEcho {
            dims,
            cells: dims.cell_count() as u64,
            n_apps,
            mode: mode.label(),
            workers,
            mesh_file: inputs.mesh_file,
            fluid: inputs.props,
            generator: inputs.generator,
            field: inputs.field,
            tolerance,
        },
        digests,
        counters,
        memory,
        metrics: MetricsBlock::new(census, machine),
        comparison,
        timings,
    };
    let text = match output.format {
        Format::Json => to_json(&report),
        Format::Csv => run_report_csv(&report),
    };
    write_output(output.out.as_deref(), &text)?;

    match &report.comparison {
        Some(c) if !c.passed() => Ok(EXIT_MISMATCH),
        _ => Ok(0),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Error> {
    if args.apps == 0 {
        return Err(Error::InvalidParameter("n_apps must be at least 1".into()));
    }
    let params = load_seed_params(args.seed_params.as_deref())?;
    let workers = resolve_workers(args.workers);
    let mut rows = Vec::with_capacity(args.sizes.0.len());
    for &(nx, ny) in &args.sizes.0 {
        let dims = MeshDims::new(nx, ny, args.nz)?;
        let mesh = generate_synthetic(dims, &params.generator)?;
        let config = FabricConfig {
            workers,
            ..FabricConfig::default()
        };
        let mut fabric = Fabric::build(&mesh, params.fluid, config)?;
        let start = Instant::now();
        let outcome = fabric.run_applications(args.apps, &params.field)?;
        let seconds = start.elapsed().as_secs_f64();
        let cells = dims.cell_count() as u64;
        let mut timings = Timings {
            simulate_seconds: Some(seconds),
            ..Timings::default()
        };
        if seconds > 0.0 {
            timings.cells_per_sec = Some(fvsim_core::metrics::throughput_cells_per_sec(
                cells,
                args.apps as u64,
                seconds,
            ));
        }
        rows.push(SweepRow {
            nx,
            ny,
            nz: args.nz,
            cells,
            n_apps: args.apps,
            traffic: outcome.counters.traffic,
            timings,
        });
    }
    let report = SweepReport {
        n_apps: args.apps,
        workers,
        rows,
    };
    let text = match args.output.format {
        Format::Json => to_json(&report),
        Format::Csv => sweep_csv(&report),
    };
    write_output(args.output.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_metrics(args: MetricsArgs) -> Result<u8, Error> {
    let machine = args.machine.as_deref().map(MachineModel::load).transpose()?;
    let metrics = MetricsBlock::new(OpCensus::default(), machine);
    let text = match args.output.format {
        Format::Json => to_json(&MetricsReport { metrics }),
        Format::Csv => metrics_csv(&metrics),
    };
    write_output(args.output.out.as_deref(), &text)?;
    Ok(0)
}
