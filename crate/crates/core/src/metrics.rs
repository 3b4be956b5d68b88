//! Operation census, traffic accounting, and a roofline model.
//!
//! Everything here is closed-form arithmetic over counters the simulator
//! (or the analytic word laws) already produced. The per-cell census is the
//! canonical instruction mix of one kernel application on one cell of a
//! ten-face column: it is *data*, not measurement, and the associated
//! constants are frozen by tests.

use serde::Serialize;

use crate::error::{Error, Result};

/// Instruction census for one cell and one kernel application.
///
/// The default census covers the ten-face interior cell: ten flux
/// evaluations at 6 multiplies, 4 subtractions, 1 negation, 1 addition and
/// 1 fused multiply-add each, plus 16 register moves that stage incoming
/// fabric words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCensus {
    pub fmul: u64,
    pub fsub: u64,
    pub fneg: u64,
    pub fadd: u64,
    pub fma: u64,
    pub fmov: u64,
}

impl Default for OpCensus {
    fn default() -> Self {
        Self {
            fmul: 60,
            fsub: 40,
            fneg: 10,
            fadd: 10,
            fma: 10,
            fmov: 16,
        }
    }
}

impl OpCensus {
    /// Census of a single face-flux evaluation.
    pub fn per_flux() -> Self {
        Self {
            fmul: 6,
            fsub: 4,
            fneg: 1,
            fadd: 1,
            fma: 1,
            fmov: 0,
        }
    }

    /// Weighted floating-point operations: an FMA counts twice, a register
    /// move counts zero, everything else once.
    pub fn flops(&self) -> u64 {
        self.fmul + self.fsub + self.fneg + self.fadd + 2 * self.fma + 0 * self.fmov
    }

    /// Operand loads plus result stores, one access per named operand:
    /// two-register ops make 3 accesses, negation 2, FMA 4, and a move 1.
    pub fn memory_accesses(&self) -> u64 {
        3 * self.fmul + 3 * self.fsub + 2 * self.fneg + 3 * self.fadd + 4 * self.fma + self.fmov
    }

    /// [`Self::memory_accesses`] in bytes, at 4 bytes per word.
    pub fn memory_traffic_bytes(&self) -> u64 {
        4 * self.memory_accesses()
    }

    /// Fabric words entering the cell per application (the staged moves).
    pub fn fabric_words(&self) -> u64 {
        self.fmov
    }

    /// [`Self::fabric_words`] in bytes.
    pub fn fabric_traffic_bytes(&self) -> u64 {
        4 * self.fabric_words()
    }

    /// FLOPs per byte of local memory traffic.
    pub fn memory_intensity(&self) -> f64 {
        self.flops() as f64 / self.memory_traffic_bytes() as f64
    }

    /// FLOPs per byte of fabric traffic.
    pub fn fabric_intensity(&self) -> f64 {
        self.flops() as f64 / self.fabric_traffic_bytes() as f64
    }
}

/// Cell throughput of a run: cells times applications over wall seconds.
pub fn throughput_cells_per_sec(cells: u64, apps: u64, seconds: f64) -> f64 {
    (cells as f64) * (apps as f64) / seconds
}

/// FLOP throughput implied by a cell throughput and a census.
pub fn flops_per_sec(census: &OpCensus, cells: u64, apps: u64, seconds: f64) -> f64 {
    census.flops() as f64 * throughput_cells_per_sec(cells, apps, seconds)
}

/// A machine for the roofline model, loadable from a `key=value` file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineModel {
    pub name: String,
    /// Peak floating-point rate, FLOP/s.
    pub peak_flops: f64,
    /// Aggregate local-memory bandwidth, B/s.
    pub mem_bandwidth: f64,
    /// Aggregate fabric injection bandwidth, B/s.
    pub fabric_bandwidth: f64,
}

impl MachineModel {
    /// Parses the `key=value` format: one pair per line, `#` comments and
    /// blank lines ignored. All four keys are required.
    pub fn parse(text: &str) -> Result<MachineModel> {
        let mut name = None;
        let mut peak_flops = None;
        let mut mem_bandwidth = None;
        let mut fabric_bandwidth = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidParameter(format!(
                    "machine file line {}: expected key=value, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let number = |slot: &mut Option<f64>| -> Result<()> {
                let parsed: f64 = value.parse().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "machine file line {}: {key} is not a number: {value:?}",
                        lineno + 1
                    ))
                })?;
                if !(parsed.is_finite() && parsed > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "machine file line {}: {key} must be positive and finite",
                        lineno + 1
                    )));
                }
                *slot = Some(parsed);
                Ok(())
            };
            match key {
                "name" => name = Some(value.to_string()),
                "peak_flops" => number(&mut peak_flops)?,
                "mem_bandwidth" => number(&mut mem_bandwidth)?,
                "fabric_bandwidth" => number(&mut fabric_bandwidth)?,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "machine file line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |what: &str| Error::InvalidParameter(format!("machine file: missing {what}"));
        Ok(MachineModel {
            name: name.ok_or_else(|| missing("name"))?,
            peak_flops: peak_flops.ok_or_else(|| missing("peak_flops"))?,
            mem_bandwidth: mem_bandwidth.ok_or_else(|| missing("mem_bandwidth"))?,
            fabric_bandwidth: fabric_bandwidth.ok_or_else(|| missing("fabric_bandwidth"))?,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<MachineModel> {
        MachineModel::parse(&std::fs::read_to_string(path)?)
    }
}

/// Which resource caps a kernel on a machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RooflineBound {
    Compute,
    Bandwidth,
}

/// One kernel-on-machine roofline evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflinePoint {
    /// FLOPs per byte moved over the limiting channel.
    pub intensity: f64,
    /// min(peak, intensity * bandwidth), FLOP/s.
    pub attainable_flops: f64,
    pub bound: RooflineBound,
}

/// Evaluates one roofline channel. At the ridge point (where the two caps
/// meet exactly) the kernel counts as compute-bound.
pub fn roofline(intensity: f64, peak_flops: f64, bandwidth: f64) -> RooflinePoint {
    let bw_cap = intensity * bandwidth;
    if bw_cap >= peak_flops {
        RooflinePoint {
            intensity,
            attainable_flops: peak_flops,
            bound: RooflineBound::Compute,
        }
    } else {
        RooflinePoint {
            intensity,
            attainable_flops: bw_cap,
            bound: RooflineBound::Bandwidth,
        }
    }
}

/// Roofline of the kernel census against both channels of a machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelRoofline {
    pub memory: RooflinePoint,
    pub fabric: RooflinePoint,
    /// The lower of the two attainable rates.
    pub attainable_flops: f64,
}

pub fn kernel_roofline(census: &OpCensus, machine: &MachineModel) -> KernelRoofline {
    let memory = roofline(census.memory_intensity(), machine.peak_flops, machine.mem_bandwidth);
    let fabric = roofline(census.fabric_intensity(), machine.peak_flops, machine.fabric_bandwidth);
    KernelRoofline {
        memory,
        fabric,
        attainable_flops: memory.attainable_flops.min(fabric.attainable_flops),
    }
}

/// A measured run placed on a machine's roofline: the achieved FLOP rate
/// next to each channel's cap and classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasuredRoofline {
    /// flops_per_cell * cells * apps / seconds.
    pub achieved_flops: f64,
    pub memory: RooflinePoint,
    pub fabric: RooflinePoint,
}

pub fn roofline_point(
    machine: &MachineModel,
    census: &OpCensus,
    measured_seconds: f64,
    total_cells: u64,
    n_apps: u64,
) -> Result<MeasuredRoofline> {
    if !(measured_seconds.is_finite() && measured_seconds > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "measured_seconds must be positive, got {measured_seconds}"
        )));
    }
    Ok(MeasuredRoofline {
        achieved_flops: flops_per_sec(census, total_cells, n_apps, measured_seconds),
        memory: roofline(census.memory_intensity(), machine.peak_flops, machine.mem_bandwidth),
        fabric: roofline(census.fabric_intensity(), machine.peak_flops, machine.fabric_bandwidth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_census_constants() {
        let c = OpCensus::default();
        assert_eq!(c.flops(), 140);
        assert_eq!(c.memory_accesses(), 406);
        assert_eq!(c.memory_traffic_bytes(), 1624);
        assert_eq!(c.fabric_words(), 16);
        assert_eq!(c.fabric_traffic_bytes(), 64);
    }

    #[test]
    fn census_is_ten_fluxes_plus_staging_moves() {
        let f = OpCensus::per_flux();
        assert_eq!(f.flops(), 14);
        let c = OpCensus::default();
        assert_eq!(c.fmul, 10 * f.fmul);
        assert_eq!(c.fsub, 10 * f.fsub);
        assert_eq!(c.fneg, 10 * f.fneg);
        assert_eq!(c.fadd, 10 * f.fadd);
        assert_eq!(c.fma, 10 * f.fma);
        assert_eq!(c.flops(), 10 * f.flops());
    }

    #[test]
    fn intensities() {
        let c = OpCensus::default();
        assert!((c.memory_intensity() - 140.0 / 1624.0).abs() < 1e-15);
        assert_eq!(c.fabric_intensity(), 2.1875);
    }

    #[test]
    fn throughput_is_cells_times_apps_over_seconds() {
        let t = throughput_cells_per_sec(9_840_000, 1000, 0.0813);
        assert!((t / 1.0e9 - 121.0332).abs() < 1e-3, "{t}");
        let f = flops_per_sec(&OpCensus::default(), 183_393_000, 1000, 0.0823);
        assert!((f / 1.0e12 - 311.96865).abs() < 1e-3, "{f}");
    }

    #[test]
    fn machine_file_round_trip() {
        let text = "\
# test machine
name = box-1
peak_flops = 1.0e12   # per second
mem_bandwidth = 5.0e11
fabric_bandwidth = 2.0e11
";
        let m = MachineModel::parse(text).unwrap();
        assert_eq!(m.name, "box-1");
        assert_eq!(m.peak_flops, 1.0e12);
        assert_eq!(m.mem_bandwidth, 5.0e11);
        assert_eq!(m.fabric_bandwidth, 2.0e11);
    }

    #[test]
    fn machine_file_rejects_garbage() {
        assert!(MachineModel::parse("name=x\npeak_flops=zzz").is_err());
        assert!(MachineModel::parse("name=x\nwat=1").is_err());
        assert!(MachineModel::parse("peak_flops=1e12").is_err()); // missing keys
        assert!(MachineModel::parse("name=x\npeak_flops=-3").is_err());
        assert!(MachineModel::parse("just some words").is_err());
    }

    #[test]
    fn roofline_picks_the_smaller_cap() {
        // intensity * bw = 2e11 < 1e12 peak: bandwidth-bound.
        let p = roofline(0.5, 1.0e12, 4.0e11);
        assert_eq!(p.bound, RooflineBound::Bandwidth);
        assert_eq!(p.attainable_flops, 2.0e11);
        // 10 * 4e11 = 4e12 > peak: compute-bound.
        let p = roofline(10.0, 1.0e12, 4.0e11);
        assert_eq!(p.bound, RooflineBound::Compute);
        assert_eq!(p.attainable_flops, 1.0e12);
        // Exactly at the ridge: compute-bound by convention.
        let p = roofline(2.5, 1.0e12, 4.0e11);
        assert_eq!(p.bound, RooflineBound::Compute);
    }

    #[test]
    fn intensities_ignore_uniform_census_scaling() {
        let base = OpCensus::default();
        let tripled = OpCensus {
            fmul: 3 * base.fmul,
            fsub: 3 * base.fsub,
            fneg: 3 * base.fneg,
            fadd: 3 * base.fadd,
            fma: 3 * base.fma,
            fmov: 3 * base.fmov,
        };
        assert_eq!(base.memory_intensity(), tripled.memory_intensity());
        assert_eq!(base.fabric_intensity(), tripled.fabric_intensity());
    }

    #[test]
    fn measured_roofline_reports_the_achieved_rate() {
        let machine = MachineModel {
            name: "wafer".into(),
            peak_flops: 1.75e15,
            mem_bandwidth: 20.0e15,
            fabric_bandwidth: 27.5e15,
        };
        let census = OpCensus::default();
        // 750 * 994 * 246 cells, 1000 applications, 0.0823 s.
        let r = roofline_point(&machine, &census, 0.0823, 183_393_000, 1000).unwrap();
        assert!((r.achieved_flops / 311.85e12 - 1.0).abs() < 0.005, "{}", r.achieved_flops);
        assert_eq!(r.fabric.bound, RooflineBound::Compute);
        assert_eq!(r.memory.bound, RooflineBound::Bandwidth);
        assert!(r.achieved_flops <= machine.peak_flops);

        // Unbounded bandwidth leaves only the compute ceiling.
        let infinite = MachineModel {
            mem_bandwidth: f64::INFINITY,
            fabric_bandwidth: f64::INFINITY,
            ..machine.clone()
        };
        let r = roofline_point(&infinite, &census, 1.0, 1000, 1).unwrap();
        assert_eq!(r.memory.bound, RooflineBound::Compute);
        assert_eq!(r.fabric.bound, RooflineBound::Compute);

        assert!(roofline_point(&machine, &census, 0.0, 1, 1).is_err());
        assert!(roofline_point(&machine, &census, -1.0, 1, 1).is_err());
    }

    #[test]
    fn kernel_roofline_takes_the_minimum_channel() {
        let census = OpCensus::default();
        // Fabric-generous, memory-starved machine: memory channel limits.
        let machine = MachineModel {
            name: "mem-starved".into(),
            peak_flops: 1.0e12,
            mem_bandwidth: 1.0e9,
            fabric_bandwidth: 1.0e15,
        };
        let r = kernel_roofline(&census, &machine);
        assert_eq!(r.fabric.bound, RooflineBound::Compute);
        assert_eq!(r.memory.bound, RooflineBound::Bandwidth);
        assert_eq!(r.attainable_flops, r.memory.attainable_flops);
    }
}
