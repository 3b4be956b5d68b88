//! Cell-based reference solver.
//!
//! This is the trusted-oracle side of the system: a plain loop over cells
//! that evaluates every face flux directly from mesh and field data. The
//! fabric simulator must reproduce its output bit for bit, so the kernel
//! arithmetic funnels through [`crate::physics`] and faces are accumulated
//! in the canonical [`FaceDirection`](crate::mesh::FaceDirection) order.
//!
//! Cells are independent of each other, which makes the residual safe to
//! evaluate in parallel: results are identical for any worker count because
//! each cell's value depends only on the inputs, never on evaluation order.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::mesh::{
    face_in_direction, pressure_field, CellField, FaceDirection, FieldParams, Mesh,
};
use crate::physics::{face_flux_with_densities, fluid_density, CellState, FluidProps};

/// Residual of a single cell, with densities already cached for the whole
/// field. Faces are walked in canonical order and accumulated strictly left
/// to right in `f32`.
fn residual_at(
    mesh: &Mesh,
    pressure: &CellField,
    rho: &[f32],
    props: &FluidProps,
    cell: usize,
) -> f32 {
    let dims = mesh.dims();
    let (x, y, z) = dims.coords(cell);
    let k = CellState::new(pressure.values()[cell], mesh.elevation().values()[cell]);
    let rho_k = rho[cell];
    let mut r = 0.0f32;
    for direction in FaceDirection::ALL {
        let Some(desc) = face_in_direction(dims, x, y, z, direction) else {
            continue;
        };
        let (lx, ly, lz) = desc.neighbor;
        let l_idx = dims.index(lx, ly, lz);
        let l = CellState::new(pressure.values()[l_idx], mesh.elevation().values()[l_idx]);
        r += face_flux_with_densities(mesh.transmissibility(&desc), k, l, rho_k, rho[l_idx], props);
    }
    r
}

/// Applies the residual kernel once: one flux per face per cell, summed into
/// a per-cell residual.
///
/// Deterministic and worker-count independent: equal inputs give a
/// bit-identical field no matter how the cells are scheduled.
pub fn apply(mesh: &Mesh, pressure: &CellField, props: &FluidProps) -> Result<CellField> {
    mesh.elevation().check_same_dims(pressure)?;
    let dims = mesh.dims();

    // One density evaluation per cell per application, shared by all faces.
    let rho: Vec<f32> = pressure
        .values()
        .iter()
        .map(|&p| fluid_density(p, props))
        .collect();

    let values: Vec<f32> = (0..dims.cell_count())
        .into_par_iter()
        .map(|cell| residual_at(mesh, pressure, &rho, props, cell))
        .collect();
    CellField::from_values(dims, values)
}

/// Order-independent summary of one residual field: wide-precision sums for
/// conservation checks plus a bytewise checksum for bit-identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppDigest {
    pub app_index: u32,
    /// Signed sum of all residuals, accumulated in `f64`.
    pub sum: f64,
    /// L2 norm of the residual field, accumulated in `f64`.
    pub l2: f64,
    /// FNV-1a over the little-endian bytes of every value. Two fields share
    /// a checksum only if they are bit-identical (up to hash collisions).
    pub checksum: u64,
}

/// FNV-1a, 64-bit. Small, dependency-free, and plenty for detecting any
/// single-bit divergence between two residual fields.
pub fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Digests a residual field.
pub fn digest(field: &CellField, app_index: u32) -> AppDigest {
    let mut sum = 0.0f64;
    let mut l2 = 0.0f64;
    for &v in field.values() {
        sum += v as f64;
        l2 += (v as f64) * (v as f64);
    }
    let checksum = fnv1a64(field.values().iter().flat_map(|v| v.to_le_bytes()));
    AppDigest {
        app_index,
        sum,
        l2: l2.sqrt(),
        checksum,
    }
}

/// Global conservation diagnostics of a residual field, in `f64`.
///
/// Interior fluxes cancel pairwise by construction, so the signed sum of a
/// no-flow problem is pure accumulated rounding and must stay tiny relative
/// to the total residual mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conservation {
    pub signed_sum: f64,
    pub abs_sum: f64,
}

impl Conservation {
    pub fn of(field: &CellField) -> Self {
        let mut signed_sum = 0.0f64;
        let mut abs_sum = 0.0f64;
        for &v in field.values() {
            signed_sum += v as f64;
            abs_sum += (v as f64).abs();
        }
        Self {
            signed_sum,
            abs_sum,
        }
    }

    /// `|sum r| <= tol * sum |r|`, with the degenerate all-zero field passing.
    pub fn within(&self, tol: f64) -> bool {
        self.signed_sum.abs() <= tol * self.abs_sum
    }
}

/// Runs the kernel against `n_apps` distinct analytic pressure fields
/// (application indices `0..n_apps`) and digests each residual.
pub fn run_applications(
    mesh: &Mesh,
    props: &FluidProps,
    n_apps: u32,
    params: &FieldParams,
) -> Result<Vec<AppDigest>> {
    let mut digests = Vec::with_capacity(n_apps as usize);
    for app_index in 0..n_apps {
        let pressure = pressure_field(mesh.dims(), app_index, params)?;
        let residual = apply(mesh, &pressure, props)?;
        digests.push(digest(&residual, app_index));
    }
    Ok(digests)
}
