//! Single-phase compressible flow kernel: density, face flux, and cell
//! residual evaluation in two-point flux-approximation form.
//!
//! Everything here is deliberately computed in `f32`. The fabric simulator
//! ships 32-bit words between processing elements and the reference solver
//! must reproduce its arithmetic bit for bit, so both paths funnel through
//! these functions. Wider precision is reserved for verification code
//! (digests, conservation checks), never for the kernel itself.
//!
//! The flux across the face between cells K and L is
//!
//! ```text
//! F_KL = upsilon_KL * lambda_upw * dphi_KL
//! dphi_KL = (p_L - p_K) + 0.5 * (rho_K + rho_L) * g * (z_L - z_K)
//! lambda_upw = rho_K / mu  if dphi_KL > 0, else  rho_L / mu
//! rho(p) = rho_ref * exp(c_f * (p - p_ref))
//! ```
//!
//! Two properties matter enough to be load-bearing contracts:
//!
//! * **Antisymmetry, bit-exact.** `face_flux(ups, K, L)` and
//!   `face_flux(ups, L, K)` have identical bit patterns apart from the sign
//!   bit. IEEE negation of differences and products is exact, the density
//!   average is commutative, and the upwind branch picks the same physical
//!   density from either orientation (the `dphi == 0` tie picks the second
//!   cell's density, which names the same value from both sides only after
//!   the flux has already collapsed to zero).
//! * **Order-sensitive accumulation.** [`cell_residual`] adds face fluxes
//!   strictly left to right in `f32`. Reordering or pairwise trees would
//!   change low bits and break equivalence between solver and fabric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fluid and gravity constants shared by every flux evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluidProps {
    /// Density at the reference pressure, kg/m^3. Strictly positive.
    pub rho_ref: f32,
    /// Reference pressure, Pa.
    pub p_ref: f32,
    /// Fluid compressibility, 1/Pa. Non-negative; zero means incompressible.
    pub c_f: f32,
    /// Dynamic viscosity, Pa*s. Strictly positive.
    pub mu: f32,
    /// Gravitational acceleration, m/s^2. Non-negative.
    pub g: f32,
}

impl Default for FluidProps {
    /// Water is the default working fluid.
    fn default() -> Self {
        Self::water()
    }
}

impl FluidProps {
    /// Validates the physical constraints listed on the fields.
    pub fn new(rho_ref: f32, p_ref: f32, c_f: f32, mu: f32, g: f32) -> Result<Self> {
        if !(rho_ref.is_finite() && rho_ref > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho_ref must be finite and positive, got {rho_ref}"
            )));
        }
        if !p_ref.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "p_ref must be finite, got {p_ref}"
            )));
        }
        if !(c_f.is_finite() && c_f >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c_f must be finite and non-negative, got {c_f}"
            )));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite and positive, got {mu}"
            )));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g must be finite and non-negative, got {g}"
            )));
        }
        Ok(Self {
            rho_ref,
            p_ref,
            c_f,
            mu,
            g,
        })
    }

    /// Water-like defaults at reservoir conditions: 1000 kg/m^3 at 10 MPa,
    /// slight compressibility, 1 mPa*s viscosity, standard gravity.
    pub fn water() -> Self {
        Self {
            rho_ref: 1000.0,
            p_ref: 1.0e7,
            c_f: 1.0e-9,
            mu: 1.0e-3,
            g: 9.81,
        }
    }
}

/// Per-cell state a flux evaluation needs: pressure and elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    /// Cell-centered pressure, Pa.
    pub p: f32,
    /// Cell-centered elevation, m (increases upward).
    pub z: f32,
}

impl CellState {
    pub fn new(p: f32, z: f32) -> Self {
        Self { p, z }
    }
}

/// Transmissibility of one face, strictly positive and finite.
///
/// The same coefficient is shared by both cells of the face, which is what
/// makes pairwise flux cancellation exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceCoeff {
    upsilon: f32,
}

impl FaceCoeff {
    pub fn new(upsilon: f32) -> Result<Self> {
        if !(upsilon.is_finite() && upsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "face transmissibility must be finite and positive, got {upsilon}"
            )));
        }
        Ok(Self { upsilon })
    }

    #[inline]
    pub fn value(self) -> f32 {
        self.upsilon
    }
}

/// Density at pressure `p`: `rho_ref * exp(c_f * (p - p_ref))`, in `f32`.
///
/// With `c_f == 0` this returns exactly `rho_ref` for any finite `p`.
/// Callers that evaluate many fluxes against the same cell are expected to
/// call this once per cell per pressure field and cache the result; the
/// function is pure, so caching cannot change any bit of the outcome.
#[inline]
pub fn fluid_density(p: f32, props: &FluidProps) -> f32 {
    props.rho_ref * (props.c_f * (p - props.p_ref)).exp()
}

/// Flow potential difference from K toward L:
/// `(p_L - p_K) + 0.5 * (rho_K + rho_L) * g * (z_L - z_K)`.
///
/// The density average is arithmetic. Every operation is `f32` and the
/// expression shape is fixed, so swapping K and L yields the exact IEEE
/// negation (or `+0.0` from both sides when the terms cancel exactly).
#[inline]
pub fn potential_difference(k: CellState, l: CellState, rho_k: f32, rho_l: f32, g: f32) -> f32 {
    (l.p - k.p) + 0.5 * (rho_k + rho_l) * g * (l.z - k.z)
}

/// Upwind mobility: density of the upstream cell over viscosity.
///
/// `dphi > 0` means flow K <- L in the sign convention of
/// [`potential_difference`], so the strict-positive branch takes `rho_k`;
/// everything else — including the `dphi == 0` tie — takes `rho_l`. The tie
/// rule is part of the contract: both orientations of a zero-potential face
/// then produce a zero flux whose bits differ at most in the sign.
#[inline]
pub fn upwind_mobility(dphi: f32, rho_k: f32, rho_l: f32, mu: f32) -> f32 {
    if dphi > 0.0 {
        rho_k / mu
    } else {
        rho_l / mu
    }
}

/// Flux across one face, evaluating both cell densities on the spot.
#[inline]
pub fn face_flux(coeff: FaceCoeff, k: CellState, l: CellState, props: &FluidProps) -> f32 {
    let rho_k = fluid_density(k.p, props);
    let rho_l = fluid_density(l.p, props);
    face_flux_with_densities(coeff.value(), k, l, rho_k, rho_l, props)
}

/// Flux across one face with the two cell densities supplied by the caller.
///
/// This is the path both the reference solver and the fabric simulator use:
/// densities are evaluated once per cell per pressure field and reused by
/// every face of that cell. Because [`fluid_density`] is pure, the result is
/// bit-identical to [`face_flux`].
#[inline]
pub fn face_flux_with_densities(
    upsilon: f32,
    k: CellState,
    l: CellState,
    rho_k: f32,
    rho_l: f32,
    props: &FluidProps,
) -> f32 {
    let dphi = potential_difference(k, l, rho_k, rho_l, props.g);
    let lambda = upwind_mobility(dphi, rho_k, rho_l, props.mu);
    upsilon * lambda * dphi
}

/// Residual of one cell: the sum of its face fluxes, accumulated strictly
/// left to right in `f32` over `faces` in the order given.
///
/// Callers are responsible for passing faces in the canonical direction
/// order; this function must not reorder, pair, or widen the accumulation,
/// because the fabric simulator accumulates the same partial fluxes in the
/// same order and the two results are compared bit for bit.
pub fn cell_residual(k: CellState, faces: &[(FaceCoeff, CellState)], props: &FluidProps) -> f32 {
    let rho_k = fluid_density(k.p, props);
    let mut r = 0.0f32;
    for &(coeff, l) in faces {
        let rho_l = fluid_density(l.p, props);
        r += face_flux_with_densities(coeff.value(), k, l, rho_k, rho_l, props);
    }
    r
}
