//! Structured 3-D mesh with cardinal, in-plane diagonal, and vertical face
//! connectivity, plus the deterministic synthetic generators used to build
//! test problems.
//!
//! Cells form a dense `nx * ny * nz` block stored x-fastest (x innermost,
//! then y, then z). Faces live in five families, each stored once:
//!
//! * `X`    — between `(x, y, z)` and `(x+1, y,   z)`
//! * `Y`    — between `(x, y, z)` and `(x,   y+1, z)`
//! * `Z`    — between `(x, y, z)` and `(x,   y,   z+1)`
//! * `DiagPosPos` — between `(x, y, z)` and `(x+1, y+1, z)`
//! * `DiagPosNeg` — between `(x, y, z)` and `(x+1, y-1, z)`
//!
//! A cell in the interior therefore touches ten faces: four cardinal in the
//! x-y plane, four in-plane diagonals, and two vertical. Boundary faces are
//! simply absent (no-flow boundary), so boundary cells carry fewer.
//!
//! [`FaceDirection`] fixes the canonical order in which a cell enumerates
//! its faces. Residual accumulation is order-sensitive in `f32`, so every
//! consumer — reference solver and fabric simulator alike — must walk faces
//! in exactly this order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mesh extents. Each dimension is at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeshDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl std::fmt::Display for MeshDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

impl MeshDims {
    /// Validates that every extent is at least 1 and that the cell count
    /// (and its byte size as `f32`) fits comfortably in memory.
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidParameter(format!(
                "mesh dimensions must all be >= 1, got {nx}x{ny}x{nz}"
            )));
        }
        let cells = (nx as u64)
            .checked_mul(ny as u64)
            .and_then(|v| v.checked_mul(nz as u64))
            .and_then(|v| v.checked_mul(4)); // bytes per f32 value
        match cells {
            Some(bytes) if bytes <= (isize::MAX as u64) / 16 => Ok(Self { nx, ny, nz }),
            _ => Err(Error::DimensionOverflow {
                nx: nx as u64,
                ny: ny as u64,
                nz: nz as u64,
            }),
        }
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        x < self.nx && y < self.ny && z < self.nz
    }

    /// Linear index of a cell, x-fastest.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(self.contains(x, y, z));
        x + self.nx * (y + self.ny * z)
    }

    /// Inverse of [`MeshDims::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        debug_assert!(index < self.cell_count());
        let x = index % self.nx;
        let y = (index / self.nx) % self.ny;
        let z = index / (self.nx * self.ny);
        (x, y, z)
    }

    fn checked(&self, x: usize, y: usize, z: usize) -> Result<()> {
        if self.contains(x, y, z) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x,
                y,
                z,
                nx: self.nx,
                ny: self.ny,
                nz: self.nz,
            })
        }
    }
}

/// One `f32` value per cell, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    dims: MeshDims,
    values: Vec<f32>,
}

impl CellField {
    pub fn zeros(dims: MeshDims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.cell_count()],
        }
    }

    pub fn from_values(dims: MeshDims, values: Vec<f32>) -> Result<Self> {
        if values.len() != dims.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "field for mesh {dims} needs {} values, got {}",
                dims.cell_count(),
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    #[inline]
    pub fn dims(&self) -> MeshDims {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[self.dims.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f32) {
        let i = self.dims.index(x, y, z);
        self.values[i] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    /// Errors unless `other` has the same dimensions.
    pub fn check_same_dims(&self, other: &CellField) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: other.dims,
            })
        }
    }
}

/// The five face families, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FaceOrientation {
    /// Cardinal +x faces.
    X,
    /// Cardinal +y faces.
    Y,
    /// Vertical +z faces.
    Z,
    /// In-plane diagonal toward (+x, +y).
    DiagPosPos,
    /// In-plane diagonal toward (+x, -y).
    DiagPosNeg,
}

impl FaceOrientation {
    pub const ALL: [FaceOrientation; 5] = [
        FaceOrientation::X,
        FaceOrientation::Y,
        FaceOrientation::Z,
        FaceOrientation::DiagPosPos,
        FaceOrientation::DiagPosNeg,
    ];

    /// Number of faces of this family on a mesh of the given extents.
    pub fn face_count(self, dims: MeshDims) -> usize {
        let MeshDims { nx, ny, nz } = dims;
        match self {
            FaceOrientation::X => (nx - 1) * ny * nz,
            FaceOrientation::Y => nx * (ny - 1) * nz,
            FaceOrientation::Z => nx * ny * (nz - 1),
            FaceOrientation::DiagPosPos | FaceOrientation::DiagPosNeg => {
                (nx - 1) * (ny - 1) * nz
            }
        }
    }
}

/// Directions in which a cell can see a neighbor, in the canonical
/// enumeration order used for residual accumulation:
/// `[-x, +x, -y, +y, (-x,-y), (+x,-y), (-x,+y), (+x,+y), -z, +z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FaceDirection {
    XNeg,
    XPos,
    YNeg,
    YPos,
    DiagNegNeg,
    DiagPosNeg,
    DiagNegPos,
    DiagPosPos,
    ZNeg,
    ZPos,
}

impl FaceDirection {
    /// All ten directions in canonical order.
    pub const ALL: [FaceDirection; 10] = [
        FaceDirection::XNeg,
        FaceDirection::XPos,
        FaceDirection::YNeg,
        FaceDirection::YPos,
        FaceDirection::DiagNegNeg,
        FaceDirection::DiagPosNeg,
        FaceDirection::DiagNegPos,
        FaceDirection::DiagPosPos,
        FaceDirection::ZNeg,
        FaceDirection::ZPos,
    ];

    /// The eight in-plane directions (everything but -z/+z), canonical order.
    pub const HORIZONTAL: [FaceDirection; 8] = [
        FaceDirection::XNeg,
        FaceDirection::XPos,
        FaceDirection::YNeg,
        FaceDirection::YPos,
        FaceDirection::DiagNegNeg,
        FaceDirection::DiagPosNeg,
        FaceDirection::DiagNegPos,
        FaceDirection::DiagPosPos,
    ];

    /// Position of this direction in the canonical order.
    #[inline]
    pub fn ordinal(self) -> usize {
        match self {
            FaceDirection::XNeg => 0,
            FaceDirection::XPos => 1,
            FaceDirection::YNeg => 2,
            FaceDirection::YPos => 3,
            FaceDirection::DiagNegNeg => 4,
            FaceDirection::DiagPosNeg => 5,
            FaceDirection::DiagNegPos => 6,
            FaceDirection::DiagPosPos => 7,
            FaceDirection::ZNeg => 8,
            FaceDirection::ZPos => 9,
        }
    }

    /// Coordinate offset `(dx, dy, dz)` of the neighbor in this direction.
    #[inline]
    pub fn offset(self) -> (isize, isize, isize) {
        match self {
            FaceDirection::XNeg => (-1, 0, 0),
            FaceDirection::XPos => (1, 0, 0),
            FaceDirection::YNeg => (0, -1, 0),
            FaceDirection::YPos => (0, 1, 0),
            FaceDirection::DiagNegNeg => (-1, -1, 0),
            FaceDirection::DiagPosNeg => (1, -1, 0),
            FaceDirection::DiagNegPos => (-1, 1, 0),
            FaceDirection::DiagPosPos => (1, 1, 0),
            FaceDirection::ZNeg => (0, 0, -1),
            FaceDirection::ZPos => (0, 0, 1),
        }
    }

    /// The direction the neighbor uses to look back at this cell.
    #[inline]
    pub fn opposite(self) -> FaceDirection {
        match self {
            FaceDirection::XNeg => FaceDirection::XPos,
            FaceDirection::XPos => FaceDirection::XNeg,
            FaceDirection::YNeg => FaceDirection::YPos,
            FaceDirection::YPos => FaceDirection::YNeg,
            FaceDirection::DiagNegNeg => FaceDirection::DiagPosPos,
            FaceDirection::DiagPosNeg => FaceDirection::DiagNegPos,
            FaceDirection::DiagNegPos => FaceDirection::DiagPosNeg,
            FaceDirection::DiagPosPos => FaceDirection::DiagNegNeg,
            FaceDirection::ZNeg => FaceDirection::ZPos,
            FaceDirection::ZPos => FaceDirection::ZNeg,
        }
    }

    /// True for the eight in-plane directions.
    #[inline]
    pub fn is_horizontal(self) -> bool {
        !matches!(self, FaceDirection::ZNeg | FaceDirection::ZPos)
    }
}

/// One face as seen from a particular cell: where the neighbor sits and
/// where the shared transmissibility is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceDescriptor {
    pub direction: FaceDirection,
    pub neighbor: (usize, usize, usize),
    pub orientation: FaceOrientation,
    /// Index into the family's value array. Both cells of a face resolve to
    /// the same `(orientation, face_index)` pair.
    pub face_index: usize,
}

/// Resolves the face of `(x, y, z)` in `direction`, or `None` when the
/// neighbor would fall outside the mesh (no-flow boundary).
pub fn face_in_direction(
    dims: MeshDims,
    x: usize,
    y: usize,
    z: usize,
    direction: FaceDirection,
) -> Option<FaceDescriptor> {
    let (dx, dy, dz) = direction.offset();
    let nxm = x.checked_add_signed(dx)?;
    let nym = y.checked_add_signed(dy)?;
    let nzm = z.checked_add_signed(dz)?;
    if !dims.contains(nxm, nym, nzm) {
        return None;
    }
    let MeshDims { nx, ny, .. } = dims;
    // Each family indexes faces by the anchor cell: the lower-x cell for X
    // and diagonal faces, the lower-y cell for Y faces, the lower-z cell for
    // Z faces. Diagonal strides are (nx-1) in x and (ny-1) in y.
    let (orientation, face_index) = match direction {
        FaceDirection::XNeg => (FaceOrientation::X, (x - 1) + (nx - 1) * (y + ny * z)),
        FaceDirection::XPos => (FaceOrientation::X, x + (nx - 1) * (y + ny * z)),
        FaceDirection::YNeg => (FaceOrientation::Y, x + nx * ((y - 1) + (ny - 1) * z)),
        FaceDirection::YPos => (FaceOrientation::Y, x + nx * (y + (ny - 1) * z)),
        FaceDirection::DiagNegNeg => (
            FaceOrientation::DiagPosPos,
            (x - 1) + (nx - 1) * ((y - 1) + (ny - 1) * z),
        ),
        FaceDirection::DiagPosPos => (
            FaceOrientation::DiagPosPos,
            x + (nx - 1) * (y + (ny - 1) * z),
        ),
        FaceDirection::DiagPosNeg => (
            FaceOrientation::DiagPosNeg,
            x + (nx - 1) * ((y - 1) + (ny - 1) * z),
        ),
        FaceDirection::DiagNegPos => (
            FaceOrientation::DiagPosNeg,
            (x - 1) + (nx - 1) * (y + (ny - 1) * z),
        ),
        FaceDirection::ZNeg => (FaceOrientation::Z, x + nx * (y + ny * (z - 1))),
        FaceDirection::ZPos => (FaceOrientation::Z, x + nx * (y + ny * z)),
    };
    Some(FaceDescriptor {
        direction,
        neighbor: (nxm, nym, nzm),
        orientation,
        face_index,
    })
}

/// All faces of cell `(x, y, z)` in canonical direction order, skipping
/// absent boundary faces. An interior cell yields exactly ten descriptors.
pub fn neighbor_faces(
    dims: MeshDims,
    x: usize,
    y: usize,
    z: usize,
) -> Result<Vec<FaceDescriptor>> {
    dims.checked(x, y, z)?;
    Ok(FaceDirection::ALL
        .iter()
        .filter_map(|&d| face_in_direction(dims, x, y, z, d))
        .collect())
}

/// Transmissibilities of one face family, indexed as described on
/// [`face_in_direction`]. All values are strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFamily {
    orientation: FaceOrientation,
    values: Vec<f32>,
}

impl FaceFamily {
    pub fn new(orientation: FaceOrientation, dims: MeshDims, values: Vec<f32>) -> Result<Self> {
        let expected = orientation.face_count(dims);
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{orientation:?} family on mesh {dims} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "{orientation:?} family contains non-positive or non-finite value {bad}"
            )));
        }
        Ok(Self {
            orientation,
            values,
        })
    }

    #[inline]
    pub fn orientation(&self) -> FaceOrientation {
        self.orientation
    }

    #[inline]
    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// A complete mesh: extents, per-cell elevation, and the five validated
/// transmissibility families.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dims: MeshDims,
    elevation: CellField,
    families: [FaceFamily; 5],
}

impl Mesh {
    /// Assembles a mesh, checking that elevation and families match `dims`.
    /// `families` must arrive in [`FaceOrientation::ALL`] order.
    pub fn new(dims: MeshDims, elevation: CellField, families: [FaceFamily; 5]) -> Result<Self> {
        if elevation.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: elevation.dims(),
            });
        }
        if let Some(bad) = elevation.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "elevation contains non-finite value {bad}"
            )));
        }
        for (family, expected) in families.iter().zip(FaceOrientation::ALL) {
            if family.orientation() != expected {
                return Err(Error::InvalidParameter(format!(
                    "families must be ordered {:?}, found {:?} in {expected:?} slot",
                    FaceOrientation::ALL,
                    family.orientation()
                )));
            }
            // Length and positivity were validated by FaceFamily::new, but a
            // family built against different dims could still slip through.
            if family.values().len() != expected.face_count(dims) {
                return Err(Error::InvalidParameter(format!(
                    "{expected:?} family has {} values, mesh {dims} needs {}",
                    family.values().len(),
                    expected.face_count(dims)
                )));
            }
        }
        Ok(Self {
            dims,
            elevation,
            families,
        })
    }

    #[inline]
    pub fn dims(&self) -> MeshDims {
        self.dims
    }

    #[inline]
    pub fn elevation(&self) -> &CellField {
        &self.elevation
    }

    #[inline]
    pub fn family(&self, orientation: FaceOrientation) -> &FaceFamily {
        &self.families[FaceOrientation::ALL
            .iter()
            .position(|&o| o == orientation)
            .unwrap()]
    }

    /// Transmissibility stored for `desc`.
    #[inline]
    pub fn transmissibility(&self, desc: &FaceDescriptor) -> f32 {
        self.family(desc.orientation).values()[desc.face_index]
    }
}

/// Parameters of the analytic transmissibility / elevation generator.
///
/// Transmissibilities are `upsilon0 * (1 + 0.5 * sin(a*i + b*j + c*k + d*f))`
/// where `(i, j, k)` is the face's anchor cell and `f` the family ordinal
/// (0 = X, 1 = Y, 2 = Z, 3 = DiagPosPos, 4 = DiagPosNeg), so values stay in
/// `[0.5 * upsilon0, 1.5 * upsilon0]` — strictly positive — and no two
/// families repeat the same pattern. Elevation is `-dz * k` for layer `k`.
/// Everything is a pure `f32` evaluation: no RNG, reproducible anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub upsilon0: f32,
    pub a: f32,
    pub b: f32,
    pub c: f32,
    pub d: f32,
    /// Layer thickness: elevation drops by this much per z layer.
    pub dz: f32,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            upsilon0: 1.0,
            a: 0.7,
            b: 1.3,
            c: 2.1,
            d: 0.9,
            dz: 10.0,
        }
    }
}

impl GenParams {
    fn validate(&self) -> Result<()> {
        if !(self.upsilon0.is_finite() && self.upsilon0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "upsilon0 must be finite and positive, got {}",
                self.upsilon0
            )));
        }
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("dz", self.dz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "generator parameter {name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Transmissibility of the face anchored at cell `(i, j, k)` in family
    /// ordinal `family`.
    #[inline]
    fn upsilon_at(&self, i: usize, j: usize, k: usize, family: usize) -> f32 {
        let phase =
            self.a * i as f32 + self.b * j as f32 + self.c * k as f32 + self.d * family as f32;
        self.upsilon0 * (1.0 + 0.5 * phase.sin())
    }
}

/// Builds a mesh with analytic transmissibilities and layered elevation.
/// Purely deterministic: equal inputs produce bit-identical meshes.
pub fn generate_synthetic(dims: MeshDims, params: &GenParams) -> Result<Mesh> {
    params.validate()?;
    let MeshDims { nx, ny, nz } = dims;

    let mut elevation = CellField::zeros(dims);
    for z in 0..nz {
        let value = -params.dz * z as f32;
        for y in 0..ny {
            for x in 0..nx {
                elevation.set(x, y, z, value);
            }
        }
    }

    // Anchor-cell iteration ranges per family, x-fastest like cell storage.
    let family_values = |orientation: FaceOrientation, family: usize| -> Vec<f32> {
        let (rx, ry, rz) = match orientation {
            FaceOrientation::X => (nx - 1, ny, nz),
            FaceOrientation::Y => (nx, ny - 1, nz),
            FaceOrientation::Z => (nx, ny, nz - 1),
            FaceOrientation::DiagPosPos | FaceOrientation::DiagPosNeg => (nx - 1, ny - 1, nz),
        };
        let mut values = Vec::with_capacity(rx * ry * rz);
        for k in 0..rz {
            for j in 0..ry {
                for i in 0..rx {
                    values.push(params.upsilon_at(i, j, k, family));
                }
            }
        }
        values
    };

    let families = [
        FaceFamily::new(FaceOrientation::X, dims, family_values(FaceOrientation::X, 0))?,
        FaceFamily::new(FaceOrientation::Y, dims, family_values(FaceOrientation::Y, 1))?,
        FaceFamily::new(FaceOrientation::Z, dims, family_values(FaceOrientation::Z, 2))?,
        FaceFamily::new(
            FaceOrientation::DiagPosPos,
            dims,
            family_values(FaceOrientation::DiagPosPos, 3),
        )?,
        FaceFamily::new(
            FaceOrientation::DiagPosNeg,
            dims,
            family_values(FaceOrientation::DiagPosNeg, 4),
        )?,
    ];

    Mesh::new(dims, elevation, families)
}

/// Parameters of the analytic pressure-field generator:
/// `p(x, y, z) = p_ref + amplitude * sin(alpha*x + beta*y + gamma*z + delta*app)`.
///
/// With `delta != 0`, distinct application indices give distinct fields, so a
/// run of N applications exercises N genuinely different inputs without any
/// stored data or RNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldParams {
    pub p_ref: f32,
    pub amplitude: f32,
    pub alpha: f32,
    pub beta: f32,
    pub gamma: f32,
    pub delta: f32,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            p_ref: 1.0e7,
            amplitude: 5.0e5,
            alpha: 0.5,
            beta: 0.8,
            gamma: 1.1,
            delta: 2.3,
        }
    }
}

impl FieldParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_ref", self.p_ref),
            ("amplitude", self.amplitude),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "field parameter {name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Pressure of cell `(x, y, z)` for application `app_index`.
    #[inline]
    pub fn pressure_at(&self, x: usize, y: usize, z: usize, app_index: u32) -> f32 {
        let phase = self.alpha * x as f32
            + self.beta * y as f32
            + self.gamma * z as f32
            + self.delta * app_index as f32;
        self.p_ref + self.amplitude * phase.sin()
    }
}

/// Evaluates the analytic pressure field for one application index.
pub fn pressure_field(dims: MeshDims, app_index: u32, params: &FieldParams) -> Result<CellField> {
    params.validate()?;
    let mut field = CellField::zeros(dims);
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                field.set(x, y, z, params.pressure_at(x, y, z, app_index));
            }
        }
    }
    Ok(field)
}
