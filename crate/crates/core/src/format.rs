//! Binary persistence for meshes and cell fields.
//!
//! Both formats are little-endian and dead simple:
//!
//! ```text
//! mesh file:   "FVM1" | u32 version=1 | u32 nx | u32 ny | u32 nz
//!              | elevation f32[nx*ny*nz]
//!              | X family | Y family | Z family
//!              | DiagPosPos family | DiagPosNeg family
//! field file:  "FVF1" | u32 version=1 | u32 nx | u32 ny | u32 nz
//!              | values f32[nx*ny*nz]
//! ```
//!
//! Cell-sized arrays are stored x-fastest, face families in their anchor
//! order (see [`crate::mesh::face_in_direction`]). Round trips are exact:
//! every `f32` is written and read back bit for bit.
//!
//! Failure modes are kept distinct so callers can tell a wrong file from a
//! damaged one: bad magic, unsupported version, truncated payload, and
//! dimensions too large to address.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{CellField, FaceFamily, FaceOrientation, Mesh, MeshDims};

const MESH_MAGIC: [u8; 4] = *b"FVM1";
const FIELD_MAGIC: [u8; 4] = *b"FVF1";
const VERSION: u32 = 1;

fn write_header<W: Write>(w: &mut W, magic: [u8; 4], dims: MeshDims) -> Result<()> {
    w.write_all(&magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [dims.nx, dims.ny, dims.nz] {
        let n = u32::try_from(n).map_err(|_| Error::DimensionOverflow {
            nx: dims.nx as u64,
            ny: dims.ny as u64,
            nz: dims.nz as u64,
        })?;
        w.write_all(&n.to_le_bytes())?;
    }
    Ok(())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_magic<R: Read>(r: &mut R, expected: [u8; 4]) -> Result<()> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated {
                context: "magic bytes",
            }
        } else {
            Error::Io(e)
        }
    })?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, context: &'static str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated { context }
        } else {
            Error::Io(e)
        }
    })?;
    Ok(u32::from_le_bytes(buf))
}

fn read_header<R: Read>(r: &mut R, magic: [u8; 4]) -> Result<MeshDims> {
    read_magic(r, magic)?;
    let version = read_u32(r, "format version")?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let nx = read_u32(r, "nx")? as u64;
    let ny = read_u32(r, "ny")? as u64;
    let nz = read_u32(r, "nz")? as u64;
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| Error::DimensionOverflow { nx, ny, nz });
    // MeshDims::new re-checks the product against addressable memory and
    // reports zero extents as invalid.
    MeshDims::new(to_usize(nx)?, to_usize(ny)?, to_usize(nz)?)
}

/// Reads exactly `count` little-endian `f32`s without trusting the header:
/// the buffer grows with the bytes actually present, so a hostile count on a
/// short file errors out instead of allocating the advertised size.
fn read_f32s<R: Read>(r: &mut R, count: usize, context: &'static str) -> Result<Vec<f32>> {
    let byte_len = count as u64 * 4;
    let mut bytes = Vec::new();
    r.take(byte_len).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < byte_len {
        return Err(Error::Truncated { context });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes a mesh to `w` in the `FVM1` layout.
pub fn save_mesh<W: Write>(mesh: &Mesh, w: &mut W) -> Result<()> {
    write_header(w, MESH_MAGIC, mesh.dims())?;
    write_f32s(w, mesh.elevation().values())?;
    for orientation in FaceOrientation::ALL {
        write_f32s(w, mesh.family(orientation).values())?;
    }
    Ok(())
}

/// Reads a mesh written by [`save_mesh`], revalidating every invariant.
pub fn load_mesh<R: Read>(r: &mut R) -> Result<Mesh> {
    let dims = read_header(r, MESH_MAGIC)?;
    let elevation = CellField::from_values(dims, read_f32s(r, dims.cell_count(), "elevation")?)?;
    let mut families = Vec::with_capacity(FaceOrientation::ALL.len());
    for orientation in FaceOrientation::ALL {
        let values = read_f32s(r, orientation.face_count(dims), "face family")?;
        families.push(FaceFamily::new(orientation, dims, values)?);
    }
    let families: [FaceFamily; 5] = families
        .try_into()
        .expect("exactly five families were read");
    Mesh::new(dims, elevation, families)
}

/// Writes a cell field to `w` in the `FVF1` layout.
pub fn save_field<W: Write>(field: &CellField, w: &mut W) -> Result<()> {
    write_header(w, FIELD_MAGIC, field.dims())?;
    write_f32s(w, field.values())
}

/// Reads a cell field written by [`save_field`].
pub fn load_field<R: Read>(r: &mut R) -> Result<CellField> {
    let dims = read_header(r, FIELD_MAGIC)?;
    CellField::from_values(dims, read_f32s(r, dims.cell_count(), "field values")?)
}

pub fn save_mesh_file<P: AsRef<Path>>(mesh: &Mesh, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    save_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_mesh_file<P: AsRef<Path>>(path: P) -> Result<Mesh> {
    load_mesh(&mut BufReader::new(File::open(path)?))
}

pub fn save_field_file<P: AsRef<Path>>(field: &CellField, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    save_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_field_file<P: AsRef<Path>>(path: P) -> Result<CellField> {
    load_field(&mut BufReader::new(File::open(path)?))
}
