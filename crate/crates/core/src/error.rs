//! Error type shared across the library.

use crate::mesh::MeshDims;

/// Everything that can go wrong in this library, from bad constructor
/// arguments to protocol faults detected inside the fabric simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or generator was handed an argument that violates its
    /// contract (non-positive dimension, non-finite parameter, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A cell coordinate fell outside the mesh.
    #[error("cell ({x}, {y}, {z}) out of bounds for mesh {nx}x{ny}x{nz}")]
    OutOfBounds {
        x: usize,
        y: usize,
        z: usize,
        nx: usize,
        ny: usize,
        nz: usize,
    },

    /// Two fields (or a field and a mesh) disagree on their dimensions.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: MeshDims, actual: MeshDims },

    /// A binary file did not start with the expected magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    /// A binary file declared a format version this build does not read.
    #[error("unsupported format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    /// A binary file ended before all declared payload bytes were read.
    #[error("truncated file: {context}")]
    Truncated { context: &'static str },

    /// Declared dimensions whose cell or face count does not fit in memory.
    #[error("dimensions {nx}x{ny}x{nz} overflow addressable memory")]
    DimensionOverflow { nx: u64, ny: u64, nz: u64 },

    /// A PE finished an exchange phase still waiting on a message that can
    /// never arrive. This indicates a protocol bug, never a user error.
    #[error("protocol deadlock: PE ({px}, {py}) never received {what} on color {color}")]
    Deadlock {
        px: usize,
        py: usize,
        color: u8,
        what: &'static str,
    },

    /// Underlying I/O failure while reading or writing a file.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
