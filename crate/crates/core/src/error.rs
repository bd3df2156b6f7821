use thiserror::Error;

/// Errors raised by the quadric toolkit.
///
/// The variants are grouped by [`ErrorKind`] so front ends can map them onto
/// stable exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree < 2: quadratic part vanishes")]
    DegreeTooLow,

    #[error("empty real locus")]
    EmptyRealLocus,

    #[error("zero scale")]
    ZeroScale,

    #[error("not orthonormal")]
    NotOrthonormal,

    #[error("no convergence after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("component index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("rank deficient: nullspace dimension {nullity}")]
    RankDeficient { nullity: usize },

    #[error("v on H1 or H2")]
    PointOnHyperplane,

    #[error("pencil dimension != 2 (found {found})")]
    PencilDimension { found: usize },

    #[error("point outside L2 (distance {distance:.3e})")]
    OutsideL2 { distance: f64 },

    #[error("ray never exits")]
    RayNeverExits,

    #[error("hyperplane misses interior (closest approach {distance:.3e})")]
    HyperplaneMissesInterior { distance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    EmptyLocus,
    Schema,
    Geometric,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EmptyRealLocus => ErrorKind::EmptyLocus,
            Error::DimensionMismatch { .. }
            | Error::DegreeTooLow
            | Error::ZeroScale
            | Error::IndexOutOfRange { .. }
            | Error::InvalidInput(_) => ErrorKind::Schema,
            Error::NotOrthonormal
            | Error::RankDeficient { .. }
            | Error::PointOnHyperplane
            | Error::PencilDimension { .. }
            | Error::OutsideL2 { .. }
            | Error::RayNeverExits
            | Error::HyperplaneMissesInterior { .. } => ErrorKind::Geometric,
            Error::NoConvergence { .. } => ErrorKind::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
