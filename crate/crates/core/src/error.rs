use core::fmt;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A grid spec violates its invariants.
    InvalidGrid(&'static str),
    /// Rasterization produced no INSIDE cell.
    EmptyDomain,
    /// Rasterization produced no BOUNDARY cell.
    DegenerateDomain,
    /// An INSIDE cell sits closer to the grid edge than the stencil reach.
    GridTooSmall,
    /// A region query matched no cell center.
    EmptyRegion,
    /// A region was built with a non-positive radius or mismatched center.
    InvalidRegion,
    /// Boundary data is NaN or infinite at the given flat cell index.
    NonFiniteBoundary { cell: usize },
    /// Solver parameters or stencil spec out of range.
    InvalidParams(&'static str),
    /// The iteration cap was reached before the residual target.
    NoConvergence { sweeps: usize, residual: f64 },
    /// A sample-domain shape parameter is out of range.
    BadShapeParam(&'static str),
    /// Exponent or decay parameters out of range.
    BadParam(&'static str),
    /// A uniform-condition witness violates its invariants.
    InvalidWitness(&'static str),
    /// A vector expected on the unit sphere was not.
    NotUnitVector { norm: f64 },
    /// A point expected on a sphere `|x - x0| = r` was too far from it.
    OffSphere { distance: f64 },
    /// The grid is too coarse for the requested barrier computation.
    ResolutionTooCoarse,
    /// The estimated decay factor left the open interval (0, 1).
    MuOutOfRange { mu: f64 },
    /// Fewer usable scales than a fit needs.
    TooFewScales { found: usize },
    /// An oscillation vanished, so its logarithm is undefined.
    DegenerateOscillation,
    /// A function required to be nonnegative was not.
    NegativeInput { min: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::EmptyDomain => f.write_str("domain has no INSIDE cell"),
            Error::DegenerateDomain => f.write_str("domain has no BOUNDARY cell"),
            Error::GridTooSmall => {
                f.write_str("grid does not leave stencil reach around the domain")
            }
            Error::EmptyRegion => f.write_str("region contains no cell center"),
            Error::InvalidRegion => f.write_str("invalid region"),
            Error::NonFiniteBoundary { cell } => {
                write!(f, "boundary value at cell {cell} is not finite")
            }
            Error::InvalidParams(why) => write!(f, "invalid parameters: {why}"),
            Error::NoConvergence { sweeps, residual } => {
                write!(f, "no convergence after {sweeps} sweeps (residual {residual:e})")
            }
            Error::BadShapeParam(why) => write!(f, "bad shape parameter: {why}"),
            Error::BadParam(why) => write!(f, "bad parameter: {why}"),
            Error::InvalidWitness(why) => write!(f, "invalid witness: {why}"),
            Error::NotUnitVector { norm } => write!(f, "expected a unit vector, got norm {norm}"),
            Error::OffSphere { distance } => {
                write!(f, "point is {distance:e} away from the sphere")
            }
            Error::ResolutionTooCoarse => f.write_str("grid resolution too coarse"),
            Error::MuOutOfRange { mu } => write!(f, "estimated mu = {mu} is outside (0, 1)"),
            Error::TooFewScales { found } => {
                write!(f, "need at least 4 usable scales, found {found}")
            }
            Error::DegenerateOscillation => f.write_str("oscillation vanishes at some scale"),
            Error::NegativeInput { min } => write!(f, "input has negative minimum {min}"),
        }
    }
}

impl core::error::Error for Error {}
