use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong when building or querying grid objects.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimension outside `1..=MAX_DIM`.
    Dimension(usize),
    /// A cube that is not part of the rooted grid (outside the root or
    /// below the finest level).
    NotInGrid,
    /// Two objects that should share a grid do not.
    GridMismatch,
    /// Value array length does not match the grid.
    Length { expected: usize, found: usize },
    /// A value that must be finite is not.
    NonFinite,
    /// A weight value that must be strictly positive is not.
    NonPositive,
    /// A shift coefficient below zero.
    NegativeCoefficient,
    /// Ancestor lookup beyond the root (or above level `i32::MIN`).
    NoAncestor { level: i32, generations: u32 },
    /// A parameter outside its admissible range.
    Parameter(&'static str),
    /// A computation refused because the instance is too large.
    TooLarge(&'static str),
    /// Operation undefined for the zero function.
    ZeroFunction,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(d) => write!(f, "dimension {d} outside 1..={}", crate::MAX_DIM),
            Error::NotInGrid => f.write_str("cube is not part of the rooted grid"),
            Error::GridMismatch => f.write_str("objects live on different grids"),
            Error::Length { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Error::NonFinite => f.write_str("value is not finite"),
            Error::NonPositive => f.write_str("weight value is not strictly positive"),
            Error::NegativeCoefficient => f.write_str("shift coefficient is negative"),
            Error::NoAncestor { level, generations } => write!(
                f,
                "cube at level {level} has no ancestor {generations} generations up in this grid"
            ),
            Error::Parameter(what) => write!(f, "parameter out of range: {what}"),
            Error::TooLarge(what) => write!(f, "instance too large: {what}"),
            Error::ZeroFunction => f.write_str("function is identically zero"),
        }
    }
}

impl core::error::Error for Error {}
