use thiserror::Error;

use crate::group::{GroupPoint, GroupSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("point {point} does not belong to {group}")]
    PointNotInGroup {
        point: GroupPoint,
        group: GroupSpace,
    },

    #[error("group mismatch: expected {expected}, found {found}")]
    SpaceMismatch {
        expected: GroupSpace,
        found: GroupSpace,
    },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("duplicate support point {0}")]
    DuplicatePoint(GroupPoint),

    #[error("operation requires a lattice group, found {0}")]
    NotLattice(GroupSpace),

    #[error("measure is not {0}")]
    MeasureNotInvariant(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius {radius} is smaller than 10 grid cells of spacing {grid_h}")]
    RadiusTooSmall { radius: f64, grid_h: f64 },

    #[error("derivative order {0} is not supported (maximum 2)")]
    UnsupportedOrder(usize),

    #[error("function provides analytic derivatives up to order {available}, order {requested} requested")]
    InsufficientDerivatives { requested: usize, available: usize },

    #[error("precondition violated at {point}: {reason}")]
    Precondition { reason: String, point: GroupPoint },

    #[error("signal interpretations differ")]
    InterpretationMismatch,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
