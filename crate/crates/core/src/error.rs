use thiserror::Error;

use crate::lamination::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not in SL(2,R) after normalization (det = {det})")]
    InvalidMobius { det: f64 },

    #[error("comparison map is not hyperbolic (|trace| = {trace})")]
    NonHyperbolic { trace: f64 },

    #[error("geodesic endpoints coincide (separation {separation:e})")]
    DegenerateGeodesic { separation: f64 },

    #[error("point lies on the geodesic; use the fault-side evaluation instead")]
    PointOnGeodesic,

    #[error("point is not in the open unit disk")]
    OutsideDisk,

    #[error("box corners are not distinct and counterclockwise")]
    InvalidBox,

    #[error("an atom endpoint or breakpoint collides with box corner {corner}")]
    BoxCornerCollision { corner: usize },

    #[error("invalid lamination: {0}")]
    InvalidLamination(Violation),

    #[error("not an earthquake boundary map: {0}")]
    NotEarthquakeMap(String),

    #[error("invalid circle map: {0}")]
    InvalidCircleMap(String),

    #[error("earthquake time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("subgroup enumeration capped at index {cap}, requested {requested}")]
    IndexCapExceeded { requested: usize, cap: usize },

    #[error("quotient at depth {depth} exceeds {cap} elements")]
    QuotientTooLarge { depth: usize, cap: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("seed word {word} is not hyperbolic under the representation")]
    NonHyperbolicSeed { word: String },

    #[error("truncated orbit crosses itself: conjugators {first} and {second}")]
    OrbitCrossing { first: String, second: String },

    #[error("coset selection unsatisfiable at level {level}: {reason}")]
    CosetSelection { level: usize, reason: String },

    #[error("depth mismatch: expected {expected}, got {found}")]
    DepthMismatch { expected: usize, found: usize },

    #[error("box {box_index} has corner {corner} on an atom endpoint")]
    BoxOnEndpoint { box_index: usize, corner: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("family carries no orbit data")]
    MissingOrbitData,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
