//! Earthquake maps along finite measured laminations, the Liouville measure
//! with Hölder and Fréchet norms, and a finite-depth model of the transverse
//! structure of the universal hyperbolic solenoid.

// NaN must fail range checks, so they are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle_map;
pub mod cli;
mod dd;
pub mod earthquake;
pub mod error;
pub mod experiments;
pub mod hyperbolic;
pub mod lamination;
pub mod liouville;
pub mod quadrature;
pub mod solenoid;

pub use error::{Error, Result};
pub use hyperbolic::{BoundaryPoint, DiskPoint, Geodesic, GeodesicBox, MobiusMap};
pub use lamination::{Atom, MeasuredLamination, Violation};
pub use circle_map::PiecewiseMobiusCircleMap;
pub use earthquake::{Convention, EarthquakeMap, FaultSide};
