//! Finite-depth model of the transverse structure of the universal
//! hyperbolic solenoid over the punctured-torus group.

pub mod covers;
pub mod cusp;
pub mod family;
pub mod group;

pub use covers::{profinite_dist, subgroups_of_index_at_most, CoreChain, CosetSpace, FiniteCover, ProfiniteDistance};
pub use family::{example43_family, tlc_lift, transverse_continuity_modulus, LeafwiseLamination};
pub use group::{GroupWord, Letter};
