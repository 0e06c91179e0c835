//! Close-packed crystal analysis toolkit.
//!
//! Builds and validates a class of short-ranged pair/three-body interatomic
//! potentials with a deep narrow well at unit distance, evaluates the
//! associated two-plus-three-body energy on finite and periodic
//! configurations, classifies local neighborhoods against the two 12-point
//! kissing polyhedra (cuboctahedron / twisted cuboctahedron), grows discrete
//! reference configurations for rigidity diagnostics, enumerates admissible
//! lattice paths with their reflection symmetries, and assembles the
//! structural / elastic / defect energy ledger.

pub mod decomp;
pub mod embed;
pub mod energy;
pub mod error;
pub mod io;
pub mod lattice;
pub mod paths;
pub mod potential;
pub mod relax;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
