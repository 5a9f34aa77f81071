//! Numerical laboratory for minimal graphs in Fermi coordinates: forward
//! solver and DN map, higher linearizations and their integral identities,
//! complex geometric optics with Neumann-series remainders, stationary-phase
//! recovery, and the Calderon-side checks (gauge, holomorphic traces,
//! Carleman ratios, WKB, homology periods).

pub mod error;
pub mod geometry;
pub mod pde_core;
pub mod forward;
pub mod linearize;
pub mod cgo;
pub mod asymptotics;
pub mod calderon;
pub mod cli;

pub use error::{Error, Result};
