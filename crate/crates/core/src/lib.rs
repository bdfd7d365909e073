//! Steady-state and linear-response model of a driven microwave cavity
//! coupled to a flux qubit.
//!
//! Units: time in ns, angular frequencies and rates in rad/ns.

pub mod exec;
pub mod linalg;
pub mod params;
pub mod response;
pub mod specfun;
pub mod spectrum;
pub mod steadystate;
pub mod superharmonic;
pub mod sweep;

pub use num_complex::Complex64;
pub use params::{derive, DerivedParams, DriveConfig, PhysicalConfig};
pub use steadystate::{Branch, FixedPoint, ResponseCoeffs, Stability};
