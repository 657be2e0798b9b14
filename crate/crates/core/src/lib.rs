//! Numerical verification toolkit for the fractional Hardy and
//! Hardy–Sobolev–Maz'ya inequalities.
//!
//! Modules follow the data flow: `special` and `geometry` provide constants
//! and distances, `quadrature` discretizes the singular integrals, and
//! `gsr`, `onedim`, `verify` assemble identities and inequalities on top.

pub mod error;
pub mod geometry;
pub mod gsr;
pub mod integrate;
pub mod onedim;
pub mod optim;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{FracError, Result};
pub use geometry::Domain;
pub use special::{ConstantBundle, FracParams};
