//! Analysis of the Z12-equivariant planar family
//! `z' = p z^5 zbar^4 + s z^6 zbar^5 - zbar^11`: equilibria and their
//! classification, the reduction to a periodic Abel equation, and numerical
//! location of the limit cycles that surround the origin.

pub mod abel;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod geometry;
pub mod model;
pub mod ode;
pub mod report;

pub use error::{Error, Result};
pub use model::{Params, PlanePoint, PolarPoint};
