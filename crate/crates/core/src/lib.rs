//! Spectral solver and verification toolkit for nonlocal peridynamic diffusion
//! on flat tori.

pub mod analysis;
pub mod bessel;
pub mod compensated;
pub mod error;
pub mod evolution;
pub mod hypergeom;
pub mod multiplier;
pub mod profiles;
pub mod quadrature;
pub mod torus;

pub use error::{Error, Result};
pub use multiplier::{multiplier, multiplier_table, MultiplierTable, OperatorParams};
pub use profiles::{builtin_profile, Profile};
pub use torus::{SobolevIndex, SpectralField, TorusGeometry};
