//! Numerical toolkit for the spectrum of magnetic Schrödinger operators
//! `H_{a,V} = (−i∇ + a)² + V`: lattice forms, spectral bottoms, Wiener capacity,
//! the Molchanov functional and the cube-tiling discreteness criteria.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the working precision.

pub mod capacity;
pub mod criteria;
pub mod error;
pub mod examples;
pub mod lattice;
pub mod molchanov;
pub mod scalar;
pub mod spectral;
pub mod testbench;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Cube64 = lattice::Cube<f64>;
pub type Grid64 = lattice::Grid<f64>;
pub type GridFunction64 = lattice::GridFunction<f64>;
pub type MagneticPotential64 = lattice::MagneticPotential<f64>;
pub type VectorPotential64 = lattice::VectorPotential<f64>;
pub type ScalarPotential64 = lattice::ScalarPotential<f64>;
pub type CompactSetMask64 = lattice::CompactSetMask<f64>;

pub type Cube32 = lattice::Cube<f32>;
pub type Grid32 = lattice::Grid<f32>;
pub type GridFunction32 = lattice::GridFunction<f32>;
pub type MagneticPotential32 = lattice::MagneticPotential<f32>;
pub type VectorPotential32 = lattice::VectorPotential<f32>;
pub type ScalarPotential32 = lattice::ScalarPotential<f32>;
pub type CompactSetMask32 = lattice::CompactSetMask<f32>;
