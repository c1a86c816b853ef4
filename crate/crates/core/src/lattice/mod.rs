//! Discretized cubes, fields and the magnetic quadratic form.
//!
//! The magnetic potential lives on lattice links as phases, so gauge
//! transformations and the diamagnetic inequality hold exactly on the grid.

mod cube;
mod field;
mod form;
mod grid;
pub mod io;
mod mask;

pub use cube::Cube;
pub use field::{CellField, GridFunction, MagneticPotential, ScalarPotential, VectorPotential};
pub use form::{
    dirichlet_energy, integrate, integrate_sampled, l2_norm_sq, l2_norm_sq_on, magnetic_gradient, mean,
    quadratic_form, quadratic_form_sampled, FormLink, FormOperator, LinkValues,
};
pub use grid::{rasterize, Grid};
pub use mask::{CompactSetMask, DomainMask, DomainRule};
