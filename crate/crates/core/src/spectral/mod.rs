//! Bottoms of the Dirichlet and Neumann spectra of the discrete magnetic
//! Schrödinger form on a cube, and the local magnetic energy `μ₀`.

mod lobpcg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CellField, DomainMask, FormOperator, Grid, GridFunction, MagneticPotential, ScalarPotential};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Solver controls. `max_iter = None` means `10·mⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions<T> {
    pub tol: T,
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-8), max_iter: None, seed: 0x5eed }
    }
}

impl<T: Real> EigenOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Smallest Rayleigh quotient of the discrete form together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralBottom<T> {
    pub value: T,
    /// `‖Ax − λMx‖_{M⁻¹} / max(|λ|, d⁻²)` at exit.
    pub residual: T,
    pub iterations: usize,
    pub kind: BoundaryKind,
    /// Minimizer, `M`-normalized; `None` when the admissible space is empty.
    pub eigenvector: Option<GridFunction<T>>,
}

/// `μ₀` and its normalized form `μ̃₀ = μ₀ d²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergy<T> {
    pub mu0: T,
    pub mu0_tilde: T,
}

fn pinned_nodes<T: Real>(grid: &Grid<T>, kind: BoundaryKind, mask: Option<&DomainMask<T>>) -> Result<Vec<bool>> {
    let mut pinned = match mask {
        Some(m) => {
            grid.ensure_same(m.grid(), "domain mask")?;
            m.pinned_nodes()
        }
        None => vec![false; grid.node_count()],
    };
    if kind == BoundaryKind::Dirichlet {
        for (i, p) in pinned.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                *p = true;
            }
        }
    }
    Ok(pinned)
}

/// Spectral bottom for already-sampled data.
pub fn spectral_bottom_sampled<T: Real>(
    a: &MagneticPotential<T>,
    v: &CellField<T>,
    kind: BoundaryKind,
    mask: Option<&DomainMask<T>>,
    opts: &EigenOptions<T>,
) -> Result<SpectralBottom<T>> {
    if !(opts.tol > T::zero()) {
        return Err(Error::Precondition("eigen tolerance must be positive".into()));
    }
    let pinned = pinned_nodes(a.grid(), kind, mask)?;
    bottom_with_pinned(a, v, &pinned, kind, opts)
}

/// Smallest Rayleigh quotient over functions vanishing on the `pinned` nodes; `kind` only labels the result.
pub fn bottom_with_pinned<T: Real>(
    a: &MagneticPotential<T>,
    v: &CellField<T>,
    pinned: &[bool],
    kind: BoundaryKind,
    opts: &EigenOptions<T>,
) -> Result<SpectralBottom<T>> {
    if !(opts.tol > T::zero()) {
        return Err(Error::Precondition("eigen tolerance must be positive".into()));
    }
    let grid = a.grid();
    let op = FormOperator::assemble(a, v, pinned)?;
    if op.dim() == 0 {
        // infimum over an empty admissible space
        return Ok(SpectralBottom {
            value: T::lit(f64::INFINITY),
            residual: T::zero(),
            iterations: 0,
            kind,
            eigenvector: None,
        });
    }
    let d = grid.cube().edge();
    let scale = T::one() / (d * d);
    let max_iter = opts.max_iter.unwrap_or(10 * grid.node_count());
    let pair = lobpcg::smallest_eigenpair(&op, opts.tol, scale, max_iter, opts.seed)?;
    let clamp = T::lit(1e-12).max(T::eps() * T::lit(64.0)) * op.spectral_radius_bound().max(T::one());
    let value = if pair.value < T::zero() && pair.value > -clamp { T::zero() } else { pair.value };
    Ok(SpectralBottom {
        value,
        residual: pair.residual,
        iterations: pair.iterations,
        kind,
        eigenvector: Some(op.to_grid_function(&pair.vector)),
    })
}

/// `λ(Q_d; H_{a,V})`, or `λ_Ω` when a domain mask is given.
pub fn dirichlet_bottom<T: Real>(
    grid: &Grid<T>,
    a: &MagneticPotential<T>,
    v: &ScalarPotential<T>,
    mask: Option<&DomainMask<T>>,
    opts: &EigenOptions<T>,
) -> Result<SpectralBottom<T>> {
    grid.ensure_same(a.grid(), "dirichlet_bottom")?;
    spectral_bottom_sampled(a, &v.sample(grid)?, BoundaryKind::Dirichlet, mask, opts)
}

/// `μ(Q_d; H_{a,V})`, or `μ_Ω` when a domain mask is given.
pub fn neumann_bottom<T: Real>(
    grid: &Grid<T>,
    a: &MagneticPotential<T>,
    v: &ScalarPotential<T>,
    mask: Option<&DomainMask<T>>,
    opts: &EigenOptions<T>,
) -> Result<SpectralBottom<T>> {
    grid.ensure_same(a.grid(), "neumann_bottom")?;
    spectral_bottom_sampled(a, &v.sample(grid)?, BoundaryKind::Neumann, mask, opts)
}

/// Local magnetic energy `μ₀ = μ(Q_d; H_{a,0})` (or `μ_{0,Ω}`).
pub fn local_energy<T: Real>(
    grid: &Grid<T>,
    a: &MagneticPotential<T>,
    mask: Option<&DomainMask<T>>,
    opts: &EigenOptions<T>,
) -> Result<LocalEnergy<T>> {
    let bottom = neumann_bottom(grid, a, &ScalarPotential::zero(), mask, opts)?;
    Ok(energy_from_bottom(grid, bottom.value))
}

pub(crate) fn energy_from_bottom<T: Real>(grid: &Grid<T>, mu0: T) -> LocalEnergy<T> {
    let d = grid.cube().edge();
    LocalEnergy { mu0, mu0_tilde: mu0 * d * d }
}
