use num_complex::Complex;

use super::field::{CellField, GridFunction, MagneticPotential, ScalarPotential};
use super::grid::Grid;
use super::mask::CompactSetMask;
use crate::error::{Error, Result};
use crate::scalar::{norm_sq, Real};

/// Magnetic differences `(u_j e^{iθ(i→j)} − u_i)/h` on every directed lattice link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkValues<T> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> LinkValues<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Value on `i → i + e_axis`; zero where the link leaves the cube.
    pub fn value(&self, axis: usize, i: usize) -> Complex<T> {
        self.values[axis * self.grid.node_count() + i]
    }

    /// Value on the reversed link `i + e_axis → i`, i.e. `−e^{−iθ}` times the forward value.
    pub fn reversed_value(&self, a: &MagneticPotential<T>, axis: usize, i: usize) -> Complex<T> {
        -(a.reversed_phase(axis, i).cis()) * self.value(axis, i)
    }

    /// `Σ_links w_link |D|²`: the kinetic part of the form.
    pub fn energy(&self) -> T {
        let nn = self.grid.node_count();
        let mut acc = T::zero();
        for axis in 0..self.grid.dim() {
            for i in 0..nn {
                if self.grid.has_link(axis, i) {
                    acc += self.grid.link_weight(axis, i) * norm_sq(self.values[axis * nn + i]);
                }
            }
        }
        acc
    }
}

/// Discrete magnetic gradient `∇_a u`.
pub fn magnetic_gradient<T: Real>(u: &GridFunction<T>, a: &MagneticPotential<T>) -> Result<LinkValues<T>> {
    u.grid().ensure_same(a.grid(), "magnetic_gradient")?;
    let g = u.grid();
    let nn = g.node_count();
    let inv_h = T::one() / g.h();
    let vals = u.values();
    let mut values = vec![Complex::new(T::zero(), T::zero()); g.dim() * nn];
    for axis in 0..g.dim() {
        let s = g.stride(axis);
        for i in 0..nn {
            if g.has_link(axis, i) {
                let z = a.phase(axis, i).cis();
                values[axis * nn + i] = (vals[i + s] * z - vals[i]) * inv_h;
            }
        }
    }
    Ok(LinkValues { grid: g.clone(), values })
}

/// `∫(|∇_a u|² + V|u|²)`: link quadrature for the gradient, cell-sampled `V` spread to nodes by trapezoid shares.
pub fn quadratic_form<T: Real>(
    u: &GridFunction<T>,
    a: &MagneticPotential<T>,
    v: &ScalarPotential<T>,
) -> Result<T> {
    let cells = v.sample(u.grid())?;
    quadratic_form_sampled(u, a, &cells)
}

pub fn quadratic_form_sampled<T: Real>(
    u: &GridFunction<T>,
    a: &MagneticPotential<T>,
    v: &CellField<T>,
) -> Result<T> {
    u.grid().ensure_same(v.grid(), "quadratic_form")?;
    let kinetic = magnetic_gradient(u, a)?.energy();
    let w = v.nodal_weights();
    let potential: T = u.values().iter().zip(&w).map(|(z, &wi)| norm_sq(*z) * wi).sum();
    Ok(kinetic + potential)
}

/// `∫|∇u|²` without magnetic phases.
pub fn dirichlet_energy<T: Real>(u: &GridFunction<T>) -> T {
    let a = MagneticPotential::zero(u.grid().clone());
    magnetic_gradient(u, &a).map(|l| l.energy()).unwrap_or_else(|_| T::zero())
}

/// `‖u‖²` with trapezoid weights.
pub fn l2_norm_sq<T: Real>(u: &GridFunction<T>) -> T {
    let g = u.grid();
    u.values().iter().enumerate().map(|(i, z)| norm_sq(*z) * g.node_weight(i)).sum()
}

/// Trapezoid mean `d⁻ⁿ ∫ u`.
pub fn mean<T: Real>(u: &GridFunction<T>) -> Complex<T> {
    let g = u.grid();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, z) in u.values().iter().enumerate() {
        acc += z * g.node_weight(i);
    }
    acc / g.cube().volume()
}

/// `∫_region V` over the cells of a mask.
pub fn integrate<T: Real>(v: &ScalarPotential<T>, region: &CompactSetMask<T>) -> Result<T> {
    let cells = v.sample(region.grid())?;
    integrate_sampled(&cells, region)
}

pub fn integrate_sampled<T: Real>(v: &CellField<T>, region: &CompactSetMask<T>) -> Result<T> {
    v.grid().ensure_same(region.grid(), "integrate")?;
    let vol = region.grid().cell_volume();
    Ok(region.indices().map(|c| v.values()[c]).sum::<T>() * vol)
}

/// `∫_region |u|²` with each cell's integral approximated by the corner mean.
pub fn l2_norm_sq_on<T: Real>(u: &GridFunction<T>, region: &CompactSetMask<T>) -> Result<T> {
    u.grid().ensure_same(region.grid(), "l2_norm_sq_on")?;
    let g = u.grid();
    let share = g.cell_volume() / T::from_usize_lossy(1 << g.dim());
    let mut acc = T::zero();
    for c in region.indices() {
        for i in g.cell_corners(c) {
            acc += norm_sq(u.values()[i]) * share;
        }
    }
    Ok(acc)
}

/// One link between two free unknowns of an assembled form.
#[derive(Debug, Clone, Copy)]
pub struct FormLink<T> {
    pub a: u32,
    pub b: u32,
    pub weight: T,
    /// `e^{iθ(a→b)}`.
    pub phase: Complex<T>,
}

const PINNED: u32 = u32::MAX;

/// The Hermitian matrix of the discrete form restricted to free (unpinned) nodes,
/// together with the lumped mass matrix.
#[derive(Debug, Clone)]
pub struct FormOperator<T> {
    grid: Grid<T>,
    free_of_node: Vec<u32>,
    node_of_free: Vec<u32>,
    links: Vec<FormLink<T>>,
    diag: Vec<T>,
    mass: Vec<T>,
}

impl<T: Real> FormOperator<T> {
    /// Assembles the form; nodes with `pinned[i]` are eliminated (test functions vanish there).
    pub fn assemble(a: &MagneticPotential<T>, v: &CellField<T>, pinned: &[bool]) -> Result<Self> {
        let g = a.grid();
        g.ensure_same(v.grid(), "form assembly")?;
        let nn = g.node_count();
        if pinned.len() != nn {
            return Err(Error::ShapeMismatch("pinned flags differ from node count".into()));
        }
        let mut free_of_node = vec![PINNED; nn];
        let mut node_of_free = Vec::new();
        for i in 0..nn {
            if !pinned[i] {
                free_of_node[i] = node_of_free.len() as u32;
                node_of_free.push(i as u32);
            }
        }
        let nf = node_of_free.len();
        let pot = v.nodal_weights();
        let mut diag: Vec<T> = node_of_free.iter().map(|&i| pot[i as usize]).collect();
        let mass: Vec<T> = node_of_free.iter().map(|&i| g.node_weight(i as usize)).collect();
        let inv_h2 = T::one() / (g.h() * g.h());
        let mut links = Vec::new();
        for axis in 0..g.dim() {
            let s = g.stride(axis);
            for i in 0..nn {
                if !g.has_link(axis, i) {
                    continue;
                }
                let j = i + s;
                let w = g.link_weight(axis, i) * inv_h2;
                let (fa, fb) = (free_of_node[i], free_of_node[j]);
                if fa != PINNED {
                    diag[fa as usize] += w;
                }
                if fb != PINNED {
                    diag[fb as usize] += w;
                }
                if fa != PINNED && fb != PINNED {
                    links.push(FormLink { a: fa, b: fb, weight: w, phase: a.phase(axis, i).cis() });
                }
            }
        }
        debug_assert_eq!(diag.len(), nf);
        Ok(Self { grid: g.clone(), free_of_node, node_of_free, links, diag, mass })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn links(&self) -> &[FormLink<T>] {
        &self.links
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        for ((yi, xi), &d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        for l in &self.links {
            let (a, b) = (l.a as usize, l.b as usize);
            let xa = x[a];
            let xb = x[b];
            y[a] -= l.phase * xb * l.weight;
            y[b] -= l.phase.conj() * xa * l.weight;
        }
    }

    /// Upper bound on the largest generalized eigenvalue (Gershgorin on `M⁻¹A`).
    pub fn spectral_radius_bound(&self) -> T {
        let mut row = self.diag.clone();
        for l in &self.links {
            row[l.a as usize] += l.weight;
            row[l.b as usize] += l.weight;
        }
        row.iter().zip(&self.mass).map(|(&r, &m)| r / m).fold(T::zero(), |acc, v| acc.max(v))
    }

    /// Scatter free values back to a full grid function (zero on pinned nodes).
    pub fn to_grid_function(&self, x: &[Complex<T>]) -> GridFunction<T> {
        let mut vals = vec![Complex::new(T::zero(), T::zero()); self.grid.node_count()];
        for (f, &i) in self.node_of_free.iter().enumerate() {
            vals[i as usize] = x[f];
        }
        GridFunction::new(self.grid.clone(), vals).expect("finite eigenvector")
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        let f = self.free_of_node[node];
        (f != PINNED).then_some(f as usize)
    }

    pub fn node_index(&self, free: usize) -> usize {
        self.node_of_free[free] as usize
    }
}
