use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex samples at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("grid function has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); n] }
    }

    pub fn constant(grid: Grid<T>, c: Complex<T>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![c; n] }
    }

    pub fn from_real(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex::new(v, T::zero())).collect())
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(&[T]) -> Complex<T>) -> Result<Self> {
        let n = grid.dim();
        let values = (0..grid.node_count()).map(|i| f(&grid.node_coord(i)[..n])).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid<T>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        Self::from_fn(grid, |x| Complex::new(f(x), T::zero()))
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Pointwise modulus `|u|` as a real-valued grid function.
    pub fn modulus(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| Complex::new(crate::scalar::norm_sq(*z).sqrt(), T::zero())).collect(),
        }
    }

    /// `u · exp(i s φ)` for a node-sampled phase `φ`.
    pub fn with_phase(&self, phi: &[T], sign: T) -> Result<Self> {
        if phi.len() != self.values.len() {
            return Err(Error::ShapeMismatch("phase length differs from node count".into()));
        }
        let values = self.values.iter().zip(phi).map(|(z, &p)| z * (sign * p).cis()).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn scale(&mut self, s: T) {
        for z in &mut self.values {
            *z *= s;
        }
    }

    /// `self += s·other`.
    pub fn add_assign(&mut self, other: &Self, s: T) -> Result<()> {
        self.grid.ensure_same(&other.grid, "add_assign")?;
        for (z, w) in self.values.iter_mut().zip(&other.values) {
            *z += w * s;
        }
        Ok(())
    }

    pub fn map_real(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| Complex::new(f(z.re), T::zero())).collect(),
        }
    }
}

/// Vector potential stored as link phases `θ(i → i+e_k) = ∫ a·dx` along each lattice edge.
///
/// Reversed links carry `-θ` implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticPotential<T> {
    grid: Grid<T>,
    /// Axis-major: `phases[k * N + i]` for the link leaving node `i` along axis `k`.
    phases: Vec<T>,
}

impl<T: Real> MagneticPotential<T> {
    pub fn zero(grid: Grid<T>) -> Self {
        let len = grid.dim() * grid.node_count();
        Self { grid, phases: vec![T::zero(); len] }
    }

    pub fn from_phases(grid: Grid<T>, phases: Vec<T>) -> Result<Self> {
        if phases.len() != grid.dim() * grid.node_count() {
            return Err(Error::ShapeMismatch("phase table has wrong length".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite link phase".into()));
        }
        let mut out = Self { grid, phases };
        out.clear_missing_links();
        Ok(out)
    }

    /// Midpoint-rule line integrals of a closed-form potential; `a(x, k)` is the k-th component at `x`.
    pub fn from_fn(grid: Grid<T>, a: impl Fn(&[T], usize) -> T) -> Result<Self> {
        let n = grid.dim();
        let nn = grid.node_count();
        let half = grid.h() * T::lit(0.5);
        let mut phases = vec![T::zero(); n * nn];
        for k in 0..n {
            for i in 0..nn {
                if !grid.has_link(k, i) {
                    continue;
                }
                let mut x = grid.node_coord(i);
                x[k] += half;
                phases[k * nn + i] = grid.h() * a(&x[..n], k);
            }
        }
        Self::from_phases(grid, phases)
    }

    /// Pure gauge `a = dφ`: `θ(i → j) = φ_j − φ_i`.
    pub fn pure_gauge(grid: Grid<T>, phi: &[T]) -> Result<Self> {
        Self::zero(grid).gauge_shift(phi)
    }

    /// `a → a + dφ` for a node-sampled `φ`.
    pub fn gauge_shift(&self, phi: &[T]) -> Result<Self> {
        let nn = self.grid.node_count();
        if phi.len() != nn {
            return Err(Error::ShapeMismatch("gauge function length differs from node count".into()));
        }
        let mut phases = self.phases.clone();
        for k in 0..self.grid.dim() {
            let s = self.grid.stride(k);
            for i in 0..nn {
                if self.grid.has_link(k, i) {
                    phases[k * nn + i] += phi[i + s] - phi[i];
                }
            }
        }
        Self::from_phases(self.grid.clone(), phases)
    }

    fn clear_missing_links(&mut self) {
        let nn = self.grid.node_count();
        for k in 0..self.grid.dim() {
            for i in 0..nn {
                if !self.grid.has_link(k, i) {
                    self.phases[k * nn + i] = T::zero();
                }
            }
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Phase of the link `i → i + e_axis`.
    #[inline]
    pub fn phase(&self, axis: usize, i: usize) -> T {
        self.phases[axis * self.grid.node_count() + i]
    }

    /// Phase of the reversed link `i + e_axis → i`.
    #[inline]
    pub fn reversed_phase(&self, axis: usize, i: usize) -> T {
        -self.phase(axis, i)
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    /// Discrete flux through the plaquette spanned by axes `(p, q)` at node `i`.
    pub fn plaquette_flux(&self, p: usize, q: usize, i: usize) -> T {
        let sp = self.grid.stride(p);
        let sq = self.grid.stride(q);
        self.phase(p, i) + self.phase(q, i + sp) - self.phase(p, i + sq) - self.phase(q, i)
    }

    /// Largest absolute plaquette flux; zero iff the potential is a pure gauge on the cube.
    pub fn max_flux(&self) -> T {
        let n = self.grid.dim();
        let mut best = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                for i in 0..self.grid.node_count() {
                    if self.grid.has_link(p, i) && self.grid.has_link(q, i) {
                        best = best.max(self.plaquette_flux(p, q, i).abs());
                    }
                }
            }
        }
        best
    }
}

type VectorFn<T> = Arc<dyn Fn(&[T], usize) -> T + Send + Sync>;

/// Grid-independent rule for a vector potential; [`VectorPotential::sample`] turns it into link phases.
#[derive(Clone)]
pub enum VectorPotential<T> {
    Zero,
    /// `a(x, k)` is the k-th component at `x`.
    Closed(VectorFn<T>),
}

impl<T: Real> fmt::Debug for VectorPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Closed(_) => write!(f, "Closed(..)"),
        }
    }
}

impl<T: Real> VectorPotential<T> {
    pub fn closed(a: impl Fn(&[T], usize) -> T + Send + Sync + 'static) -> Self {
        Self::Closed(Arc::new(a))
    }

    /// Symmetric gauge of the constant field `b` in the `x¹x²` plane.
    pub fn constant_field(b: T) -> Self {
        let half = b * T::lit(0.5);
        Self::closed(move |x: &[T], k| match k {
            0 => -half * x[1],
            1 => half * x[0],
            _ => T::zero(),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn eval(&self, x: &[T], k: usize) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Closed(a) => a(x, k),
        }
    }

    pub fn sample(&self, grid: &Grid<T>) -> Result<MagneticPotential<T>> {
        match self {
            Self::Zero => Ok(MagneticPotential::zero(grid.clone())),
            Self::Closed(a) => MagneticPotential::from_fn(grid.clone(), |x, k| a(x, k)),
        }
    }

    /// Pointwise sum `a + b`.
    pub fn plus(self, other: Self) -> Self {
        match (self, other) {
            (Self::Zero, b) => b,
            (a, Self::Zero) => a,
            (a, b) => Self::closed(move |x, k| a.eval(x, k) + b.eval(x, k)),
        }
    }
}

type PotentialFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Non-negative scalar potential `V`.
#[derive(Clone)]
pub enum ScalarPotential<T> {
    Constant(T),
    /// Closed-form rule evaluated at cell midpoints.
    Closed(PotentialFn<T>),
    /// Per-cell samples tied to one grid.
    Table(CellField<T>),
}

impl<T: Real> fmt::Debug for ScalarPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Closed(_) => write!(f, "Closed(..)"),
            Self::Table(t) => write!(f, "Table({} cells)", t.values.len()),
        }
    }
}

impl<T: Real> ScalarPotential<T> {
    pub fn zero() -> Self {
        Self::Constant(T::zero())
    }

    pub fn closed(f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self::Closed(Arc::new(f))
    }

    /// `V(x) = |x|²`.
    pub fn harmonic() -> Self {
        Self::closed(|x: &[T]| x.iter().map(|&v| v * v).sum())
    }

    /// Point evaluation (tables return the containing cell's sample).
    pub fn eval(&self, x: &[T]) -> T {
        match self {
            Self::Constant(c) => *c,
            Self::Closed(f) => f(x),
            Self::Table(t) => t.value_at(x),
        }
    }

    /// Midpoint samples over every cell; fails on negative or non-finite samples.
    pub fn sample(&self, grid: &Grid<T>) -> Result<CellField<T>> {
        let field = match self {
            Self::Constant(c) => CellField { grid: grid.clone(), values: vec![*c; grid.cell_count()] },
            Self::Closed(f) => {
                let n = grid.dim();
                let values = (0..grid.cell_count()).map(|c| f(&grid.cell_center(c)[..n])).collect();
                CellField { grid: grid.clone(), values }
            }
            Self::Table(t) => {
                grid.ensure_same(&t.grid, "potential table")?;
                t.clone()
            }
        };
        field.validate()?;
        Ok(field)
    }

    /// Pointwise sum `V + W`.
    pub fn plus(self, other: Self) -> Self {
        match (self, other) {
            (Self::Constant(a), Self::Constant(b)) => Self::Constant(a + b),
            (a, b) => Self::closed(move |x| a.eval(x) + b.eval(x)),
        }
    }
}

/// Cell-midpoint samples of a potential.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> CellField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        let out = Self { grid, values };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for (c, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Domain(format!("potential sample at cell {c} is not finite")));
            }
            if v < T::zero() {
                return Err(Error::Domain(format!("negative potential sample {v} at cell {c}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn value_at(&self, x: &[T]) -> T {
        let g = &self.grid;
        let mut idx = [0usize; 3];
        for k in 0..g.dim() {
            let t = ((x[k] - g.cube().lower(k)) / g.h()).floor();
            let t = t.max(T::zero()).to_usize().unwrap_or(0);
            idx[k] = t.min(g.cells_per_edge() - 1);
        }
        self.values[g.cell_flat(&idx[..g.dim()])]
    }

    /// Trapezoid-distributed nodal weights `Σ_{cells ∋ i} V_c hⁿ / 2ⁿ`.
    pub fn nodal_weights(&self) -> Vec<T> {
        let g = &self.grid;
        let share = g.cell_volume() / T::from_usize_lossy(1 << g.dim());
        let mut w = vec![T::zero(); g.node_count()];
        for (c, &v) in self.values.iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            for i in g.cell_corners(c) {
                w[i] += v * share;
            }
        }
        w
    }
}

impl<T: Real> From<CellField<T>> for ScalarPotential<T> {
    fn from(t: CellField<T>) -> Self {
        Self::Table(t)
    }
}
