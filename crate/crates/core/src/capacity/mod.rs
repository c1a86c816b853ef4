//! Wiener capacity of cell-union compact sets.
//!
//! In the plane capacity is taken relative to the concentric open square of twice the
//! edge. In space the whole-space capacity is approximated on a box, by default of edge
//! `8d`, padded with geometrically growing cells and closed by the monopole far-field
//! condition `∂u/∂ν + (x·ν/|x|²) u = 0`.

mod mesh;

use std::f64::consts::PI;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CompactSetMask, Cube, Grid, GridFunction};
use crate::scalar::Real;
use mesh::TensorMesh;

/// Outer boundary condition on the ambient box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FarField {
    /// `u = 0` on the box.
    Dirichlet,
    /// Exterior monopole closure; only meaningful for `n = 3`.
    Robin,
}

/// Box the equilibrium problem is posed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ambient<T> {
    pub cube: Cube<T>,
    pub far_field: FarField,
}

impl<T: Real> Ambient<T> {
    /// Default ambient for sets inside `q`: `Q_{2d}` with `u = 0` for `n = 2`, an `8d` box
    /// with the far-field closure for `n = 3`.
    pub fn standard(q: &Cube<T>) -> Result<Self> {
        match q.dim() {
            2 => Ok(Self { cube: q.scaled(T::lit(2.0))?, far_field: FarField::Dirichlet }),
            _ => Self::truncated(q, T::lit(8.0)),
        }
    }

    /// Concentric box of edge `factor·d` with the far-field closure (`n = 3`).
    pub fn truncated(q: &Cube<T>, factor: T) -> Result<Self> {
        Ok(Self { cube: q.scaled(factor)?, far_field: FarField::Robin })
    }

    pub fn describe(&self) -> String {
        let c: Vec<String> = self.cube.center().iter().map(|x| format!("{}", x.as_f64())).collect();
        let what = match (self.cube.dim(), self.far_field) {
            (2, FarField::Dirichlet) => "relative to open square",
            (_, FarField::Dirichlet) => "relative to open box, u=0 on faces",
            (_, FarField::Robin) => "whole space, truncated box with monopole far field",
        };
        format!("{what}; edge {} centered at ({})", self.cube.edge().as_f64(), c.join(", "))
    }

    fn key(&self) -> Vec<u64> {
        let mut k: Vec<u64> = self.cube.center().iter().map(|x| x.as_f64().to_bits()).collect();
        k.push(self.cube.edge().as_f64().to_bits());
        k.push(self.far_field as u64);
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityOptions<T> {
    /// Relative residual of the equilibrium system.
    pub tol: T,
    /// Growth ratio of padding cells; `None` picks 1 in the plane and 1.2 in space.
    pub grading: Option<T>,
    pub max_iter: Option<usize>,
}

impl<T: Real> Default for CapacityOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), grading: None, max_iter: None }
    }
}

/// Capacity value with the equilibrium potential restricted to the cube grid.
#[derive(Debug, Clone)]
pub struct CapacityResult<T> {
    pub value: T,
    pub minimizer: GridFunction<T>,
    pub relative_to: String,
    pub iterations: usize,
    pub residual: T,
    /// Potential on the whole ambient mesh, in its own node order.
    pub ambient_values: Vec<T>,
}

/// JSON record of a capacity computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    pub value: f64,
    pub dim: usize,
    pub m: usize,
    pub cells: usize,
    pub measure: f64,
    pub relative_to: String,
    pub iterations: usize,
    pub residual: f64,
}

impl<T: Real> CapacityResult<T> {
    pub fn report(&self, mask: &CompactSetMask<T>) -> CapacityReport {
        CapacityReport {
            value: self.value.as_f64(),
            dim: mask.grid().dim(),
            m: mask.grid().m(),
            cells: mask.count(),
            measure: mask.measure().as_f64(),
            relative_to: self.relative_to.clone(),
            iterations: self.iterations,
            residual: self.residual.as_f64(),
        }
    }
}

struct System<T> {
    mesh: TensorMesh<T>,
    weights: Vec<Vec<T>>,
    robin: Vec<T>,
    diag: Vec<T>,
    pinned: Vec<bool>,
}

impl<T: Real> System<T> {
    fn build(grid: &Grid<T>, ambient: &Ambient<T>, grading: T, closure: &[bool]) -> Result<Self> {
        let mesh = TensorMesh::new(grid, &ambient.cube, grading)?;
        let n = mesh.dim();
        let total = mesh.node_count();
        let mut weights = vec![vec![T::zero(); total]; n];
        let mut robin = vec![T::zero(); total];
        let mut diag = vec![T::zero(); total];
        let mut pinned = vec![false; total];
        for i in 0..total {
            let idx = mesh.multi(i);
            for k in 0..n {
                if idx[k] + 1 < mesh.len(k) {
                    let w = mesh.link_weight(k, &idx[..n]);
                    weights[k][i] = w;
                    diag[i] += w;
                    diag[i + mesh.stride(k)] += w;
                }
            }
            if mesh.is_outer(i) {
                match ambient.far_field {
                    FarField::Dirichlet => pinned[i] = true,
                    FarField::Robin => {
                        robin[i] = mesh.robin_weight(&idx[..n], ambient.cube.center());
                        diag[i] += robin[i];
                    }
                }
            }
        }
        for (c, &on) in closure.iter().enumerate() {
            if on {
                let idx = grid.node_multi(c);
                pinned[mesh.from_core(&idx[..n])] = true;
            }
        }
        Ok(Self { mesh, weights, robin, diag, pinned })
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.robin[i] * x[i];
        }
        for (k, w) in self.weights.iter().enumerate() {
            let s = self.mesh.stride(k);
            for i in 0..x.len().saturating_sub(s) {
                let wi = w[i];
                if wi != T::zero() {
                    let f = wi * (x[i] - x[i + s]);
                    y[i] += f;
                    y[i + s] -= f;
                }
            }
        }
    }

    fn energy(&self, u: &[T]) -> T {
        let mut e = T::zero();
        for (k, w) in self.weights.iter().enumerate() {
            let s = self.mesh.stride(k);
            for i in 0..u.len().saturating_sub(s) {
                let d = u[i] - u[i + s];
                e += w[i] * d * d;
            }
        }
        e + self.robin.iter().zip(u).map(|(&b, &x)| b * x * x).sum::<T>()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on the free nodes, starting from `u`.
fn solve<T: Real>(sys: &System<T>, u: &mut [T], tol: T, max_iter: usize) -> Result<(usize, T)> {
    let len = u.len();
    let mut r = vec![T::zero(); len];
    sys.apply(u, &mut r);
    for i in 0..len {
        r[i] = if sys.pinned[i] { T::zero() } else { -r[i] };
    }
    let r0 = dot(&r, &r).sqrt();
    if r0 == T::zero() {
        return Ok((0, T::zero()));
    }
    let tol = tol.max(T::eps() * T::lit(10.0));
    let mut z: Vec<T> = (0..len).map(|i| r[i] / sys.diag[i]).collect();
    let mut p = z.clone();
    let mut q = vec![T::zero(); len];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        sys.apply(&p, &mut q);
        for i in 0..len {
            if sys.pinned[i] {
                q[i] = T::zero();
            }
        }
        let pq = dot(&p, &q);
        if pq <= T::zero() {
            return Err(Error::Solver("equilibrium system is singular".into()));
        }
        let alpha = rz / pq;
        for i in 0..len {
            u[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = dot(&r, &r).sqrt() / r0;
        if res <= tol {
            return Ok((it, res));
        }
        for i in 0..len {
            z[i] = r[i] / sys.diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / r0;
    Err(Error::Convergence { iterations: max_iter, residual: res.as_f64() })
}

/// Capacity of `f` relative to the standard ambient of its cube.
pub fn wiener_capacity<T: Real>(f: &CompactSetMask<T>) -> Result<CapacityResult<T>> {
    let ambient = Ambient::standard(f.grid().cube())?;
    capacity_in(f, &ambient, &CapacityOptions::default())
}

/// Capacity of `f` relative to an explicit ambient box.
pub fn capacity_in<T: Real>(
    f: &CompactSetMask<T>,
    ambient: &Ambient<T>,
    opts: &CapacityOptions<T>,
) -> Result<CapacityResult<T>> {
    let grid = f.grid();
    let n = grid.dim();
    let d = grid.cube().edge();
    if n == 3 && ambient.cube.edge() < d * T::lit(8.0) * (T::one() - T::lit(1e-9)) {
        return Err(Error::Precondition("ambient box edge must be at least 8d in space".into()));
    }
    if n == 2 && ambient.far_field == FarField::Robin {
        return Err(Error::Precondition("far-field closure is only defined in space".into()));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let relative_to = ambient.describe();
    if f.is_empty() {
        return Ok(CapacityResult {
            value: T::zero(),
            minimizer: GridFunction::zeros(grid.clone()),
            relative_to,
            iterations: 0,
            residual: T::zero(),
            ambient_values: Vec::new(),
        });
    }
    let grading = opts.grading.unwrap_or(if n == 2 { T::one() } else { T::lit(1.2) });
    if grading < T::one() {
        return Err(Error::Precondition("padding growth ratio must be at least 1".into()));
    }
    let closure = f.node_closure();
    let sys = System::build(grid, ambient, grading, &closure)?;
    let mut u = vec![T::zero(); sys.mesh.node_count()];
    for (c, &on) in closure.iter().enumerate() {
        if on {
            let idx = grid.node_multi(c);
            u[sys.mesh.from_core(&idx[..n])] = T::one();
        }
    }
    let max_iter = opts.max_iter.unwrap_or(20 * sys.mesh.coords.iter().map(Vec::len).max().unwrap_or(1).pow(2).max(500));
    let (iterations, residual) = solve(&sys, &mut u, opts.tol, max_iter)?;
    for x in u.iter_mut() {
        *x = x.max(T::zero()).min(T::one());
    }
    let value = sys.energy(&u);
    let core: Vec<T> = (0..grid.node_count())
        .map(|c| {
            let idx = grid.node_multi(c);
            u[sys.mesh.from_core(&idx[..n])]
        })
        .collect();
    Ok(CapacityResult {
        value,
        minimizer: GridFunction::from_real(grid.clone(), core)?,
        relative_to,
        iterations,
        residual,
        ambient_values: u,
    })
}

/// `c_n = cap(Q₁)` under the standard convention, measured with `m` nodes per edge.
pub fn cube_capacity_constant<T: Real>(dim: usize, m: usize) -> Result<T> {
    let g = crate::lattice::rasterize(&Cube::unit(dim)?, m)?;
    Ok(wiener_capacity(&CompactSetMask::full(g))?.value)
}

/// Richardson extrapolation of a quantity computed with spacing `h` and `h/2`.
pub fn richardson<T: Real>(coarse: T, fine: T, order: T) -> T {
    let f = T::lit(2.0).powf(order);
    (f * fine - coarse) / (f - T::one())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    mask: u64,
    grid: Vec<u64>,
    ambient: Vec<u64>,
}

/// Concurrent memo of capacity values keyed by mask, grid and ambient.
#[derive(Debug)]
pub struct CapacityCache<T> {
    opts: CapacityOptions<T>,
    map: DashMap<CacheKey, T>,
}

impl<T: Real> Default for CapacityCache<T> {
    fn default() -> Self {
        Self::new(CapacityOptions::default())
    }
}

impl<T: Real> CapacityCache<T> {
    pub fn new(opts: CapacityOptions<T>) -> Self {
        Self { opts, map: DashMap::new() }
    }

    pub fn capacity(&self, f: &CompactSetMask<T>, ambient: &Ambient<T>) -> Result<T> {
        let g = f.grid();
        let mut gk: Vec<u64> = g.cube().center().iter().map(|x| x.as_f64().to_bits()).collect();
        gk.push(g.cube().edge().as_f64().to_bits());
        gk.push(g.m() as u64);
        let key = CacheKey { mask: f.fingerprint(), grid: gk, ambient: ambient.key() };
        if let Some(v) = self.map.get(&key) {
            return Ok(*v);
        }
        let v = capacity_in(f, ambient, &self.opts)?.value;
        self.map.insert(key, v);
        Ok(v)
    }

    /// Capacity under the standard ambient of the mask's cube.
    pub fn standard(&self, f: &CompactSetMask<T>) -> Result<T> {
        self.capacity(f, &Ambient::standard(f.grid().cube())?)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Both sides of the capacity–measure inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapMeasureReport {
    pub capacity: f64,
    pub measure: f64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Isoperimetric-type constant of the space inequality `cap(F) ≥ c_n mes(F)^{(n−2)/n}`.
pub fn cap_measure_constant(n: usize) -> f64 {
    let nf = n as f64;
    let omega = 2.0 * PI.powf(nf / 2.0) / gamma_half_integer(n);
    omega.powf(-2.0 / nf) * nf.powf((2.0 - nf) / nf) / (nf - 2.0)
}

// Γ(n/2) for small integer n.
fn gamma_half_integer(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if n % 2 == 0 { 1.0 } else { 0.5 };
    while k < n as f64 / 2.0 - 1e-12 {
        g *= k;
        k += 1.0;
    }
    g
}

/// Checks `cap(F) ≥ c_n mes(F)^{(n−2)/n}` in space, or
/// `cap(F) ≥ (4π)⁻¹ [log(d₀²/mes F)]⁻¹` with `d₀ = 2d` in the plane.
pub fn check_cap_measure<T: Real>(f: &CompactSetMask<T>, ambient: &Ambient<T>) -> Result<CapMeasureReport> {
    if f.is_empty() {
        return Err(Error::Precondition("set must be nonempty".into()));
    }
    let n = f.grid().dim();
    let cap = capacity_in(f, ambient, &CapacityOptions::default())?.value.as_f64();
    let mes = f.measure().as_f64();
    let bound = if n == 2 {
        let d0 = ambient.cube.edge().as_f64();
        1.0 / (4.0 * PI * (d0 * d0 / mes).ln())
    } else {
        cap_measure_constant(n) * mes.powf((n as f64 - 2.0) / n as f64)
    };
    // discrete slack: the solver residual bound on the energy
    let slack = 1e-8 * cap;
    Ok(CapMeasureReport { capacity: cap, measure: mes, bound, ratio: cap / bound, holds: cap >= bound - slack })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub cap_union: f64,
    pub cap_first: f64,
    pub cap_second: f64,
    pub holds: bool,
}

/// Checks `cap(F₁ ∪ F₂) ≤ cap(F₁) + cap(F₂)` up to a relative slack of `1e−8`.
pub fn subadditivity_check<T: Real>(
    f1: &CompactSetMask<T>,
    f2: &CompactSetMask<T>,
    ambient: &Ambient<T>,
) -> Result<SubadditivityReport> {
    let opts = CapacityOptions::default();
    let u = capacity_in(&f1.union(f2)?, ambient, &opts)?.value.as_f64();
    let a = capacity_in(f1, ambient, &opts)?.value.as_f64();
    let b = capacity_in(f2, ambient, &opts)?.value.as_f64();
    Ok(SubadditivityReport { cap_union: u, cap_first: a, cap_second: b, holds: u <= (a + b) * (1.0 + 1e-8) })
}
