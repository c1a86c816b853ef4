//! The half-space construction: a magnetic bottle on one side of the hyperplane
//! `L = {x¹ + … + xⁿ = 0}` and a potential well on the other.
//!
//! Cubes whose corner pokes a distance `δ` into the well side see a field-free
//! pocket, so `μ₀ ≲ δ⁻²` stays bounded while the spectrum stays discrete.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::CapacityCache;
use crate::criteria::{f_n, validate_pair, AdmissiblePair, PairValidation, SampleLattice};
use crate::error::{Error, Result};
use crate::lattice::{
    rasterize, CompactSetMask, Cube, Grid, MagneticPotential, ScalarPotential, VectorPotential,
};
use crate::molchanov::negligibility_test_with;
use crate::scalar::Real;
use crate::spectral::{bottom_with_pinned, dirichlet_bottom, local_energy, BoundaryKind, EigenOptions};

fn plane<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum()
}

// rounding in node and midpoint coordinates must not move points off L
fn tie<T: Real>(x: &[T]) -> T {
    T::lit(1e-10) * (T::one() + x.iter().map(|v| v.abs()).sum::<T>())
}

/// `x ∈ L̄₊` with points within rounding of `L` counted on it.
fn closed_plus<T: Real>(x: &[T]) -> bool {
    plane(x) >= -tie(x)
}

/// `H_{ã,0}` on `L₋`, `H_{0,Ṽ}` on `L₊`; points of `L` carry `Ṽ`.
#[derive(Debug, Clone)]
pub struct HalfspaceOperator<T: Real> {
    pub n: usize,
    pub a_tilde: VectorPotential<T>,
    pub v_tilde: ScalarPotential<T>,
}

impl<T: Real> HalfspaceOperator<T> {
    pub fn new(n: usize, a_tilde: VectorPotential<T>, v_tilde: ScalarPotential<T>) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Precondition(format!("half-space operator needs n in {{2, 3}}, got {n}")));
        }
        Ok(Self { n, a_tilde, v_tilde })
    }

    /// Oscillator `Ṽ = |x|²` and the bottle `ã = (0, x¹(1+|x|²), 0…)`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, growing_bottle(), ScalarPotential::harmonic())
    }

    /// `x¹ + … + xⁿ`.
    pub fn side(x: &[T]) -> T {
        plane(x)
    }

    /// `ã` restricted to `L₋`, extended by zero.
    pub fn vector_potential(&self) -> VectorPotential<T> {
        if self.a_tilde.is_zero() {
            return VectorPotential::Zero;
        }
        let a = self.a_tilde.clone();
        VectorPotential::closed(move |x: &[T], k| if closed_plus(x) { T::zero() } else { a.eval(x, k) })
    }

    /// `Ṽ` restricted to the closed `L̄₊`, extended by zero.
    pub fn potential(&self) -> ScalarPotential<T> {
        let v = self.v_tilde.clone();
        ScalarPotential::closed(move |x: &[T]| if closed_plus(x) { v.eval(x) } else { T::zero() })
    }
}

/// `a₂ = x¹(1 + |x|²)`, other components zero; the field grows like `|x|²`.
pub fn growing_bottle<T: Real>() -> VectorPotential<T> {
    VectorPotential::closed(|x: &[T], k| {
        if k == 1 {
            x[0] * (T::one() + x.iter().map(|&v| v * v).sum::<T>())
        } else {
            T::zero()
        }
    })
}

/// Cube of edge `d` whose corner with the largest coordinate sum sits at `δ/n·(1,…,1) + shift`.
/// `shift` must lie in `L`, so that corner has sum exactly `δ`.
pub fn corner_cube<T: Real>(n: usize, d: T, delta: T, shift: &[T]) -> Result<Cube<T>> {
    if shift.len() != n {
        return Err(Error::ShapeMismatch("shift length differs from the dimension".into()));
    }
    let scale = shift.iter().map(|s| s.abs()).fold(T::one(), |a, b| a.max(b));
    if plane(shift).abs() > T::lit(1e-12) * scale {
        return Err(Error::Precondition("shift must lie in the hyperplane".into()));
    }
    let per = delta / T::from_usize_lossy(n);
    let lower: Vec<T> = shift.iter().map(|&s| per + s - d).collect();
    Cube::from_lower(&lower, d)
}

/// `k·spacing·(e₁ − e₂)`: the k-th cube of the sliding sequence.
pub fn sliding_shift<T: Real>(n: usize, k: usize, spacing: T) -> Vec<T> {
    let mut s = vec![T::zero(); n];
    s[0] = spacing * T::from_usize_lossy(k);
    s[1] = -s[0];
    s
}

/// Cells of the grid whose midpoint lies in the closed `L̄₊`: exactly the support of the sampled `V`.
pub fn tetrahedron_mask<T: Real>(grid: &Grid<T>) -> CompactSetMask<T> {
    let n = grid.dim();
    let cells = (0..grid.cell_count()).map(|c| closed_plus(&grid.cell_center(c)[..n])).collect();
    CompactSetMask::new(grid.clone(), cells).expect("cell count matches")
}

/// Capacity of the corner tetrahedron `{xʲ ≥ 0, Σxʲ ≤ δ}` rasterized by cell midpoints in `[0,d]ⁿ` with `m` nodes per edge.
pub fn tetrahedron_capacity<T: Real>(d: T, delta: T, n: usize, m: usize, cache: &CapacityCache<T>) -> Result<T> {
    if !(delta > T::zero()) || delta > d {
        return Err(Error::Precondition(format!("tetrahedron needs 0 < delta <= d, got delta={delta}, d={d}")));
    }
    let grid = rasterize(&Cube::from_lower(&vec![T::zero(); n], d)?, m)?;
    let cells = (0..grid.cell_count())
        .map(|c| {
            let x = &grid.cell_center(c)[..n];
            plane(x) <= delta + tie(x)
        })
        .collect();
    let mask = CompactSetMask::new(grid, cells)?;
    if mask.is_empty() {
        return Err(Error::Precondition(format!("delta={delta} is below the grid resolution")));
    }
    cache.standard(&mask)
}

/// Capacity sweep over `δ` with the scaling fit for its dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TetraSweep {
    pub n: usize,
    pub d: f64,
    pub m: usize,
    /// `(δ, cap)`.
    pub points: Vec<(f64, f64)>,
    pub cube_capacity: f64,
    /// `n ≥ 3`: slope of `log cap` against `log δ`; `n = 2`: slope of `1/cap` against `log(2d/δ)`.
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|fit − data| / data` over the sweep.
    pub max_rel_residual: f64,
}

fn ls_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let (xm, ym) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, ym - slope * xm)
}

pub fn tetrahedron_sweep<T: Real>(n: usize, d: T, deltas: &[T], m: usize) -> Result<TetraSweep> {
    if deltas.len() < 2 {
        return Err(Error::Precondition("capacity sweep needs at least two deltas".into()));
    }
    let cache = CapacityCache::default();
    let caps: Vec<T> = deltas.par_iter().map(|&delta| tetrahedron_capacity(d, delta, n, m, &cache)).collect::<Result<_>>()?;
    let grid = rasterize(&Cube::from_lower(&vec![T::zero(); n], d)?, m)?;
    let cube_capacity = cache.standard(&CompactSetMask::full(grid))?.as_f64();
    let df = d.as_f64();
    let points: Vec<(f64, f64)> = deltas.iter().zip(&caps).map(|(a, c)| (a.as_f64(), c.as_f64())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = if n == 2 {
        points.iter().map(|&(delta, c)| ((2.0 * df / delta).ln(), 1.0 / c)).unzip()
    } else {
        points.iter().map(|&(delta, c)| (delta.ln(), c.ln())).unzip()
    };
    let (slope, intercept) = ls_fit(&xs, &ys);
    let max_rel_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = slope * x + intercept;
            if n == 2 {
                ((fit - y) / y).abs()
            } else {
                (fit - y).exp_m1().abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(TetraSweep { n, d: df, m, points, cube_capacity, slope, intercept, max_rel_residual })
}

/// `μ₀` of one corner cube together with its field-free pocket bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mu0Row {
    pub delta: f64,
    pub mu0: f64,
    pub mu0_delta_sq: f64,
    /// Dirichlet bottom over functions supported in the open pocket `Q̊_d ∩ L₊`; `+∞` when unresolved.
    pub pocket: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mu0DeltaScan {
    pub rows: Vec<Mu0Row>,
    /// `sup μ₀δ²` over the sweep.
    pub c_fit: f64,
    /// `sup λ_pocket δ²` over the resolved rows.
    pub c_pocket: f64,
    /// Slope and residual of `log μ₀` against `log δ`.
    pub loglog_slope: f64,
    pub loglog_residual: f64,
    /// `μ₀ ≤ λ_pocket` on every resolved row and `μ₀δ²` finite throughout.
    pub bounded: bool,
}

fn pocket_pinned<T: Real>(grid: &Grid<T>) -> Vec<bool> {
    (0..grid.node_count())
        .map(|i| {
            let x = grid.node_coord(i);
            let x = &x[..grid.dim()];
            grid.is_boundary(i) || plane(x) <= tie(x)
        })
        .collect()
}

fn mu0_row<T: Real>(
    op: &HalfspaceOperator<T>,
    d: T,
    delta: T,
    shift: &[T],
    m: usize,
    eigen: &EigenOptions<T>,
) -> Result<(Grid<T>, MagneticPotential<T>, Mu0Row)> {
    let grid = rasterize(&corner_cube(op.n, d, delta, shift)?, m)?;
    let a = op.vector_potential().sample(&grid)?;
    let mu0 = local_energy(&grid, &a, None, eigen)?.mu0;
    let zero = ScalarPotential::zero().sample(&grid)?;
    let pocket = bottom_with_pinned(&a, &zero, &pocket_pinned(&grid), BoundaryKind::Dirichlet, eigen)?.value;
    let df = delta.as_f64();
    let row = Mu0Row { delta: df, mu0: mu0.as_f64(), mu0_delta_sq: mu0.as_f64() * df * df, pocket: pocket.as_f64() };
    Ok((grid, a, row))
}

/// `μ₀` per `δ` for the cube at `shift`, with the pocket bound the estimate `μ₀ ≤ Cδ⁻²` rests on.
pub fn mu0_delta_scan<T: Real>(
    op: &HalfspaceOperator<T>,
    d: T,
    deltas: &[T],
    shift: &[T],
    m: usize,
    eigen: &EigenOptions<T>,
) -> Result<Mu0DeltaScan> {
    let rows: Vec<Mu0Row> =
        deltas.par_iter().map(|&delta| mu0_row(op, d, delta, shift, m, eigen).map(|r| r.2)).collect::<Result<_>>()?;
    let c_fit = rows.iter().map(|r| r.mu0_delta_sq).fold(0.0, f64::max);
    let c_pocket =
        rows.iter().filter(|r| r.pocket.is_finite()).map(|r| r.pocket * r.delta * r.delta).fold(0.0, f64::max);
    let bounded = c_fit.is_finite() && rows.iter().all(|r| !r.pocket.is_finite() || r.mu0 <= r.pocket * (1.0 + 1e-8));
    let pos: Vec<&Mu0Row> = rows.iter().filter(|r| r.mu0 > 0.0).collect();
    let (loglog_slope, loglog_residual) = if pos.len() >= 2 {
        let xs: Vec<f64> = pos.iter().map(|r| r.delta.ln()).collect();
        let ys: Vec<f64> = pos.iter().map(|r| r.mu0.ln()).collect();
        let (s, b) = ls_fit(&xs, &ys);
        let res = xs.iter().zip(&ys).map(|(x, y)| (s * x + b - y).abs()).fold(0.0, f64::max);
        (s, res)
    } else {
        (0.0, 0.0)
    };
    Ok(Mu0DeltaScan { rows, c_fit, c_pocket, loglog_slope, loglog_residual, bounded })
}

/// Largest value of the induced `f`; the profile maps into `(0, 1)`.
pub const F_CAP: f64 = 0.99;

/// `f(t) = min(F_CAP, f_n(t)·h(t))` with `h → ∞`.
#[derive(Clone)]
pub struct PrecisionProfile<T> {
    h: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub label: String,
}

impl<T: Real> std::fmt::Debug for PrecisionProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PrecisionProfile({})", self.label)
    }
}

impl<T: Real> PrecisionProfile<T> {
    pub fn new(h: impl Fn(T) -> T + Send + Sync + 'static, label: impl Into<String>) -> Self {
        Self { h: Arc::new(h), label: label.into() }
    }

    /// `h(t) = 1 + log(1+t)`.
    pub fn logarithmic() -> Self {
        Self::new(|t: T| T::one() + t.ln_1p(), "1+log(1+t)")
    }

    /// `h ≡ 1`: the induced `f` is `f_n` itself (capped), an admissible choice.
    pub fn flat() -> Self {
        Self::new(|_| T::one(), "1")
    }

    pub fn h(&self, t: T) -> T {
        (self.h)(t)
    }

    pub fn f(&self, n: usize, t: T) -> T {
        T::lit(F_CAP).min(f_n(n, t) * self.h(t))
    }

    /// `(f, g = d²)` as a pair, for validation and `γ`.
    pub fn pair(&self, n: usize, d0: T) -> AdmissiblePair<T> {
        let p = self.clone();
        AdmissiblePair::new(n, d0, move |t| p.f(n, t), |d| d * d, format!("f_n*({})", self.label))
    }

    /// `h` nondecreasing on a log lattice of `[0, 1e8]` and at least doubling across it.
    pub fn grows(&self) -> bool {
        let ts: Vec<T> = std::iter::once(T::zero()).chain((0..=40).map(|i| T::lit(10f64.powf(-4.0 + 0.3 * i as f64)))).collect();
        let hs: Vec<T> = ts.iter().map(|&t| self.h(t)).collect();
        hs.windows(2).all(|w| w[1] >= w[0]) && hs[hs.len() - 1] >= T::lit(2.0) * hs[0]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub shell: usize,
    pub center: Vec<f64>,
    pub mu0: f64,
    pub mu0_tilde: f64,
    pub gamma: f64,
    pub tetra_capacity: f64,
    pub cube_capacity: f64,
    pub negligible: bool,
    /// Negligibility of the same tetrahedron under the admissible `f_n`.
    pub negligible_under_fn: bool,
    /// `∫_{Q_d∖F} V` with the tetrahedron as the removed set; zero whenever it is negligible.
    pub remaining: f64,
    /// `μ₀ + d⁻ⁿ M_γ` when the tetrahedron is negligible (then `M_γ = 0`).
    pub value: Option<f64>,
    pub lambda: f64,
    pub pocket: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlidingSequence {
    pub delta: f64,
    pub rows: Vec<PrecisionRow>,
    pub all_negligible: bool,
    pub lambda_increasing: bool,
    /// `(max μ₀ − min μ₀) / mean μ₀`.
    pub mu0_spread: f64,
    /// `sup (μ₀ + d⁻ⁿM_γ)·δ²` along the sequence.
    pub bound_times_delta_sq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub n: usize,
    pub d: f64,
    pub c_n: f64,
    pub profile: String,
    pub pair: PairValidation,
    pub sequences: Vec<SlidingSequence>,
    pub found_delta: Option<f64>,
    /// A bounded sequence was exhibited, so the growth condition fails for this `f`.
    pub condition_fails: bool,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct PrecisionOptions<T> {
    pub m: usize,
    /// Tried from first to last; the first one that works is reported.
    pub deltas: Vec<T>,
    pub shells: usize,
    /// Distance between consecutive cubes along `e₁ − e₂`.
    pub spacing: T,
    pub eigen: EigenOptions<T>,
}

impl<T: Real> PrecisionOptions<T> {
    pub fn new(n: usize, d: T) -> Self {
        let m = if n == 2 { 33 } else { 13 };
        Self {
            m,
            deltas: [1.0, 0.5, 0.25].iter().map(|&s| d * T::lit(s)).collect(),
            shells: 5,
            spacing: d,
            eigen: EigenOptions::default(),
        }
    }
}

fn sequence<T: Real>(
    op: &HalfspaceOperator<T>,
    profile: &PrecisionProfile<T>,
    d: T,
    c_n: T,
    delta: T,
    opts: &PrecisionOptions<T>,
    cache: &CapacityCache<T>,
) -> Result<SlidingSequence> {
    let n = op.n;
    let pair = profile.pair(n, d * T::lit(2.0));
    let standard = AdmissiblePair::standard(n, d * T::lit(2.0));
    let v_rule = op.potential();
    let rows: Vec<PrecisionRow> = (1..=opts.shells)
        .into_par_iter()
        .map(|k| {
            let shift = sliding_shift(n, k, opts.spacing);
            let (grid, a, row) = mu0_row(op, d, delta, &shift, opts.m, &opts.eigen)?;
            let mu0 = T::lit(row.mu0);
            let mu0_tilde = mu0 * d * d;
            let gamma = pair.gamma(c_n, mu0_tilde, d);
            let tetra = tetrahedron_mask(&grid);
            let negligible = negligibility_test_with(&tetra, gamma, cache)?;
            let negligible_under_fn = negligibility_test_with(&tetra, standard.gamma(c_n, mu0_tilde, d), cache)?;
            let v = v_rule.sample(&grid)?;
            let cell = grid.cell_volume();
            let remaining: T =
                v.values().iter().enumerate().filter(|(c, _)| !tetra.contains_cell(*c)).map(|(_, &x)| x * cell).sum();
            let dn = grid.cube().volume();
            let value = negligible.then(|| (mu0 + remaining / dn).as_f64());
            let lambda = dirichlet_bottom(&grid, &a, &v_rule, None, &opts.eigen)?.value;
            Ok(PrecisionRow {
                shell: k,
                center: grid.cube().center().iter().map(|x| x.as_f64()).collect(),
                mu0: row.mu0,
                mu0_tilde: mu0_tilde.as_f64(),
                gamma: gamma.as_f64(),
                tetra_capacity: cache.standard(&tetra)?.as_f64(),
                cube_capacity: cache.standard(&CompactSetMask::full(grid.clone()))?.as_f64(),
                negligible,
                negligible_under_fn,
                remaining: remaining.as_f64(),
                value,
                lambda: lambda.as_f64(),
                pocket: row.pocket,
            })
        })
        .collect::<Result<_>>()?;
    let all_negligible = rows.iter().all(|r| r.negligible);
    let lambda_increasing = rows.windows(2).all(|w| w[1].lambda > w[0].lambda);
    let mu: Vec<f64> = rows.iter().map(|r| r.mu0).collect();
    let mean = mu.iter().sum::<f64>() / mu.len() as f64;
    let mu0_spread = if mean > 0.0 {
        (mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - mu.iter().cloned().fold(f64::INFINITY, f64::min)) / mean
    } else {
        0.0
    };
    let dd = delta.as_f64();
    let bound_times_delta_sq =
        rows.iter().map(|r| r.value.unwrap_or(f64::INFINITY) * dd * dd).fold(f64::NEG_INFINITY, f64::max);
    Ok(SlidingSequence { delta: dd, rows, all_negligible, lambda_increasing, mu0_spread, bound_times_delta_sq })
}

/// Looks for a `δ` whose sliding sequence keeps the corner tetrahedron negligible under the profile's `f`
/// (so `M_γ = 0` and `μ₀ + d⁻ⁿM_γ ≤ λ_pocket` stays bounded) while `λ(Q_d)` grows.
///
/// Refused when the induced pair is admissible: the construction only has content beyond `f_n`.
pub fn demonstrate_precision<T: Real>(
    op: &HalfspaceOperator<T>,
    profile: &PrecisionProfile<T>,
    d: T,
    c_n: T,
    opts: &PrecisionOptions<T>,
) -> Result<PrecisionReport> {
    let n = op.n;
    let validation = validate_pair(&profile.pair(n, d * T::lit(2.0)), &SampleLattice::default());
    if validation.admissible {
        return Err(Error::Precondition(format!(
            "profile '{}' induces an admissible pair; the demonstration needs f beyond f_n",
            profile.label
        )));
    }
    if !profile.grows() {
        return Err(Error::Precondition(format!("profile '{}' does not grow on the sample lattice", profile.label)));
    }
    if opts.shells < 2 {
        return Err(Error::Precondition("a sliding sequence needs at least two cubes".into()));
    }
    let cache = CapacityCache::default();
    let mut sequences = Vec::new();
    let mut found_delta = None;
    for &delta in &opts.deltas {
        if !(delta > T::zero()) || delta > d {
            return Err(Error::Precondition(format!("delta must lie in (0, d], got {delta}")));
        }
        let s = sequence(op, profile, d, c_n, delta, opts, &cache)?;
        let ok = s.all_negligible && s.lambda_increasing && s.bound_times_delta_sq.is_finite();
        sequences.push(s);
        if ok {
            found_delta = Some(delta.as_f64());
            break;
        }
    }
    let note = match found_delta {
        Some(delta) => format!(
            "delta={delta}: tetrahedron negligible on all {} cubes, M_gamma=0, mu0 bounded by the pocket while lambda grows",
            opts.shells
        ),
        None => "inconclusive: no delta in the sweep kept the tetrahedron negligible with growing lambda".into(),
    };
    Ok(PrecisionReport {
        n,
        d: d.as_f64(),
        c_n: c_n.as_f64(),
        profile: profile.label.clone(),
        pair: validation,
        sequences,
        condition_fails: found_delta.is_some(),
        found_delta,
        note,
    })
}

pub fn write_tetra_csv(sweep: &TetraSweep, mut w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(&mut w);
    out.write_record(["delta", "capacity", "ratio_to_cube"])?;
    for &(delta, cap) in &sweep.points {
        out.write_record([delta.to_string(), cap.to_string(), (cap / sweep.cube_capacity).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mu0_csv(scan: &Mu0DeltaScan, mut w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(&mut w);
    out.write_record(["delta", "mu0", "mu0_delta_sq", "pocket"])?;
    for r in &scan.rows {
        out.write_record([r.delta.to_string(), r.mu0.to_string(), r.mu0_delta_sq.to_string(), r.pocket.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_precision_csv(report: &PrecisionReport, mut w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(&mut w);
    out.write_record([
        "delta",
        "shell",
        "mu0",
        "mu0_tilde",
        "gamma",
        "tetra_capacity",
        "cube_capacity",
        "negligible",
        "negligible_under_fn",
        "value",
        "lambda",
        "pocket",
    ])?;
    for s in &report.sequences {
        for r in &s.rows {
            out.write_record([
                s.delta.to_string(),
                r.shell.to_string(),
                r.mu0.to_string(),
                r.mu0_tilde.to_string(),
                r.gamma.to_string(),
                r.tetra_capacity.to_string(),
                r.cube_capacity.to_string(),
                r.negligible.to_string(),
                r.negligible_under_fn.to_string(),
                r.value.map_or_else(|| "inf".to_string(), |v| v.to_string()),
                r.lambda.to_string(),
                r.pocket.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_assigns_each_side() {
        let op = HalfspaceOperator::<f64>::standard(2).unwrap();
        let (a, v) = (op.vector_potential(), op.potential());
        // L₋: V vanishes, a is the bottle
        assert_eq!(v.eval(&[-1.0, -0.5]), 0.0);
        assert!(a.eval(&[-1.0, -0.5], 1) != 0.0);
        // L₊: a vanishes
        assert_eq!(a.eval(&[1.0, 0.5], 1), 0.0);
        assert_eq!(v.eval(&[1.0, 0.5]), 1.25);
        // on L the closed side carries V
        assert_eq!(v.eval(&[1.0, -1.0]), 2.0);
        assert_eq!(a.eval(&[1.0, -1.0], 1), 0.0);
    }

    #[test]
    fn corner_cube_touches_plane_at_delta() {
        let shift = sliding_shift(3, 2, 1.5);
        let c = corner_cube(3, 1.0, 0.3, &shift).unwrap();
        let top: f64 = (0..3).map(|k| c.upper(k)).sum();
        assert!((top - 0.3).abs() < 1e-12);
        assert!(corner_cube(3, 1.0, 0.3, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn tetra_mask_covers_potential_support() {
        let op = HalfspaceOperator::<f64>::standard(2).unwrap();
        let g = rasterize(&corner_cube(2, 1.0, 0.4, &sliding_shift(2, 1, 1.0)).unwrap(), 17).unwrap();
        let mask = tetrahedron_mask(&g);
        let v = op.potential().sample(&g).unwrap();
        for (c, &x) in v.values().iter().enumerate() {
            assert_eq!(x > 0.0, mask.contains_cell(c));
        }
    }

    #[test]
    fn delta_outside_range_is_refused() {
        let cache = CapacityCache::default();
        assert!(tetrahedron_capacity(1.0, 1.5, 3, 9, &cache).is_err());
        assert!(tetrahedron_capacity(1.0, 0.0, 3, 9, &cache).is_err());
    }

    #[test]
    fn profile_caps_below_one() {
        let p = PrecisionProfile::<f64>::logarithmic();
        assert!(p.grows());
        assert!(!PrecisionProfile::<f64>::flat().grows());
        for t in [0.0, 1.0, 10.0, 1e6] {
            assert!(p.f(2, t) <= F_CAP && p.f(3, t) > 0.0);
        }
    }
}
