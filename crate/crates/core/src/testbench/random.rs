use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::{CompactSetMask, Grid, GridFunction, ScalarPotential, VectorPotential};

/// Truncated cosine/sine series with bounded coefficients plus piecewise-linear bumps.
pub fn smooth_function(grid: &Grid<f64>, rng: &mut ChaCha8Rng, complex: bool) -> GridFunction<f64> {
    let n = grid.dim();
    let cube = grid.cube();
    let d = cube.edge();
    let lo: Vec<f64> = (0..n).map(|k| cube.lower(k)).collect();
    let modes: Vec<(Vec<f64>, f64, f64, f64)> = (0..4)
        .map(|_| {
            let k: Vec<f64> = (0..n).map(|_| rng.random_range(0..3) as f64).collect();
            (k, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..2)
        .map(|_| {
            let p: Vec<f64> = (0..n).map(|k| lo[k] + rng.random_range(0.0..d)).collect();
            (p, rng.random_range(0.1..0.5) * d, rng.random_range(-2.0..2.0))
        })
        .collect();
    let offset = rng.random_range(-1.0..1.0);
    GridFunction::from_fn(grid.clone(), |x| {
        let mut re = offset;
        let mut im = 0.0;
        for (k, a, b, phase) in &modes {
            let arg: f64 = (0..n).map(|j| k[j] * std::f64::consts::PI * (x[j] - lo[j]) / d).sum();
            re += a * (arg + phase).cos();
            im += b * (arg - phase).sin();
        }
        for (p, r, amp) in &bumps {
            let dist = (0..n).map(|j| (x[j] - p[j]).powi(2)).sum::<f64>().sqrt();
            re += amp * (1.0 - dist / r).max(0.0);
        }
        Complex::new(re, if complex { im } else { 0.0 })
    })
    .expect("finite samples")
}

/// Random nonempty compact set: a ball, a box or a cell cluster, with linear size in `[lo, hi]·d`.
pub fn random_set(grid: &Grid<f64>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CompactSetMask<f64> {
    let n = grid.dim();
    let cube = grid.cube();
    let d = cube.edge();
    let size = rng.random_range(lo..=hi) * d;
    let center: Vec<f64> = (0..n).map(|k| cube.lower(k) + rng.random_range(0.0..d)).collect();
    let mut mask = match rng.random_range(0..3) {
        0 => CompactSetMask::ball(grid.clone(), &center, size / 2.0),
        1 => {
            let a: Vec<f64> = center.iter().map(|c| c - size / 2.0).collect();
            let b: Vec<f64> = center.iter().map(|c| c + size / 2.0).collect();
            CompactSetMask::sub_box(grid.clone(), &a, &b)
        }
        _ => {
            let k = ((size / grid.h()).powi(n as i32).round() as usize).clamp(1, grid.cell_count());
            let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..grid.cell_count())).collect();
            CompactSetMask::from_cell_indices(grid.clone(), &idx).expect("indices in range")
        }
    };
    if mask.is_empty() {
        let c = grid.cell_flat(&vec![0; n]);
        let near = (0..grid.cell_count())
            .min_by(|&a, &b| {
                let da: f64 = (0..n).map(|k| (grid.cell_center(a)[k] - center[k]).powi(2)).sum();
                let db: f64 = (0..n).map(|k| (grid.cell_center(b)[k] - center[k]).powi(2)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap_or(c);
        mask.insert(near);
    }
    mask
}

/// `u · min(1, dist(x, closure(F)) / ρ)`: vanishes on the closure of `F`.
pub fn vanish_on(u: &GridFunction<f64>, f: &CompactSetMask<f64>, rho: f64) -> GridFunction<f64> {
    let g = u.grid();
    let n = g.dim();
    let closure = f.node_closure();
    let pts: Vec<[f64; 3]> = (0..g.node_count()).filter(|&i| closure[i]).map(|i| g.node_coord(i)).collect();
    let values = (0..g.node_count())
        .map(|i| {
            let x = g.node_coord(i);
            let dist = pts
                .iter()
                .map(|p| (0..n).map(|k| (x[k] - p[k]).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            u.values()[i] * (dist / rho).min(1.0)
        })
        .collect();
    GridFunction::new(g.clone(), values).expect("finite samples")
}

/// `u · Π sin(π(xᵏ − lowerᵏ)/d)`: vanishes on the cube boundary.
pub fn vanish_on_boundary(u: &GridFunction<f64>) -> GridFunction<f64> {
    let g = u.grid();
    let cube = g.cube();
    let d = cube.edge();
    let values = (0..g.node_count())
        .map(|i| {
            if g.is_boundary(i) {
                return Complex::new(0.0, 0.0);
            }
            let x = g.node_coord(i);
            let w: f64 = (0..g.dim()).map(|k| (std::f64::consts::PI * (x[k] - cube.lower(k)) / d).sin()).product();
            u.values()[i] * w
        })
        .collect();
    GridFunction::new(g.clone(), values).expect("finite samples")
}

/// Smooth nonnegative potential with a few random wells and spikes.
pub fn random_potential(rng: &mut ChaCha8Rng, n: usize, lo: &[f64], d: f64) -> ScalarPotential<f64> {
    let spikes: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let p: Vec<f64> = (0..n).map(|k| lo[k] + rng.random_range(0.0..d)).collect();
            (p, rng.random_range(0.15..0.5) * d, rng.random_range(0.0..40.0))
        })
        .collect();
    let base = rng.random_range(0.0..2.0);
    ScalarPotential::closed(move |x: &[f64]| {
        let mut v = base;
        for (p, r, amp) in &spikes {
            let dist = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            v += amp * (1.0 - dist / r).max(0.0);
        }
        v
    })
}

/// Linear vector potential `a_k(x) = Σ_j A_kj x_j` with random entries (constant field plus gauge part).
pub fn random_linear_field(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> VectorPotential<f64> {
    let m: Vec<f64> = (0..n * n).map(|_| rng.random_range(-scale..scale)).collect();
    VectorPotential::closed(move |x: &[f64], k| (0..x.len()).map(|j| m[k * x.len() + j] * x[j]).sum())
}

/// Potential `amp` away from a small well around `p` and zero inside it, with a linear ramp of width `r`.
pub fn well_potential(rng: &mut ChaCha8Rng, n: usize, lo: &[f64], d: f64) -> (ScalarPotential<f64>, Vec<f64>, f64) {
    let p: Vec<f64> = (0..n).map(|k| lo[k] + rng.random_range(0.2..0.8) * d).collect();
    let r = rng.random_range(0.1..0.35) * d;
    let amp = rng.random_range(1.0..200.0);
    let q = p.clone();
    let v = ScalarPotential::closed(move |x: &[f64]| {
        let dist = q.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        amp * ((dist - r) / r).clamp(0.0, 1.0)
    });
    (v, p, r)
}

/// Tent of radius `r` around `p` on the grid.
pub fn tent(grid: &Grid<f64>, p: &[f64], r: f64) -> GridFunction<f64> {
    let p = p.to_vec();
    GridFunction::from_real_fn(grid.clone(), move |x| {
        let dist = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        (1.0 - dist / r).max(0.0)
    })
    .expect("finite samples")
}
