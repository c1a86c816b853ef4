#![allow(dead_code)]

use magspec::lattice::{
    l2_norm_sq, quadratic_form, GridFunction, Grid, MagneticPotential, ScalarPotential,
};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

/// Smallest generalized eigenvalue of the discrete form restricted to `free` nodes, built
/// entry by entry from `quadratic_form` by polarization and diagonalized densely.
pub fn dense_bottom(grid: &Grid<f64>, a: &MagneticPotential<f64>, v: &ScalarPotential<f64>, free: &[usize]) -> f64 {
    let n = free.len();
    let basis = |coef: &[(usize, Complex<f64>)]| {
        let mut vals = vec![Complex::new(0.0, 0.0); grid.node_count()];
        for &(i, c) in coef {
            vals[i] += c;
        }
        GridFunction::new(grid.clone(), vals).unwrap()
    };
    let q = |coef: &[(usize, Complex<f64>)]| quadratic_form(&basis(coef), a, v).unwrap();
    let one = Complex::new(1.0, 0.0);
    let im = Complex::new(0.0, 1.0);
    let diag: Vec<f64> = free.iter().map(|&i| q(&[(i, one)])).collect();
    let mass: Vec<f64> = free.iter().map(|&i| l2_norm_sq(&basis(&[(i, one)]))).collect();
    let mut mat = DMatrix::<Complex<f64>>::zeros(n, n);
    for p in 0..n {
        mat[(p, p)] = Complex::new(diag[p], 0.0);
        for r in p + 1..n {
            let (i, j) = (free[p], free[r]);
            let s = diag[p] + diag[r];
            let re = (q(&[(i, one), (j, one)]) - s) / 2.0;
            let imv = -(q(&[(i, one), (j, im)]) - s) / 2.0;
            mat[(p, r)] = Complex::new(re, imv);
            mat[(r, p)] = Complex::new(re, -imv);
        }
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| mat[(i, j)] / (mass[i] * mass[j]).sqrt());
    SymmetricEigen::new(scaled).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn interior_nodes(grid: &Grid<f64>) -> Vec<usize> {
    (0..grid.node_count()).filter(|&i| !grid.is_boundary(i)).collect()
}

pub fn all_nodes(grid: &Grid<f64>) -> Vec<usize> {
    (0..grid.node_count()).collect()
}

/// Symmetric-gauge constant field `B` in the `(x¹, x²)` plane.
pub fn constant_field(grid: &Grid<f64>, b: f64) -> MagneticPotential<f64> {
    MagneticPotential::from_fn(grid.clone(), move |x, k| match k {
        0 => -0.5 * b * x[1],
        1 => 0.5 * b * x[0],
        _ => 0.0,
    })
    .unwrap()
}
