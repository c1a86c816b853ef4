mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{all_nodes, constant_field, dense_bottom, interior_nodes};
use magspec::lattice::{rasterize, Cube, GridFunction, MagneticPotential, ScalarPotential};
use magspec::spectral::{dirichlet_bottom, local_energy, neumann_bottom, EigenOptions};
use proptest::prelude::*;

fn opts() -> EigenOptions<f64> {
    EigenOptions::default()
}

#[test]
fn dirichlet_unit_square_near_two_pi_squared() {
    let g = rasterize(&Cube::unit(2).unwrap(), 129).unwrap();
    let a = MagneticPotential::zero(g.clone());
    let t = Instant::now();
    let b = dirichlet_bottom(&g, &a, &ScalarPotential::zero(), None, &opts()).unwrap();
    eprintln!("m=129 n=2: {} in {:?} ({} its)", b.value, t.elapsed(), b.iterations);
    assert!((b.value - 2.0 * PI * PI).abs() < 0.01 * 2.0 * PI * PI);
}

#[test]
fn dirichlet_unit_cube_richardson() {
    let t = Instant::now();
    let solve = |m: usize| {
        let g = rasterize(&Cube::unit(3).unwrap(), m).unwrap();
        let a = MagneticPotential::zero(g.clone());
        dirichlet_bottom(&g, &a, &ScalarPotential::zero(), None, &opts()).unwrap().value
    };
    let (coarse, fine) = (solve(25), solve(49));
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    eprintln!("n=3: {coarse} {fine} -> {extrapolated} in {:?}", t.elapsed());
    assert!((extrapolated - 3.0 * PI * PI).abs() < 0.01 * 3.0 * PI * PI);
}

#[test]
fn constant_shift_moves_bottoms_by_c() {
    let g = rasterize(&Cube::centered(2, 1.5).unwrap(), 17).unwrap();
    let a = constant_field(&g, 3.0);
    let v = ScalarPotential::closed(|x: &[f64]| x[0] * x[0]);
    let base = dirichlet_bottom(&g, &a, &v, None, &opts()).unwrap().value;
    let shifted = dirichlet_bottom(&g, &a, &v.clone().plus(ScalarPotential::Constant(2.5)), None, &opts()).unwrap().value;
    assert!((shifted - base - 2.5).abs() < 1e-6 * shifted);
    let nb = neumann_bottom(&g, &a, &v, None, &opts()).unwrap().value;
    let ns = neumann_bottom(&g, &a, &v.plus(ScalarPotential::Constant(2.5)), None, &opts()).unwrap().value;
    assert!((ns - nb - 2.5).abs() < 1e-6 * ns);
}

#[test]
fn edge_doubling_scales_by_quarter() {
    // dense oracle on m=5 confirms the discrete scaling law, then the solver matches it
    for dim in 2..=3 {
        let small = rasterize(&Cube::centered(dim, 1.0).unwrap(), 5).unwrap();
        let large = rasterize(&Cube::centered(dim, 2.0).unwrap(), 5).unwrap();
        let zs = MagneticPotential::zero(small.clone());
        let zl = MagneticPotential::zero(large.clone());
        let v = ScalarPotential::zero();
        let os = dense_bottom(&small, &zs, &v, &interior_nodes(&small));
        let ol = dense_bottom(&large, &zl, &v, &interior_nodes(&large));
        assert!((ol / os - 0.25).abs() < 1e-12);
        let s = dirichlet_bottom(&small, &zs, &v, None, &opts()).unwrap().value;
        let l = dirichlet_bottom(&large, &zl, &v, None, &opts()).unwrap().value;
        assert!((s - os).abs() < 1e-9 * os);
        assert!((l / s - 0.25).abs() < 1e-9);
    }
}

#[test]
fn solver_agrees_with_dense_oracle_magnetic() {
    let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 9).unwrap();
    let a = constant_field(&g, 7.0);
    let v = ScalarPotential::closed(|x: &[f64]| 1.0 + x[1].abs());
    let oracle_n = dense_bottom(&g, &a, &v, &all_nodes(&g));
    let oracle_d = dense_bottom(&g, &a, &v, &interior_nodes(&g));
    let n = neumann_bottom(&g, &a, &v, None, &opts()).unwrap().value;
    let d = dirichlet_bottom(&g, &a, &v, None, &opts()).unwrap().value;
    assert!((n - oracle_n).abs() < 1e-8 * oracle_n, "{n} vs {oracle_n}");
    assert!((d - oracle_d).abs() < 1e-8 * oracle_d, "{d} vs {oracle_d}");
}

#[test]
fn local_energy_zero_for_flat_connections() {
    let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 17).unwrap();
    let e = local_energy(&g, &MagneticPotential::zero(g.clone()), None, &opts()).unwrap();
    assert!(e.mu0.abs() < 1e-12);
    let phi: Vec<f64> = (0..g.node_count())
        .map(|i| {
            let x = g.node_coord(i);
            3.0 * (2.0 * x[0]).sin() + x[1] * x[1] * 4.0
        })
        .collect();
    let gauge = MagneticPotential::pure_gauge(g.clone(), &phi).unwrap();
    let e = local_energy(&g, &gauge, None, &opts()).unwrap();
    assert!(e.mu0.abs() < 1e-10, "{}", e.mu0);
    assert_eq!(e.mu0_tilde, e.mu0 * 1.0);
}

#[test]
fn constant_field_energy_monotone_in_b_and_vanishes_for_small_cubes() {
    // dense diagonalization on m=9 is the reference for both trends
    let mut prev = 0.0;
    for b in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 9).unwrap();
        let a = constant_field(&g, b);
        let oracle = dense_bottom(&g, &a, &ScalarPotential::zero(), &all_nodes(&g));
        let e = local_energy(&g, &a, None, &opts()).unwrap();
        assert!((e.mu0 - oracle).abs() < 1e-8 * oracle.max(1.0));
        assert!(e.mu0 > prev);
        prev = e.mu0;
    }
    let mut prev = f64::INFINITY;
    for d in [2.0, 1.0, 0.5, 0.25, 0.125] {
        let g = rasterize(&Cube::centered(2, d).unwrap(), 9).unwrap();
        let e = local_energy(&g, &constant_field(&g, 4.0), None, &opts()).unwrap();
        assert!(e.mu0 < prev);
        prev = e.mu0;
    }
    assert!(prev < 1e-2);
}

#[test]
fn refinement_converges_at_second_order() {
    let solve = |m: usize| {
        let g = rasterize(&Cube::centered(2, 1.0).unwrap(), m).unwrap();
        let a = constant_field(&g, 5.0);
        dirichlet_bottom(&g, &a, &ScalarPotential::harmonic(), None, &opts()).unwrap().value
    };
    let v: Vec<f64> = [9, 17, 33, 65].iter().map(|&m| solve(m)).collect();
    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    // monotone sequence
    assert!(diffs.iter().all(|d| d.signum() == diffs[0].signum()));
    let order = (diffs[1] / diffs[2]).log2();
    assert!((order - 2.0).abs() < 0.3, "observed order {order}");
}

#[test]
fn monotone_in_potential() {
    let g = rasterize(&Cube::centered(3, 1.0).unwrap(), 9).unwrap();
    let a = constant_field(&g, 2.0);
    let v1 = ScalarPotential::closed(|x: &[f64]| x[0] * x[0]);
    let v2 = ScalarPotential::closed(|x: &[f64]| x[0] * x[0] + 0.5 * (1.0 + x[1]));
    for kind in 0..2 {
        let f = if kind == 0 { dirichlet_bottom } else { neumann_bottom };
        let b1 = f(&g, &a, &v1, None, &opts()).unwrap().value;
        let b2 = f(&g, &a, &v2, None, &opts()).unwrap().value;
        assert!(b1 <= b2 + 1e-9);
    }
}

#[test]
fn eigenvector_attains_the_bottom() {
    let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 17).unwrap();
    let a = constant_field(&g, 3.0);
    let v = ScalarPotential::Constant(0.5);
    let b = neumann_bottom(&g, &a, &v, None, &opts()).unwrap();
    let u: GridFunction<f64> = b.eigenvector.unwrap();
    let q = magspec::lattice::quadratic_form(&u, &a, &v).unwrap();
    let n = magspec::lattice::l2_norm_sq(&u);
    assert!((q / n - b.value).abs() < 1e-10 * b.value);
}

#[test]
fn strong_field_nearly_degenerate_bottom() {
    // two corner states swapped by the half turn; a single-vector descent stalls here
    let (b, v0, d) = (8.514543115331612, 4.557128179390332, 1.6096699322175483);
    let g = rasterize(&Cube::centered(2, d).unwrap(), 11).unwrap();
    let a = constant_field(&g, b);
    let v = ScalarPotential::closed(move |x: &[f64]| v0 * (1.0 + x[0] * x[1]).abs());
    let mu = neumann_bottom(&g, &a, &v, None, &opts()).unwrap().value;
    let oracle = dense_bottom(&g, &a, &v, &all_nodes(&g));
    assert!((mu - oracle).abs() <= 1e-8 * oracle, "{mu} vs {oracle}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_invariance_of_mu0(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, k in 0.5f64..4.0, b in 0.0f64..6.0) {
        let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 13).unwrap();
        let a = constant_field(&g, b);
        let phi: Vec<f64> = (0..g.node_count()).map(|i| {
            let x = g.node_coord(i);
            c1 * (k * x[0]).sin() + c2 * (k * x[1] + x[0]).cos()
        }).collect();
        let e1 = local_energy(&g, &a, None, &opts()).unwrap().mu0;
        let e2 = local_energy(&g, &a.gauge_shift(&phi).unwrap(), None, &opts()).unwrap().mu0;
        prop_assert!((e1 - e2).abs() / e1.max(1.0) <= 1e-8);
    }

    #[test]
    fn neumann_below_dirichlet(b in 0.0f64..10.0, v0 in 0.0f64..5.0, d in 0.3f64..3.0) {
        let g = rasterize(&Cube::centered(2, d).unwrap(), 11).unwrap();
        let a = constant_field(&g, b);
        let v = ScalarPotential::closed(move |x: &[f64]| v0 * (1.0 + x[0] * x[1]).abs());
        let mu = neumann_bottom(&g, &a, &v, None, &opts()).unwrap().value;
        let la = dirichlet_bottom(&g, &a, &v, None, &opts()).unwrap().value;
        prop_assert!(mu >= 0.0);
        prop_assert!(mu <= la);
    }
}
