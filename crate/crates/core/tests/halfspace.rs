use magspec::capacity::CapacityCache;
use magspec::examples::*;
use magspec::lattice::{ScalarPotential, VectorPotential};

#[test]
fn tetrahedron_capacity_scales_in_space() {
    let sweep = tetrahedron_sweep(3, 1.0, &[0.25, 0.5, 1.0], 17).unwrap();
    println!("{sweep:?}");
    assert!((sweep.slope - 1.0).abs() < 0.15, "slope {}", sweep.slope);
    // monotone in δ and below the cube
    assert!(sweep.points.windows(2).all(|w| w[1].1 > w[0].1));
    assert!(sweep.points.last().unwrap().1 < sweep.cube_capacity);
}

#[test]
fn tetrahedron_inverse_capacity_is_logarithmic_in_plane() {
    let deltas: Vec<f64> = (0..5).map(|k| 10f64.powf(-1.0 + 0.25 * k as f64)).collect();
    let sweep = tetrahedron_sweep(2, 1.0, &deltas, 65).unwrap();
    println!("{sweep:?}");
    assert!(sweep.slope > 0.0);
    assert!(sweep.max_rel_residual < 0.1, "{}", sweep.max_rel_residual);
    let mut csv = Vec::new();
    write_tetra_csv(&sweep, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
}

#[test]
fn full_corner_is_half_the_square() {
    // δ = d in the plane: the triangle is half the cube, so its capacity sits strictly between
    let cache = CapacityCache::default();
    let tri = tetrahedron_capacity(1.0, 1.0, 2, 33, &cache).unwrap();
    let sweep = tetrahedron_sweep(2, 1.0, &[0.5, 1.0], 33).unwrap();
    assert!((tri - sweep.points[1].1).abs() < 1e-12);
    assert!(tri > 0.5 * sweep.cube_capacity && tri < sweep.cube_capacity);
}

#[test]
fn pure_gauge_field_has_no_local_energy() {
    // ã = ∇(Σx): still a gradient after restriction to L₋; with δ a multiple of h no link straddles L
    let grad = VectorPotential::closed(|_: &[f64], _| 1.0);
    let op = HalfspaceOperator::new(2, grad, ScalarPotential::harmonic()).unwrap();
    let scan = mu0_delta_scan(&op, 1.0, &[1.0, 0.5, 0.25], &sliding_shift(2, 2, 1.0), 17, &Default::default()).unwrap();
    for r in &scan.rows {
        assert!(r.mu0.abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn local_energy_is_bounded_by_the_pocket() {
    let op = HalfspaceOperator::standard(2).unwrap();
    let deltas = [1.0, 0.5, 0.25, 0.125];
    let scan = mu0_delta_scan(&op, 1.0, &deltas, &sliding_shift(2, 3, 1.0), 33, &Default::default()).unwrap();
    println!("{scan:?}");
    assert!(scan.bounded);
    assert!(scan.c_fit <= scan.c_pocket);
    // the largest pocket gives the smallest magnetic energy
    assert!(scan.rows[0].mu0 < scan.rows[0].pocket);
    let mut csv = Vec::new();
    write_mu0_csv(&scan, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
}

#[test]
fn precision_demonstration_in_space() {
    let op = HalfspaceOperator::standard(3).unwrap();
    let opts = PrecisionOptions::new(3, 1.0);
    let rep = demonstrate_precision(&op, &PrecisionProfile::logarithmic(), 1.0, 1.0, &opts).unwrap();
    println!("{}", serde_json::to_string_pretty(&rep).unwrap());
    assert!(rep.condition_fails);
    assert!(rep.pair.precision_profile);
    let seq = rep.sequences.last().unwrap();
    assert_eq!(seq.rows.len(), 5);
    assert!(seq.all_negligible && seq.lambda_increasing);
    for r in &seq.rows {
        assert_eq!(r.remaining, 0.0);
        // M_γ = 0, so the criterion value is μ₀ alone and the pocket bounds it
        assert_eq!(r.value, Some(r.mu0));
        assert!(r.mu0 <= r.pocket);
    }
    // the admissible f_n does not make the same corner negligible once the field is strong
    assert!(seq.rows.iter().any(|r| !r.negligible_under_fn));
    let mut csv = Vec::new();
    write_precision_csv(&rep, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().lines().count() > 5);
}

#[test]
fn precision_demonstration_in_plane() {
    let op = HalfspaceOperator::standard(2).unwrap();
    let rep = demonstrate_precision(&op, &PrecisionProfile::logarithmic(), 1.0, 1.0, &PrecisionOptions::new(2, 1.0)).unwrap();
    assert!(rep.found_delta.is_some());
}

#[test]
fn admissible_profile_is_refused() {
    let op = HalfspaceOperator::standard(3).unwrap();
    let err = demonstrate_precision(&op, &PrecisionProfile::flat(), 1.0, 1.0, &PrecisionOptions::new(3, 1.0)).unwrap_err();
    assert!(err.to_string().contains("admissible"));
}
