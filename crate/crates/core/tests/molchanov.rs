use std::time::Instant;

use magspec::capacity::{wiener_capacity, CapacityCache};
use magspec::lattice::{integrate, rasterize, CellField, CompactSetMask, Cube, DomainMask, ScalarPotential};
use magspec::molchanov::{
    molchanov_brute, molchanov_brute_with, molchanov_greedy, molchanov_greedy_with, negligibility_test, MolchanovQuery,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(cube: &Cube<f64>, m: usize, values: Vec<f64>) -> ScalarPotential<f64> {
    let g = rasterize(cube, m).unwrap();
    ScalarPotential::Table(CellField::new(g, values).unwrap())
}

fn random_query(rng: &mut ChaCha8Rng, m: usize) -> MolchanovQuery<f64> {
    let cube = Cube::centered(2, 1.0).unwrap();
    let cells = (m - 1) * (m - 1);
    let values: Vec<f64> = (0..cells)
        .map(|_| if rng.random_bool(0.3) { rng.random_range(5.0..50.0) } else { rng.random_range(0.0..2.0) })
        .collect();
    let v = table(&cube, m, values);
    MolchanovQuery { cube, v, gamma: rng.random_range(0.0..0.95), m, mandatory: None }
}

#[test]
fn brute_matches_plain_enumeration_on_three_by_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = random_query(&mut rng, 4);
    let g = rasterize(&q.cube, 4).unwrap();
    let full = wiener_capacity(&CompactSetMask::full(g.clone())).unwrap().value;
    for gamma in [0.05, 0.2, 0.5, 0.8] {
        let mut best = f64::INFINITY;
        for bits in 0u32..512 {
            let mask = CompactSetMask::new(g.clone(), (0..9).map(|c| bits >> c & 1 == 1).collect()).unwrap();
            if wiener_capacity(&mask).unwrap().value <= gamma * full {
                best = best.min(integrate(&q.v, &mask.complement()).unwrap());
            }
        }
        let r = molchanov_brute(&MolchanovQuery { gamma, ..q.clone() }, 16).unwrap();
        assert!((r.value - best).abs() <= 1e-12 * best.max(1.0), "{} vs {best}", r.value);
    }
}

#[test]
fn spike_is_removed_when_budget_covers_a_cell() {
    let cube = Cube::centered(2, 1.0).unwrap();
    let mut values = vec![1.0; 9];
    values[4] = 100.0;
    let v = table(&cube, 4, values);
    let g = rasterize(&cube, 4).unwrap();
    let single = wiener_capacity(&CompactSetMask::from_cell_indices(g.clone(), &[4]).unwrap()).unwrap().value;
    let full = wiener_capacity(&CompactSetMask::full(g.clone())).unwrap().value;
    let gamma = single / full * 1.0001;
    let q = MolchanovQuery { cube, v, gamma, m: 4, mandatory: None };
    let background = 8.0 * g.cell_volume();
    for r in [molchanov_greedy(&q).unwrap(), molchanov_brute(&q, 16).unwrap()] {
        assert!((r.value - background).abs() < 1e-12);
        assert!(r.witness.contains_cell(4));
    }
}

#[test]
fn oracle_sandwich_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t = Instant::now();
    let mut worst: f64 = 1.0;
    for k in 0..40 {
        let m = if k % 2 == 0 { 4 } else { 5 };
        let q = random_query(&mut rng, m);
        let cache = CapacityCache::default();
        let b = molchanov_brute_with(&q, 16, &cache).unwrap();
        let g = molchanov_greedy_with(&q, &cache).unwrap();
        assert!(b.value <= g.value * (1.0 + 1e-12));
        assert!(b.cap_used <= b.budget && g.cap_used <= g.budget);
        if b.value > 0.0 {
            worst = worst.max(g.value / b.value);
        } else {
            assert_eq!(g.value, 0.0);
        }
    }
    eprintln!("worst greedy/brute {worst:.4} in {:?}", t.elapsed());
    assert!(worst <= 1.5);
}

#[test]
fn monotone_in_gamma_and_potential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_query(&mut rng, 5);
    let cache = CapacityCache::default();
    let gammas: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for &gamma in &gammas {
        let q = MolchanovQuery { gamma, ..q.clone() };
        let g = molchanov_greedy_with(&q, &cache).unwrap().value;
        let b = molchanov_brute_with(&q, 16, &cache).unwrap().value;
        assert!(g <= prev.0 && b <= prev.1);
        prev = (g, b);
    }
    let bigger = MolchanovQuery { v: q.v.clone().plus(ScalarPotential::Constant(0.5)), ..q.clone() };
    for gamma in [0.1, 0.4, 0.7] {
        let lo = molchanov_brute_with(&MolchanovQuery { gamma, ..q.clone() }, 16, &cache).unwrap().value;
        let hi = molchanov_brute(&MolchanovQuery { gamma, ..bigger.clone() }, 16).unwrap().value;
        assert!(lo <= hi);
    }
}

#[test]
fn uniform_potential_prefers_compact_blobs() {
    let cube = Cube::centered(2, 1.0).unwrap();
    let q = MolchanovQuery { cube: cube.clone(), v: ScalarPotential::Constant(1.0), gamma: 0.6, m: 5, mandatory: None };
    let r = molchanov_brute(&q, 16).unwrap();
    let k = r.witness.count();
    assert!(k >= 2);
    // any scattered choice of the same size with no shared edges costs more capacity
    let g = r.witness.grid().clone();
    let scattered = CompactSetMask::from_cell_indices(g, &[0, 2, 8, 10, 5, 7, 13, 15][..k.min(8)]).unwrap();
    assert!(wiener_capacity(&scattered).unwrap().value >= r.cap_used);
}

#[test]
fn domain_constraint_forces_complement_cells() {
    let cube = Cube::centered(2, 1.0).unwrap();
    let g = rasterize(&cube, 5).unwrap();
    let omega = DomainMask::from_rule(g.clone(), |x| x[0] < 0.3);
    let mandatory = omega.complement_cells();
    let q = MolchanovQuery { cube, v: ScalarPotential::harmonic(), gamma: 0.9, m: 5, mandatory: Some(mandatory.clone()) };
    let r = molchanov_greedy(&q).unwrap();
    assert!(!r.infeasible);
    assert!(mandatory.is_subset(&r.witness));
    let tight: MolchanovQuery<f64> = MolchanovQuery { gamma: 0.05, ..q };
    assert!(molchanov_greedy(&tight).unwrap().value.is_infinite());
}

#[test]
fn thin_slab_threshold_by_bisection() {
    // space: slab of thickness δ through the center; negligibility flips at one δ
    let cube = Cube::centered(3, 1.0).unwrap();
    let g = rasterize(&cube, 17).unwrap();
    let slab = |delta: f64| CompactSetMask::sub_box(g.clone(), &[-0.5, -0.5, -delta / 2.0], &[0.5, 0.5, delta / 2.0]);
    let gamma = 0.85;
    let h = g.h();
    let (mut lo, mut hi) = (2.0 * h, 1.0);
    assert!(!negligibility_test(&slab(hi), gamma).unwrap());
    assert!(negligibility_test(&slab(lo), gamma).unwrap());
    while hi - lo > h {
        let mid = 0.5 * (lo + hi);
        if negligibility_test(&slab(mid), gamma).unwrap() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!(negligibility_test(&slab(lo), gamma).unwrap() && !negligibility_test(&slab(hi), gamma).unwrap());
    assert!(lo > 2.0 * h && hi < 1.0);
}
