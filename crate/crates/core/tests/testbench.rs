use magspec::capacity::{CapacityCache, CapacityOptions};
use magspec::criteria::ConstantsLedger;
use magspec::lattice::*;
use magspec::testbench::random::{smooth_function, vanish_on_boundary};
use magspec::testbench::*;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn grid(n: usize, m: usize, d: f64) -> Grid<f64> {
    rasterize(&Cube::from_lower(&vec![0.0; n], d).unwrap(), m).unwrap()
}

#[test]
fn poincare_cosine_is_sharp() {
    for d in [1.0, 2.5] {
        let g = grid(2, 33, d);
        let u = GridFunction::from_real_fn(g, |x| (PI * x[0] / d).cos()).unwrap();
        let c = check_poincare(&u);
        let want = d * d / (PI * PI);
        let got = c.ratio.unwrap();
        assert!((got - want).abs() / want < 0.01, "d={d}: {got} vs {want}");
        assert!(c.passed);
    }
}

#[test]
fn poincare_random_functions_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..200 {
        let g = grid(2 + i % 2, if i % 2 == 0 { 17 } else { 7 }, 1.0 + (i % 3) as f64);
        let c = check_poincare(&smooth_function(&g, &mut rng, i % 4 < 2));
        assert!(c.passed, "case {i}: {c:?}");
    }
}

#[test]
fn two_term_hand_cases() {
    let cache = CapacityCache::default();
    let g = grid(2, 4, 1.0);
    let one = GridFunction::from_real_fn(g.clone(), |_| 1.0).unwrap();
    // V ≡ 0: second term is the +∞ sentinel
    let c = check_two_term(&one, &ScalarPotential::zero(), 0.3, 1.0, &cache).unwrap();
    assert_eq!(c.rhs, f64::INFINITY);
    assert!(c.passed);
    // u ≡ 1, V ≡ 1, small γ: nothing is removable, so M = dⁿ and rhs = 4dⁿ
    let c = check_two_term(&one, &ScalarPotential::Constant(1.0), 1e-3, 1.0, &cache).unwrap();
    assert!((c.lhs - 1.0).abs() < 1e-12);
    assert!((c.rhs - 4.0).abs() < 1e-9, "{c:?}");
}

#[test]
fn levelset_constant_function_holds_below_one() {
    // u ≡ 1, k = 1/2: E_k = Q_d, E = d⁻², ratio = cap(Q_d)·k²/dⁿ⁻²
    let cache = CapacityCache::default();
    let g = grid(2, 9, 1.0);
    let one = GridFunction::from_real_fn(g.clone(), |_| 1.0).unwrap();
    let c = check_levelset_cap(&one, 0.5, None, f64::INFINITY, &cache).unwrap();
    let cap_q = cache.standard(&CompactSetMask::full(g)).unwrap();
    assert!((c.ratio.unwrap() - cap_q * 0.25).abs() < 1e-9 * cap_q);
    let empty = check_levelset_cap(&one, 10.0, None, 1.0, &cache).unwrap();
    assert_eq!(empty.lhs, 0.0);
    assert!(empty.passed);
}

#[test]
fn restriction_full_cube_scaling() {
    // R = Q_d and u ≡ 1: lhs = dⁿ, rhs factor φ(dⁿ)·dⁿ⁻²; in space the ratio is d^{n}/(d²·dⁿ⁻²) = 1 for every d
    for d in [0.5, 1.0, 3.0] {
        let g = grid(3, 5, d);
        let one = GridFunction::from_real_fn(g.clone(), |_| 1.0).unwrap();
        let c = check_restriction(&one, &CompactSetMask::full(g), f64::INFINITY).unwrap();
        assert!((c.ratio.unwrap() - 1.0).abs() < 1e-12, "d={d}: {:?}", c.ratio);
    }
    let g = grid(2, 9, 1.0);
    let one = GridFunction::from_real_fn(g.clone(), |_| 1.0).unwrap();
    let c = check_restriction(&one, &CompactSetMask::empty(g), 0.0).unwrap();
    assert_eq!(c.lhs, 0.0);
    assert!(c.passed);
}

#[test]
fn cap_dirichlet_random_functions_pass_with_four() {
    let cache = CapacityCache::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = grid(2, 9, 1.0);
    for i in 0..20 {
        let u = vanish_on_boundary(&smooth_function(&g, &mut rng, i % 2 == 0));
        let c = check_cap_dirichlet(&u, &CompactSetMask::full(g.clone()), &cache).unwrap();
        assert!(c.passed, "{c:?}");
    }
    let zero = GridFunction::constant(g.clone(), Complex::new(0.0, 0.0));
    let c = check_cap_dirichlet(&zero, &CompactSetMask::full(g), &cache).unwrap();
    assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
}

#[test]
fn cutoff_of_small_center_ball_keeps_a_quarter() {
    let g = grid(2, 17, 1.0);
    let ball = CompactSetMask::ball(g, &[0.5, 0.5], 0.05);
    let w = build_cutoff(&ball, f64::INFINITY, &CapacityOptions::default()).unwrap();
    assert!(w.mass_ratio >= 0.25, "{}", w.mass_ratio);
    assert!(w.psi.values().iter().all(|z| z.re >= -1e-12 && z.re <= 1.0 + 1e-12));
    // a threshold below the set's fraction refuses the construction
    let g = grid(2, 17, 1.0);
    let big = CompactSetMask::ball(g, &[0.5, 0.5], 0.4);
    assert!(build_cutoff(&big, 0.1, &CapacityOptions::default()).is_err());
}

#[test]
fn suite_is_deterministic() {
    let cfg = SuiteConfig { cases: 6, ..SuiteConfig::new(2, 9) };
    let k = Constants {
        cap_upper: 10.0,
        two_term: 1.0,
        levelset_cap: 20.0,
        restriction: 2.0,
        cutoff_energy: 0.5,
        cutoff_cap_fraction: 0.2,
    };
    let a = serde_json::to_string(&run_suite(&cfg, &k).unwrap()).unwrap();
    let b = serde_json::to_string(&run_suite(&cfg, &k).unwrap()).unwrap();
    assert_eq!(a, b);
}

fn calibrate_and_validate(n: usize) {
    let mut ledger = ConstantsLedger::default();
    let cal = calibrate(&SuiteConfig::new(n, 1), &mut ledger, "test-calibration").unwrap();
    assert_eq!(cal.failures, 0);
    // the ledger round-trips through its text form
    let ledger = ConstantsLedger::from_toml(&ledger.to_toml().unwrap()).unwrap();
    for seed in [1, 2] {
        let v = validate(&SuiteConfig::new(n, seed), &ledger).unwrap();
        for c in v.suite.cases.iter().filter(|c| !c.passed) {
            eprintln!("violation: {c:?}");
        }
        println!("n={n} seed={seed} failures={} drift={:?}", v.suite.failures, v.drift);
        assert_eq!(v.suite.failures, 0);
        assert!(v.drift.values().all(|&d| d < DRIFT_LIMIT), "{:?}", v.drift);
        assert!(v.passed);
        // every applicable pair satisfies the diamagnetic inequality
        assert!(v.suite.cases.iter().any(|c| c.name == "diamagnetic"));
    }
}

#[test]
fn calibrate_then_validate_plane() {
    calibrate_and_validate(2);
}

#[test]
fn calibrate_then_validate_space() {
    calibrate_and_validate(3);
}

#[test]
fn validate_without_constants_is_an_error() {
    assert!(validate(&SuiteConfig::new(2, 3), &ConstantsLedger::default()).is_err());
}

#[test]
fn bridge_free_laplacian_forces_intercept() {
    // a ≡ 0, V ≡ 0: μ = 0 and λ d² = discrete nπ², so B ≥ that value
    let cubes: Vec<_> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&d| (VectorPotential::Zero, ScalarPotential::zero(), Cube::from_lower(&[0.0, 0.0], d).unwrap()))
        .collect();
    let fit = check_bridge(&cubes, 17, &Default::default()).unwrap();
    let h = 1.0 / 16.0;
    let discrete = 2.0 * (2.0 / h * (PI * h / 2.0).sin()).powi(2);
    assert!(fit.points.iter().all(|p| p.1.abs() < 1e-10));
    assert!((fit.b_envelope - discrete).abs() < 1e-6 * discrete, "{} vs {discrete}", fit.b_envelope);
    assert_eq!(fit.order_violations, 0);
}

#[test]
fn bridge_random_fit_orders_and_shift() {
    let inst = bridge_instances(2, 12, 4).unwrap();
    let fit = check_bridge(&inst, 9, &Default::default()).unwrap();
    assert_eq!(fit.order_violations, 0);
    assert!(fit.a.is_finite() && fit.b_envelope >= fit.b);
    // V + c on unit cubes shifts μ d² and λ d² by c, which leaves A unchanged
    let unit: Vec<_> = inst
        .iter()
        .map(|(a, v, c)| (a.clone(), v.clone(), Cube::from_lower(&[c.lower(0), c.lower(1)], 1.0).unwrap()))
        .collect();
    let shifted: Vec<_> = unit.iter().map(|(a, v, c)| (a.clone(), v.clone().plus(ScalarPotential::Constant(3.0)), c.clone())).collect();
    let f0 = check_bridge(&unit, 9, &Default::default()).unwrap();
    let f1 = check_bridge(&shifted, 9, &Default::default()).unwrap();
    assert!((f0.a - f1.a).abs() < 1e-6 * f0.a.abs().max(1.0), "{} vs {}", f0.a, f1.a);
}

#[test]
fn bridge_calibration_writes_ledger() {
    let mut ledger = ConstantsLedger::default();
    let fit = calibrate_bridge(2, 9, 3, &mut ledger, "bridge").unwrap();
    assert_eq!(ledger.require("bridge_a_n2").unwrap(), fit.a);
    assert_eq!(ledger.require("bridge_b_n2").unwrap(), fit.b_envelope);
}
