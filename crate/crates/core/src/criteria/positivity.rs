use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityCache, CapacityOptions};
use crate::error::{Error, Result};
use crate::lattice::{rasterize, Cube, ScalarPotential, VectorPotential};
use crate::molchanov::{molchanov_greedy_with, MolchanovQuery};
use crate::scalar::Real;
use crate::spectral::{local_energy, neumann_bottom, EigenOptions, LocalEnergy};

/// Relative slack on the positivity inequalities; the constant-potential case is an equality.
pub const POSITIVITY_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositivityVariant {
    /// Fixed `c, d₁, d`: `μ₀ + d⁻ⁿ M_c ≥ d₁⁻²`.
    B,
    /// As (b) with `c = c_n`.
    C,
    /// Every `d > d₂`: `μ₀ + d⁻ⁿ M_c ≥ c̃ d⁻²`.
    D,
    /// As (d) with `c = c_n`, `c̃ = c̃_n`.
    E,
}

impl std::str::FromStr for PositivityVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(Self::B),
            "c" => Ok(Self::C),
            "d" => Ok(Self::D),
            "e" => Ok(Self::E),
            _ => Err(Error::Precondition(format!("unknown positivity variant '{s}'"))),
        }
    }
}

/// Constants of the inequalities. For (c)/(e) the caller passes the ledger values of `c_n`, `c̃_n` as `c`, `c_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityParams {
    pub c: f64,
    pub d1: f64,
    pub d: f64,
    pub d2: f64,
    pub c_tilde: f64,
}

/// Random cubes: lower corners uniform in `[−box_radius, box_radius]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeSample {
    pub count: usize,
    pub seed: u64,
    pub box_radius: f64,
    /// Nodes per edge.
    pub m: usize,
}

impl Default for CubeSample {
    fn default() -> Self {
        Self { count: 12, seed: 7, box_radius: 10.0, m: 7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityCase {
    pub lower: Vec<f64>,
    pub d: f64,
    pub mu0: f64,
    pub m_c: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `μ(Q_d; H_{a,V})`.
    pub mu: f64,
    /// `μ ≥ d₁⁻²`.
    pub localized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub variant: PositivityVariant,
    pub params: PositivityParams,
    pub cases: Vec<PositivityCase>,
    pub verdict: bool,
    pub localization_verdict: bool,
    pub agree: bool,
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - POSITIVITY_RTOL * rhs.abs()
}

/// Evaluates one positivity variant over random cubes and cross-checks with `μ(Q_d) ≥ d₁⁻²`.
pub fn positivity_check<T: Real>(
    a: &VectorPotential<T>,
    v: &ScalarPotential<T>,
    n: usize,
    variant: PositivityVariant,
    params: PositivityParams,
    sample: &CubeSample,
    eigen: &EigenOptions<T>,
) -> Result<PositivityReport> {
    let p = params;
    let sized = matches!(variant, PositivityVariant::D | PositivityVariant::E);
    let positive = |x: f64| x > 0.0 && x.is_finite();
    let ok = positive(p.d1) && (sized && positive(p.d2) && positive(p.c_tilde) || !sized && positive(p.d));
    if !ok || !(0.0..1.0).contains(&p.c) || sample.count == 0 {
        return Err(Error::Precondition(format!("invalid positivity parameters {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
    let draws: Vec<(Vec<f64>, f64)> = (0..sample.count)
        .map(|_| {
            let lower = (0..n).map(|_| rng.random_range(-sample.box_radius..=sample.box_radius)).collect();
            let d = if sized { p.d2 * (1.0 + rng.random_range(f64::EPSILON..=1.0)) } else { p.d };
            (lower, d)
        })
        .collect();
    let cache = CapacityCache::new(CapacityOptions::default());
    let cases: Vec<PositivityCase> = draws
        .par_iter()
        .map(|(lower, d)| {
            let lo: Vec<T> = lower.iter().map(|&x| T::lit(x)).collect();
            let cube = Cube::from_lower(&lo, T::lit(*d))?;
            let grid = rasterize(&cube, sample.m)?;
            let field = a.sample(&grid)?;
            let energy = if a.is_zero() {
                LocalEnergy { mu0: T::zero(), mu0_tilde: T::zero() }
            } else {
                local_energy(&grid, &field, None, eigen)?
            };
            let q = MolchanovQuery { cube, v: v.clone(), gamma: T::lit(p.c), m: sample.m, mandatory: None };
            let m_c = molchanov_greedy_with(&q, &cache)?.value.as_f64();
            let mu0 = energy.mu0.as_f64();
            let lhs = mu0 + m_c / d.powi(n as i32);
            let rhs = if sized { p.c_tilde / (d * d) } else { 1.0 / (p.d1 * p.d1) };
            let mu = neumann_bottom(&grid, &field, v, None, eigen)?.value.as_f64();
            Ok(PositivityCase {
                lower: lower.clone(),
                d: *d,
                mu0,
                m_c,
                lhs,
                rhs,
                holds: within(lhs, rhs),
                mu,
                localized: within(mu, 1.0 / (p.d1 * p.d1)),
            })
        })
        .collect::<Result<_>>()?;
    let verdict = cases.iter().all(|c| c.holds);
    let localization_verdict = cases.iter().all(|c| c.localized);
    Ok(PositivityReport {
        variant,
        params,
        cases,
        verdict,
        localization_verdict,
        agree: verdict == localization_verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_parsing() {
        assert_eq!("d".parse::<PositivityVariant>().unwrap(), PositivityVariant::D);
        assert!("x".parse::<PositivityVariant>().is_err());
    }

    #[test]
    fn bad_params_rejected() {
        let p = PositivityParams { c: 1.5, d1: 1.0, d: 1.0, d2: 1.0, c_tilde: 1.0 };
        let r = positivity_check::<f64>(
            &VectorPotential::Zero,
            &ScalarPotential::Constant(1.0),
            2,
            PositivityVariant::B,
            p,
            &CubeSample::default(),
            &EigenOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_potential_fails() {
        let p = PositivityParams { c: 0.01, d1: 1.0, d: 1.0, d2: 1.0, c_tilde: 1.0 };
        let sample = CubeSample { count: 3, m: 5, ..CubeSample::default() };
        let r = positivity_check::<f64>(
            &VectorPotential::Zero,
            &ScalarPotential::zero(),
            2,
            PositivityVariant::B,
            p,
            &sample,
            &EigenOptions::default(),
        )
        .unwrap();
        assert!(!r.verdict && !r.localization_verdict && r.agree);
        assert!(r.cases.iter().all(|c| c.lhs == 0.0));
    }
}
