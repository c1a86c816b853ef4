use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

type Profile<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// `f_n(t) = (1+t)^{(2−n)/2}` for `n ≥ 3`, `(1 + log(1+t))⁻¹` for `n = 2`.
pub fn f_n<T: Real>(n: usize, t: T) -> T {
    if n == 2 {
        T::one() / (T::one() + t.ln_1p())
    } else {
        (T::one() + t).powf(T::lit((2.0 - n as f64) / 2.0))
    }
}

/// Pair `(f, g)` parametrizing the discreteness conditions.
#[derive(Clone)]
pub struct AdmissiblePair<T> {
    pub n: usize,
    /// `g` is sampled on `(0, d0)`.
    pub d0: T,
    f: Profile<T>,
    g: Profile<T>,
    pub label: String,
}

impl<T: Real> fmt::Debug for AdmissiblePair<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdmissiblePair({}, n={}, d0={})", self.label, self.n, self.d0)
    }
}

impl<T: Real> AdmissiblePair<T> {
    pub fn new(
        n: usize,
        d0: T,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        g: impl Fn(T) -> T + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Self {
        Self { n, d0, f: Arc::new(f), g: Arc::new(g), label: label.into() }
    }

    /// `f = f_n`, `g(d) = d²`.
    pub fn standard(n: usize, d0: T) -> Self {
        Self::new(n, d0, move |t| f_n(n, t), |d| d * d, "f_n, d^2")
    }

    pub fn f(&self, t: T) -> T {
        (self.f)(t)
    }

    pub fn g(&self, d: T) -> T {
        (self.g)(d)
    }

    /// `γ = c_n f(μ̃₀) g(d)⁻¹ d²`.
    pub fn gamma(&self, c_n: T, mu0_tilde: T, d: T) -> T {
        c_n * self.f(mu0_tilde) * (d * d / self.g(d))
    }
}

/// Log-spaced sample points for [`validate_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleLattice {
    pub t_max: f64,
    pub t_points: usize,
    /// Smallest sampled `d` as a fraction of `d0`.
    pub d_min_fraction: f64,
    pub d_points: usize,
}

impl Default for SampleLattice {
    fn default() -> Self {
        Self { t_max: 1e8, t_points: 161, d_min_fraction: 1e-4, d_points: 81 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairViolationKind {
    NotPositive,
    NotFinite,
    NotDecreasing,
    AboveFn,
    GScale,
    GNotVanishing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairViolation {
    pub kind: PairViolationKind,
    /// Sample point (`t` for `f`, `d` for `g`).
    pub at: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairValidation {
    pub label: String,
    pub admissible: bool,
    /// `f/f_n` exceeds 1 and keeps growing on the sampled tail.
    pub precision_profile: bool,
    pub violations: Vec<PairViolation>,
}

impl PairValidation {
    pub fn first_violation(&self) -> Option<&PairViolation> {
        self.violations.first()
    }

    /// `Err(Validation)` naming the first failing sample.
    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            None => Ok(self),
            Some(v) => Err(Error::Validation(format!(
                "pair '{}' is not admissible: {:?} at {} (value {}, bound {}){}",
                self.label,
                v.kind,
                v.at,
                v.value,
                v.bound,
                if self.precision_profile { "; precision profile" } else { "" }
            ))),
        }
    }
}

fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1).max(1) as f64).exp()).collect()
}

const REL: f64 = 1e-12;

/// Samples `f` on `{0} ∪ [1e-4, t_max]` and `g` on `[d_min, d0)`, both log-spaced.
pub fn validate_pair<T: Real>(pair: &AdmissiblePair<T>, lattice: &SampleLattice) -> PairValidation {
    let mut violations = Vec::new();
    let n = pair.n;
    let mut ts = vec![0.0];
    ts.extend(log_space(1e-4, lattice.t_max, lattice.t_points));
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::with_capacity(ts.len());
    for &t in &ts {
        let tv = T::lit(t);
        let f = pair.f(tv).as_f64();
        let bound = f_n(n, tv).as_f64();
        let mut push = |kind, value, bound| violations.push(PairViolation { kind, at: t, value, bound });
        if !f.is_finite() {
            push(PairViolationKind::NotFinite, f, 0.0);
            continue;
        }
        if f <= 0.0 {
            push(PairViolationKind::NotPositive, f, 0.0);
        }
        if let Some(p) = prev {
            if f > p * (1.0 + REL) {
                push(PairViolationKind::NotDecreasing, f, p);
            }
        }
        if f > bound * (1.0 + REL) {
            push(PairViolationKind::AboveFn, f, bound);
        }
        prev = Some(f);
        ratios.push(f / bound);
    }
    let tail = &ratios[ratios.len() - ratios.len() / 4..];
    let precision_profile = tail.first().is_some_and(|&r| r > 1.0 + REL)
        && tail.windows(2).all(|w| w[1] >= w[0])
        && tail.last().unwrap() > &(tail[0] * (1.0 + 1e-3));

    let d0 = pair.d0.as_f64();
    let ds = log_space(d0 * lattice.d_min_fraction, d0 * (1.0 - 1e-9), lattice.d_points);
    for &d in &ds {
        let g = pair.g(T::lit(d)).as_f64();
        let mut push = |kind, value, bound| violations.push(PairViolation { kind, at: d, value, bound });
        if !g.is_finite() {
            push(PairViolationKind::NotFinite, g, 0.0);
        } else if g <= 0.0 {
            push(PairViolationKind::NotPositive, g, 0.0);
        } else if d * d / g > 1.0 + REL {
            push(PairViolationKind::GScale, d * d / g, 1.0);
        }
    }
    let g_lo = pair.g(T::lit(ds[0])).as_f64();
    let g_hi = pair.g(T::lit(*ds.last().unwrap())).as_f64();
    // g(τ) → 0: the smallest sample must sit well below the largest
    if g_lo.is_finite() && g_hi.is_finite() && !(g_lo < 1e-2 * g_hi) {
        violations.push(PairViolation { kind: PairViolationKind::GNotVanishing, at: ds[0], value: g_lo, bound: 1e-2 * g_hi });
    }
    PairValidation { label: pair.label.clone(), admissible: violations.is_empty(), precision_profile, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pair_is_admissible() {
        for n in [2, 3] {
            let v = validate_pair(&AdmissiblePair::<f64>::standard(n, 1.0), &SampleLattice::default());
            assert!(v.admissible, "{:?}", v.violations);
            assert!(!v.precision_profile);
        }
    }

    #[test]
    fn doubled_fn_fails_at_zero() {
        let p = AdmissiblePair::new(3, 1.0, |t: f64| 2.0 * f_n(3, t), |d| d * d, "2 f_n");
        let v = validate_pair(&p, &SampleLattice::default());
        let first = v.first_violation().unwrap();
        assert_eq!(first.kind, PairViolationKind::AboveFn);
        assert_eq!(first.at, 0.0);
        assert!(!v.precision_profile);
        assert!(v.into_result().is_err());
    }

    #[test]
    fn precision_profile_flagged() {
        for n in [2, 3] {
            let p = AdmissiblePair::new(n, 1.0, move |t: f64| f_n(n, t) * (1.0 + t.ln_1p()), |d| d * d, "f_n h");
            let v = validate_pair(&p, &SampleLattice::default());
            assert!(!v.admissible);
            assert!(v.precision_profile);
        }
    }

    #[test]
    fn g_constraints() {
        let big = AdmissiblePair::new(2, 1.0, |t: f64| f_n(2, t), |d| 0.5 * d * d, "d^2/2");
        assert!(validate_pair(&big, &SampleLattice::default())
            .violations
            .iter()
            .any(|v| v.kind == PairViolationKind::GScale));
        let flat = AdmissiblePair::new(2, 1.0, |t: f64| f_n(2, t), |_| 1.0, "1");
        assert!(validate_pair(&flat, &SampleLattice::default())
            .violations
            .iter()
            .any(|v| v.kind == PairViolationKind::GNotVanishing));
        let linear = AdmissiblePair::new(2, 1.0, |t: f64| 0.5 * f_n(2, t), |d| d, "f_n/2, d");
        assert!(validate_pair(&linear, &SampleLattice::default()).admissible);
    }

    #[test]
    fn gamma_formula() {
        let p = AdmissiblePair::<f64>::standard(3, 1.0);
        assert!((p.gamma(0.25, 3.0, 0.5) - 0.25 * 0.5).abs() < 1e-15);
        assert!(p.gamma(0.25, 10.0, 0.5) < p.gamma(0.25, 1.0, 0.5));
    }
}
