//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All grids, fields and solvers are generic over [`Real`]; `f64` is the
//! working precision for the CLI and the acceptance suite, `f32` is supported
//! for memory-bound experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the lattice, eigen and capacity solvers.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Display + Debug + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Unit complex number `exp(iθ)`.
    #[inline]
    fn cis(self) -> Complex<Self> {
        Complex::new(self.cos(), self.sin())
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// `|z|²` without the square root.
#[inline]
pub fn norm_sq<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Hermitian inner product `Σ conj(a_i) b_i w_i`.
pub fn weighted_dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>], w: &[T]) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for ((x, y), &wi) in a.iter().zip(b).zip(w) {
        acc += x.conj() * y * wi;
    }
    acc
}

/// `Σ |a_i|² w_i`.
pub fn weighted_norm_sq<T: Real>(a: &[Complex<T>], w: &[T]) -> T {
    a.iter().zip(w).map(|(x, &wi)| norm_sq(*x) * wi).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cis_is_unit() {
        for k in 0..16 {
            let z = (0.4 * k as f64).cis();
            assert!((norm_sq(z) - 1.0).abs() < 1e-15);
            let z32 = (0.4f32 * k as f32).cis();
            assert!((norm_sq(z32) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn weighted_norm_matches_dot() {
        let a = vec![Complex::new(1.0, 2.0), Complex::new(-0.5, 0.25)];
        let w = vec![0.5f64, 2.0];
        let d = weighted_dot(&a, &a, &w);
        assert!((d.re - weighted_norm_sq(&a, &w)).abs() < 1e-15);
        assert_eq!(d.im, 0.0);
    }
}
