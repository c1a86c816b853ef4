use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed axis-parallel cube (a square when `dim == 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube<T> {
    center: Vec<T>,
    edge: T,
}

impl<T: Real> Cube<T> {
    pub fn new(center: Vec<T>, edge: T) -> Result<Self> {
        let dim = center.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGeometry(format!("dimension {dim} not in {{2, 3}}")));
        }
        if !(edge > T::zero()) || !edge.is_finite() {
            return Err(Error::InvalidGeometry(format!("edge {edge} must be positive")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite center".into()));
        }
        Ok(Self { center, edge })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![T::lit(0.5); dim], T::one())
    }

    /// Cube of edge `edge` centred at the origin.
    pub fn centered(dim: usize, edge: T) -> Result<Self> {
        Self::new(vec![T::zero(); dim], edge)
    }

    /// Cube `[lo_1, lo_1 + edge] × … `.
    pub fn from_lower(lower: &[T], edge: T) -> Result<Self> {
        let half = edge * T::lit(0.5);
        Self::new(lower.iter().map(|&l| l + half).collect(), edge)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn edge(&self) -> T {
        self.edge
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn lower(&self, axis: usize) -> T {
        self.center[axis] - self.edge * T::lit(0.5)
    }

    pub fn upper(&self, axis: usize) -> T {
        self.center[axis] + self.edge * T::lit(0.5)
    }

    /// `dⁿ`.
    pub fn volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |acc, _| acc * self.edge)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        (0..self.dim()).all(|k| x[k] >= self.lower(k) && x[k] <= self.upper(k))
    }

    /// Concentric cube with the edge multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.center.clone(), self.edge * factor)
    }

    pub fn translated(&self, shift: &[T]) -> Result<Self> {
        Self::new(self.center.iter().zip(shift).map(|(&c, &s)| c + s).collect(), self.edge)
    }

    /// Euclidean distance from the origin to the centre.
    pub fn center_norm(&self) -> T {
        self.center.iter().map(|&c| c * c).sum::<T>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert!(Cube::<f64>::new(vec![0.0; 4], 1.0).is_err());
        assert!(Cube::<f64>::new(vec![0.0; 2], 0.0).is_err());
        assert!(Cube::<f64>::new(vec![0.0; 2], -1.0).is_err());
        assert!(Cube::<f64>::new(vec![f64::NAN, 0.0], 1.0).is_err());
    }

    #[test]
    fn unit_cube_bounds() {
        let c = Cube::<f64>::unit(3).unwrap();
        for k in 0..3 {
            assert_eq!(c.lower(k), 0.0);
            assert_eq!(c.upper(k), 1.0);
        }
        assert_eq!(c.volume(), 1.0);
        assert!(c.contains(&[1.0, 0.0, 0.5]));
        assert!(!c.contains(&[1.0001, 0.0, 0.5]));
    }
}
