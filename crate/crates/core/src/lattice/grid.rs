use serde::{Deserialize, Serialize};

use super::cube::Cube;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform node lattice covering a closed cube, faces included.
///
/// Nodes are numbered lexicographically with axis 0 fastest; cells (the
/// `(m-1)ⁿ` closed sub-cubes) use the same ordering over `m-1` positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    cube: Cube<T>,
    m: usize,
    h: T,
}

/// Discretize `cube` with `m` nodes per edge.
pub fn rasterize<T: Real>(cube: &Cube<T>, m: usize) -> Result<Grid<T>> {
    Grid::new(cube.clone(), m)
}

impl<T: Real> Grid<T> {
    pub fn new(cube: Cube<T>, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidResolution(format!("need at least 3 nodes per edge, got {m}")));
        }
        let n = cube.dim();
        if m.checked_pow(n as u32).is_none_or(|c| c > u32::MAX as usize) {
            return Err(Error::InvalidResolution(format!("{m}^{n} nodes overflow the index type")));
        }
        let h = cube.edge() / T::from_usize_lossy(m - 1);
        Ok(Self { cube, m, h })
    }

    pub fn cube(&self) -> &Cube<T> {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.m.pow(self.dim() as u32)
    }

    pub fn cells_per_edge(&self) -> usize {
        self.m - 1
    }

    pub fn cell_count(&self) -> usize {
        (self.m - 1).pow(self.dim() as u32)
    }

    /// `hⁿ`.
    pub fn cell_volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |acc, _| acc * self.h)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow(axis as u32)
    }

    pub fn node_multi(&self, i: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut r = i;
        for o in out.iter_mut().take(self.dim()) {
            *o = r % self.m;
            r /= self.m;
        }
        out
    }

    pub fn node_flat(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim()).rev().fold(0, |acc, &k| acc * self.m + k)
    }

    pub fn cell_multi(&self, c: usize) -> [usize; 3] {
        let mc = self.m - 1;
        let mut out = [0; 3];
        let mut r = c;
        for o in out.iter_mut().take(self.dim()) {
            *o = r % mc;
            r /= mc;
        }
        out
    }

    pub fn cell_flat(&self, idx: &[usize]) -> usize {
        let mc = self.m - 1;
        idx.iter().take(self.dim()).rev().fold(0, |acc, &k| acc * mc + k)
    }

    /// Coordinate of node position `k` along `axis`; the last node lands on the upper face exactly.
    pub fn axis_coord(&self, axis: usize, k: usize) -> T {
        if k + 1 == self.m {
            self.cube.upper(axis)
        } else {
            self.cube.lower(axis) + self.h * T::from_usize_lossy(k)
        }
    }

    /// Node coordinates; entries past `dim` are zero.
    pub fn node_coord(&self, i: usize) -> [T; 3] {
        let idx = self.node_multi(i);
        let mut x = [T::zero(); 3];
        for (k, xk) in x.iter_mut().enumerate().take(self.dim()) {
            *xk = self.axis_coord(k, idx[k]);
        }
        x
    }

    pub fn cell_center(&self, c: usize) -> [T; 3] {
        let idx = self.cell_multi(c);
        let half = self.h * T::lit(0.5);
        let mut x = [T::zero(); 3];
        for (k, xk) in x.iter_mut().enumerate().take(self.dim()) {
            *xk = self.axis_coord(k, idx[k]) + half;
        }
        x
    }

    /// Cell holding `x`, clamped into the cube.
    pub fn cell_containing(&self, x: &[T]) -> usize {
        let mc = self.m - 1;
        let idx: Vec<usize> = (0..self.dim())
            .map(|k| {
                let t = ((x[k] - self.cube.lower(k)) / self.h).floor();
                if t > T::zero() {
                    t.to_usize().unwrap_or(mc - 1).min(mc - 1)
                } else {
                    0
                }
            })
            .collect();
        self.cell_flat(&idx)
    }

    /// Flat indices of the `2ⁿ` corner nodes of cell `c`.
    pub fn cell_corners(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.node_flat(&self.cell_multi(c));
        let n = self.dim();
        (0..1usize << n).map(move |bits| {
            (0..n).fold(base, |acc, k| if bits >> k & 1 == 1 { acc + self.stride(k) } else { acc })
        })
    }

    /// Cells sharing node `i`.
    pub fn node_cells(&self, i: usize) -> Vec<usize> {
        let idx = self.node_multi(i);
        let n = self.dim();
        let mc = self.m - 1;
        let mut out = Vec::with_capacity(1 << n);
        'bits: for bits in 0..1usize << n {
            let mut cidx = [0usize; 3];
            for k in 0..n {
                let c = if bits >> k & 1 == 1 { idx[k].checked_sub(1) } else { Some(idx[k]) };
                match c {
                    Some(c) if c < mc => cidx[k] = c,
                    _ => continue 'bits,
                }
            }
            out.push(self.cell_flat(&cidx[..n]));
        }
        out
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        let idx = self.node_multi(i);
        idx.iter().take(self.dim()).any(|&k| k == 0 || k + 1 == self.m)
    }

    /// Whether the link `i → i + e_axis` exists.
    pub fn has_link(&self, axis: usize, i: usize) -> bool {
        self.node_multi(i)[axis] + 1 < self.m
    }

    #[inline]
    fn face_factor(&self, k: usize) -> T {
        if k == 0 || k + 1 == self.m {
            T::lit(0.5)
        } else {
            T::one()
        }
    }

    /// Trapezoid quadrature weight of node `i`.
    pub fn node_weight(&self, i: usize) -> T {
        let idx = self.node_multi(i);
        (0..self.dim()).fold(self.cell_volume(), |acc, k| acc * self.face_factor(idx[k]))
    }

    /// Volume share carried by link `i → i + e_axis`: `hⁿ` times one half per face the link lies on.
    pub fn link_weight(&self, axis: usize, i: usize) -> T {
        let idx = self.node_multi(i);
        (0..self.dim())
            .filter(|&k| k != axis)
            .fold(self.cell_volume(), |acc, k| acc * self.face_factor(idx[k]))
    }

    pub fn node_weights(&self) -> Vec<T> {
        (0..self.node_count()).map(|i| self.node_weight(i)).collect()
    }

    /// Whether both grids discretize the same cube at the same resolution.
    pub fn same_shape(&self, other: &Self) -> bool {
        self == other
    }

    pub(crate) fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{what}: grids differ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_m3() {
        let g = rasterize(&Cube::<f64>::unit(2).unwrap(), 3).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.cell_count(), 4);
    }

    #[test]
    fn cube_d2_m5() {
        let g = rasterize(&Cube::<f64>::centered(3, 2.0).unwrap(), 5).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.node_count(), 125);
        assert_eq!(g.node_coord(124), [1.0, 1.0, 1.0]);
        assert_eq!(g.node_coord(0), [-1.0, -1.0, -1.0]);
    }

    #[test]
    fn dyadic_spacing_exact() {
        let g = rasterize(&Cube::<f64>::unit(2).unwrap(), 129).unwrap();
        assert_eq!(g.h(), 1.0 / 128.0);
        assert_eq!(g.h() * 128.0, 1.0);
    }

    #[test]
    fn rejects_small_m() {
        assert!(matches!(
            rasterize(&Cube::<f64>::unit(2).unwrap(), 2),
            Err(Error::InvalidResolution(_))
        ));
    }

    #[test]
    fn weights_sum_to_volume() {
        for dim in 2..=3 {
            let g = rasterize(&Cube::<f64>::centered(dim, 1.5).unwrap(), 6).unwrap();
            let total: f64 = g.node_weights().iter().sum();
            assert!((total - 1.5f64.powi(dim as i32)).abs() < 1e-12);
            for axis in 0..dim {
                let s: f64 = (0..g.node_count())
                    .filter(|&i| g.has_link(axis, i))
                    .map(|i| g.link_weight(axis, i))
                    .sum();
                // Σ w·(h/h)² over axis links equals the cube volume
                assert!((s / g.h() - 1.5f64.powi(dim as i32) / g.h()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn index_roundtrip_and_corners() {
        let g = rasterize(&Cube::<f64>::unit(3).unwrap(), 4).unwrap();
        for i in 0..g.node_count() {
            assert_eq!(g.node_flat(&g.node_multi(i)), i);
        }
        for c in 0..g.cell_count() {
            assert_eq!(g.cell_flat(&g.cell_multi(c)), c);
            let corners: Vec<_> = g.cell_corners(c).collect();
            assert_eq!(corners.len(), 8);
            for &i in &corners {
                assert!(g.node_cells(i).contains(&c));
            }
        }
        assert_eq!(g.node_cells(0).len(), 1);
        assert_eq!(g.node_cells(g.node_flat(&[1, 1, 1])).len(), 8);
    }
}
