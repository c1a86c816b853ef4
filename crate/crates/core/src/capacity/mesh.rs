use crate::error::{Error, Result};
use crate::lattice::{Cube, Grid};
use crate::scalar::Real;

/// Tensor-product node mesh: the uniform nodes of a cube grid, padded outward to an
/// enclosing box with cells that grow geometrically.
#[derive(Debug, Clone)]
pub(crate) struct TensorMesh<T> {
    pub coords: Vec<Vec<T>>,
    pub offset: Vec<usize>,
}

fn padding<T: Real>(h: T, len: T, grading: T) -> Vec<T> {
    if len <= T::zero() {
        return Vec::new();
    }
    let mut widths = Vec::new();
    let mut total = T::zero();
    let mut w = h;
    while total < len * (T::one() - T::lit(1e-9)) {
        w *= grading;
        widths.push(w);
        total += w;
    }
    // rescale so the last node lands on the box face; drop a trailing sliver first
    if widths.len() > 1 && total - len > widths[widths.len() - 1] * T::lit(0.5) {
        total -= widths.pop().unwrap();
    }
    let s = len / total;
    widths.iter().map(|&w| w * s).collect()
}

impl<T: Real> TensorMesh<T> {
    pub fn new(grid: &Grid<T>, ambient: &Cube<T>, grading: T) -> Result<Self> {
        let n = grid.dim();
        if ambient.dim() != n {
            return Err(Error::ShapeMismatch("ambient box dimension differs from mask".into()));
        }
        let cube = grid.cube();
        let h = grid.h();
        let mut coords = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        for k in 0..n {
            let below = cube.lower(k) - ambient.lower(k);
            let above = ambient.upper(k) - cube.upper(k);
            if below <= h * T::lit(1e-6) || above <= h * T::lit(1e-6) {
                return Err(Error::InvalidGeometry(
                    "ambient box must contain the cube with a margin on every face".into(),
                ));
            }
            let lo = padding(h, below, grading);
            let hi = padding(h, above, grading);
            let mut axis = Vec::with_capacity(lo.len() + grid.m() + hi.len());
            let mut x = cube.lower(k);
            let mut left: Vec<T> = lo
                .iter()
                .map(|&w| {
                    x -= w;
                    x
                })
                .collect();
            if let Some(first) = left.last_mut() {
                *first = ambient.lower(k);
            }
            left.reverse();
            offset.push(left.len());
            axis.extend(left);
            axis.extend((0..grid.m()).map(|i| grid.axis_coord(k, i)));
            let mut x = cube.upper(k);
            for &w in &hi {
                x += w;
                axis.push(x);
            }
            *axis.last_mut().unwrap() = ambient.upper(k);
            coords.push(axis);
        }
        Ok(Self { coords, offset })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn len(&self, axis: usize) -> usize {
        self.coords[axis].len()
    }

    pub fn node_count(&self) -> usize {
        self.coords.iter().map(Vec::len).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.coords[..axis].iter().map(Vec::len).product()
    }

    pub fn multi(&self, mut i: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (k, c) in self.coords.iter().enumerate() {
            idx[k] = i % c.len();
            i /= c.len();
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut i = 0;
        for k in (0..self.dim()).rev() {
            i = i * self.len(k) + idx[k];
        }
        i
    }

    /// Ambient index of a node of the embedded cube grid.
    pub fn from_core(&self, core_idx: &[usize]) -> usize {
        let idx: Vec<usize> = (0..self.dim()).map(|k| core_idx[k] + self.offset[k]).collect();
        self.flat(&idx)
    }

    /// Half the sum of the adjacent spacings: the dual length at node `j` of `axis`.
    pub fn dual(&self, axis: usize, j: usize) -> T {
        let c = &self.coords[axis];
        let two = T::lit(2.0);
        let left = if j > 0 { c[j] - c[j - 1] } else { T::zero() };
        let right = if j + 1 < c.len() { c[j + 1] - c[j] } else { T::zero() };
        (left + right) / two
    }

    pub fn is_outer(&self, i: usize) -> bool {
        let idx = self.multi(i);
        (0..self.dim()).any(|k| idx[k] == 0 || idx[k] + 1 == self.len(k))
    }

    /// Coupling weight of the link from node `i` to its `+axis` neighbour.
    pub fn link_weight(&self, axis: usize, idx: &[usize]) -> T {
        let c = &self.coords[axis];
        let mut w = T::one() / (c[idx[axis] + 1] - c[idx[axis]]);
        for j in 0..self.dim() {
            if j != axis {
                w *= self.dual(j, idx[j]);
            }
        }
        w
    }

    /// Monopole far-field weight `Σ_faces (x·ν/|x|²)·(dual face area)` at an outer node.
    pub fn robin_weight(&self, idx: &[usize], center: &[T]) -> T {
        let n = self.dim();
        let x: Vec<T> = (0..n).map(|k| self.coords[k][idx[k]] - center[k]).collect();
        let r2: T = x.iter().map(|&t| t * t).sum();
        let mut total = T::zero();
        for k in 0..n {
            let sign = if idx[k] == 0 {
                -T::one()
            } else if idx[k] + 1 == self.len(k) {
                T::one()
            } else {
                continue;
            };
            let mut area = T::one();
            for j in 0..n {
                if j != k {
                    area *= self.dual(j, idx[j]);
                }
            }
            total += (sign * x[k] / r2).max(T::zero()) * area;
        }
        total
    }
}
