use std::collections::hash_map::DefaultHasher;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::cube::Cube;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Compact set given as a union of closed grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSetMask<T> {
    grid: Grid<T>,
    cells: Vec<bool>,
}

impl<T: Real> CompactSetMask<T> {
    pub fn new(grid: Grid<T>, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} mask bits for {} cells",
                cells.len(),
                grid.cell_count()
            )));
        }
        Ok(Self { grid, cells })
    }

    pub fn empty(grid: Grid<T>) -> Self {
        let n = grid.cell_count();
        Self { grid, cells: vec![false; n] }
    }

    pub fn full(grid: Grid<T>) -> Self {
        let n = grid.cell_count();
        Self { grid, cells: vec![true; n] }
    }

    pub fn from_cell_indices(grid: Grid<T>, idx: &[usize]) -> Result<Self> {
        let mut cells = vec![false; grid.cell_count()];
        for &c in idx {
            *cells
                .get_mut(c)
                .ok_or_else(|| Error::ShapeMismatch(format!("cell {c} out of range")))? = true;
        }
        Self::new(grid, cells)
    }

    /// Cells selected by a predicate on their lower/upper corners.
    pub fn from_cell_boxes(grid: Grid<T>, keep: impl Fn(&[T], &[T]) -> bool) -> Self {
        let n = grid.dim();
        let h = grid.h();
        let cells = (0..grid.cell_count())
            .map(|c| {
                let idx = grid.cell_multi(c);
                let mut lo = [T::zero(); 3];
                let mut hi = [T::zero(); 3];
                for k in 0..n {
                    lo[k] = grid.axis_coord(k, idx[k]);
                    hi[k] = lo[k] + h;
                }
                keep(&lo[..n], &hi[..n])
            })
            .collect();
        Self { grid, cells }
    }

    /// Conservative outer rasterization of the closed ball `|x - center| ≤ r`.
    pub fn ball(grid: Grid<T>, center: &[T], r: T) -> Self {
        let c = center.to_vec();
        Self::from_cell_boxes(grid, move |lo, hi| {
            let d2: T = (0..lo.len())
                .map(|k| {
                    let t = c[k].max(lo[k]).min(hi[k]) - c[k];
                    t * t
                })
                .sum();
            d2 <= r * r
        })
    }

    /// Cells contained in the closed axis box `[lo, hi]` (up to a rounding slack).
    pub fn sub_box(grid: Grid<T>, lo: &[T], hi: &[T]) -> Self {
        let slack = grid.h() * T::lit(1e-9);
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        Self::from_cell_boxes(grid, move |a, b| {
            (0..a.len()).all(|k| a[k] >= lo[k] - slack && b[k] <= hi[k] + slack)
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains_cell(&self, c: usize) -> bool {
        self.cells[c]
    }

    pub fn insert(&mut self, c: usize) {
        self.cells[c] = true;
    }

    pub fn remove(&mut self, c: usize) {
        self.cells[c] = false;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    /// Lebesgue measure `count · hⁿ`.
    pub fn measure(&self) -> T {
        T::from_usize_lossy(self.count()) * self.grid.cell_volume()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &b)| b).map(|(c, _)| c)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "mask union")?;
        Ok(Self {
            grid: self.grid.clone(),
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect(),
        })
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid.clone(), cells: self.cells.iter().map(|&b| !b).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.grid == other.grid && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Nodes belonging to at least one marked cell.
    pub fn node_closure(&self) -> Vec<bool> {
        let mut nodes = vec![false; self.grid.node_count()];
        for c in self.indices() {
            for i in self.grid.cell_corners(c) {
                nodes[i] = true;
            }
        }
        nodes
    }

    /// Stable 64-bit fingerprint of the cell bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.cells.hash(&mut h);
        h.finish()
    }

    /// Run-length-encoded text form.
    pub fn to_rle(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        let _ = writeln!(out, "cellmask 1");
        let _ = writeln!(out, "dim {}", g.dim());
        let _ = writeln!(out, "m {}", g.m());
        let center: Vec<String> = g.cube().center().iter().map(|c| format!("{:?}", c.as_f64())).collect();
        let _ = writeln!(out, "center {}", center.join(" "));
        let _ = writeln!(out, "edge {:?}", g.cube().edge().as_f64());
        let mut runs = Vec::new();
        let mut iter = self.cells.iter().peekable();
        while let Some(&bit) = iter.next() {
            let mut len = 1;
            while iter.peek() == Some(&&bit) {
                iter.next();
                len += 1;
            }
            runs.push(format!("{len}x{}", bit as u8));
        }
        let _ = writeln!(out, "runs {}", runs.join(" "));
        out
    }

    pub fn from_rle(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut m = None;
        let mut center = None;
        let mut edge = None;
        let mut runs = None;
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let bad = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
            match key {
                "cellmask" => {
                    if rest.trim() != "1" {
                        return Err(bad("version"));
                    }
                    header = true;
                }
                "dim" => dim = Some(rest.trim().parse::<usize>().map_err(|_| bad("dim"))?),
                "m" => m = Some(rest.trim().parse::<usize>().map_err(|_| bad("m"))?),
                "center" => {
                    let v: std::result::Result<Vec<f64>, _> = rest.split_whitespace().map(str::parse).collect();
                    center = Some(v.map_err(|_| bad("center"))?);
                }
                "edge" => edge = Some(rest.trim().parse::<f64>().map_err(|_| bad("edge"))?),
                "runs" => {
                    let mut bits = Vec::new();
                    for tok in rest.split_whitespace() {
                        let (len, bit) = tok.split_once('x').ok_or_else(|| bad("run"))?;
                        let len: usize = len.parse().map_err(|_| bad("run length"))?;
                        let bit = match bit {
                            "0" => false,
                            "1" => true,
                            _ => return Err(bad("run bit")),
                        };
                        bits.extend(std::iter::repeat_n(bit, len));
                    }
                    runs = Some(bits);
                }
                other => return Err(Error::Format(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        if !header {
            return Err(Error::Format("missing `cellmask 1` header".into()));
        }
        let missing = |k: &str| Error::Format(format!("missing `{k}`"));
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let center = center.ok_or_else(|| missing("center"))?;
        if center.len() != dim {
            return Err(Error::Format("center length differs from dim".into()));
        }
        let cube = Cube::new(center.into_iter().map(T::lit).collect(), T::lit(edge.ok_or_else(|| missing("edge"))?))?;
        let grid = Grid::new(cube, m.ok_or_else(|| missing("m"))?)?;
        Self::new(grid, runs.ok_or_else(|| missing("runs"))?)
    }
}

/// Grid-independent description of an open set `Ω`.
#[derive(Clone)]
pub enum DomainRule<T> {
    WholeSpace,
    Closed(Arc<dyn Fn(&[T]) -> bool + Send + Sync>),
}

impl<T: Real> fmt::Debug for DomainRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WholeSpace => write!(f, "WholeSpace"),
            Self::Closed(_) => write!(f, "Closed(..)"),
        }
    }
}

impl<T: Real> DomainRule<T> {
    pub fn closed(inside: impl Fn(&[T]) -> bool + Send + Sync + 'static) -> Self {
        Self::Closed(Arc::new(inside))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        match self {
            Self::WholeSpace => true,
            Self::Closed(f) => f(x),
        }
    }

    pub fn sample(&self, grid: &Grid<T>) -> DomainMask<T> {
        match self {
            Self::WholeSpace => DomainMask::whole_space(grid.clone()),
            Self::Closed(f) => DomainMask::from_rule(grid.clone(), |x| f(x)),
        }
    }
}

/// Open set `Ω` rasterized per node (`true` = inside).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask<T> {
    grid: Grid<T>,
    inside: Vec<bool>,
}

impl<T: Real> DomainMask<T> {
    pub fn whole_space(grid: Grid<T>) -> Self {
        let n = grid.node_count();
        Self { grid, inside: vec![true; n] }
    }

    pub fn from_rule(grid: Grid<T>, inside: impl Fn(&[T]) -> bool) -> Self {
        let n = grid.dim();
        let inside = (0..grid.node_count()).map(|i| inside(&grid.node_coord(i)[..n])).collect();
        Self { grid, inside }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn is_inside(&self, i: usize) -> bool {
        self.inside[i]
    }

    /// `Q_d ∩ (ℝⁿ∖Ω)` as the cells having at least one corner outside `Ω`.
    pub fn complement_cells(&self) -> CompactSetMask<T> {
        let cells = (0..self.grid.cell_count())
            .map(|c| self.grid.cell_corners(c).any(|i| !self.inside[i]))
            .collect();
        CompactSetMask { grid: self.grid.clone(), cells }
    }

    /// Nodes on which admissible test functions must vanish.
    pub fn pinned_nodes(&self) -> Vec<bool> {
        self.complement_cells().node_closure()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::rasterize;

    fn grid2(m: usize) -> Grid<f64> {
        rasterize(&Cube::unit(2).unwrap(), m).unwrap()
    }

    #[test]
    fn measure_counts_cells() {
        let g = grid2(5);
        let mut mask = CompactSetMask::empty(g.clone());
        assert_eq!(mask.measure(), 0.0);
        mask.insert(0);
        mask.insert(5);
        assert_eq!(mask.measure(), 2.0 / 16.0);
        assert_eq!(CompactSetMask::full(g).measure(), 1.0);
    }

    #[test]
    fn rle_roundtrip_example() {
        let g = rasterize(&Cube::<f64>::new(vec![0.25, -1.0, 3.0], 0.75).unwrap(), 5).unwrap();
        let mask = CompactSetMask::ball(g, &[0.25, -1.0, 3.0], 0.2);
        let text = mask.to_rle();
        let back = CompactSetMask::<f64>::from_rle(&text).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn rle_rejects_garbage() {
        assert!(CompactSetMask::<f64>::from_rle("dim 2\n").is_err());
        assert!(CompactSetMask::<f64>::from_rle("cellmask 1\nfoo 3\n").is_err());
        let ok = CompactSetMask::full(grid2(3)).to_rle();
        let bad = ok.replace("4x1", "3x1");
        assert!(CompactSetMask::<f64>::from_rle(&bad).is_err());
    }

    #[test]
    fn ball_is_outer() {
        let g = grid2(9);
        let mask = CompactSetMask::ball(g.clone(), &[0.5, 0.5], 0.1);
        // the four cells touching the centre node
        assert_eq!(mask.count(), 4);
        let big = CompactSetMask::ball(g, &[0.5, 0.5], 0.3);
        assert!(mask.is_subset(&big));
    }

    #[test]
    fn domain_complement() {
        let g = grid2(5);
        let all = DomainMask::whole_space(g.clone());
        assert!(all.complement_cells().is_empty());
        let half = DomainMask::from_rule(g, |x| x[0] < 0.5);
        let comp = half.complement_cells();
        // cells with a corner at x >= 0.5: three columns of four
        assert_eq!(comp.count(), 12);
        assert!(half.pinned_nodes().iter().filter(|&&p| p).count() >= 15);
    }
}
