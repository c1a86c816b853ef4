use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{shells_for, thin, tiling};
use crate::capacity::{Ambient, CapacityCache, CapacityOptions};
use crate::error::{Error, Result};
use crate::lattice::{rasterize, CompactSetMask, DomainRule};
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainCubeRecord {
    pub d: f64,
    pub shell: usize,
    pub index: Vec<i64>,
    pub cap_complement: f64,
    pub cap_cube: f64,
    pub gamma: f64,
    /// `cap(Q_d ∖ Ω) > γ cap(Q_d)`.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSizeScan {
    pub d: f64,
    pub gamma: f64,
    /// Shells counted as distant (the outer half).
    pub from_shell: usize,
    pub distant_cubes: usize,
    pub distant_holding: usize,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainGeometryReport {
    pub c_n: f64,
    pub scans: Vec<DomainSizeScan>,
    pub cubes: Vec<DomainCubeRecord>,
    pub verdict: bool,
}

/// Geometric condition for `a ≡ 0`, `V ≡ 0` in `Ω`: every distant cube has a complement part of capacity above `γ cap(Q_d)`, `γ = c_n g(d)⁻¹ d²`.
#[allow(clippy::too_many_arguments)]
pub fn domain_geometry_check<T: Real>(
    omega: &DomainRule<T>,
    g: impl Fn(T) -> T + Sync,
    c_n: T,
    n: usize,
    ds: &[T],
    radius: T,
    m: usize,
    max_per_shell: Option<usize>,
) -> Result<DomainGeometryReport> {
    if ds.is_empty() || ds.iter().any(|&d| !(d > T::zero())) || !(radius > T::zero()) {
        return Err(Error::Precondition("domain scan needs positive sizes and radius".into()));
    }
    let cache = CapacityCache::new(CapacityOptions::default());
    let mut scans = Vec::new();
    let mut cubes = Vec::new();
    for &d in ds {
        let gamma = c_n * (d * d / g(d));
        let shells = shells_for(radius, d);
        let tiles = thin(tiling(n, d, shells)?, max_per_shell);
        let records: Vec<DomainCubeRecord> = tiles
            .par_iter()
            .map(|t| {
                let grid = rasterize(&t.cube, m)?;
                let ambient = Ambient::standard(&t.cube)?;
                let complement = omega.sample(&grid).complement_cells();
                let cap_complement = cache.capacity(&complement, &ambient)?;
                let cap_cube = cache.capacity(&CompactSetMask::full(grid), &ambient)?;
                Ok(DomainCubeRecord {
                    d: d.as_f64(),
                    shell: t.shell,
                    index: t.index.clone(),
                    cap_complement: cap_complement.as_f64(),
                    cap_cube: cap_cube.as_f64(),
                    gamma: gamma.as_f64(),
                    holds: cap_complement > gamma * cap_cube,
                })
            })
            .collect::<Result<_>>()?;
        let from_shell = shells / 2;
        let distant: Vec<_> = records.iter().filter(|r| r.shell >= from_shell).collect();
        let holding = distant.iter().filter(|r| r.holds).count();
        scans.push(DomainSizeScan {
            d: d.as_f64(),
            gamma: gamma.as_f64(),
            from_shell,
            distant_cubes: distant.len(),
            distant_holding: holding,
            verdict: holding == distant.len(),
        });
        cubes.extend(records);
    }
    Ok(DomainGeometryReport { c_n: c_n.as_f64(), verdict: scans.iter().all(|s| s.verdict), scans, cubes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_space_fails_everywhere() {
        let r = domain_geometry_check::<f64>(&DomainRule::WholeSpace, |d| d * d, 0.25, 2, &[0.5], 1.0, 5, None).unwrap();
        assert!(!r.verdict);
        assert!(r.cubes.iter().all(|c| c.cap_complement == 0.0 && !c.holds));
    }
}
