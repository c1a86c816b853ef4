//! Molchanov functional `M_γ(Q_d; V) = inf { ∫_{Q_d∖F} V : cap(F) ≤ γ·cap(Q_d) }` over
//! unions of grid cells, optionally with a mandatory part `F ⊇ Q_d ∖ Ω`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::capacity::{Ambient, CapacityCache};
use crate::error::{Error, Result};
use crate::lattice::{integrate_sampled, rasterize, CellField, CompactSetMask, Cube, Grid, ScalarPotential};
use crate::scalar::Real;

#[derive(Debug)]
pub struct MolchanovQuery<T: Real> {
    pub cube: Cube<T>,
    pub v: ScalarPotential<T>,
    pub gamma: T,
    /// Nodes per edge.
    pub m: usize,
    pub mandatory: Option<CompactSetMask<T>>,
}

impl<T: Real> Clone for MolchanovQuery<T> {
    fn clone(&self) -> Self {
        Self {
            cube: self.cube.clone(),
            v: self.v.clone(),
            gamma: self.gamma,
            m: self.m,
            mandatory: self.mandatory.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Brute,
}

#[derive(Debug, Clone)]
pub struct MolchanovResult<T> {
    /// `∫_{Q_d∖F} V`, or `+∞` when infeasible.
    pub value: T,
    pub witness: CompactSetMask<T>,
    pub cap_used: T,
    /// `γ·cap(Q_d)` at the query resolution.
    pub budget: T,
    pub method: Method,
    pub infeasible: bool,
    pub capacity_solves: usize,
}

/// JSON form of a result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MolchanovReport {
    pub value: f64,
    pub cap_used: f64,
    pub budget: f64,
    pub method: Method,
    pub infeasible: bool,
    pub witness_cells: usize,
    pub capacity_solves: usize,
}

impl<T: Real> MolchanovResult<T> {
    pub fn report(&self) -> MolchanovReport {
        MolchanovReport {
            value: self.value.as_f64(),
            cap_used: self.cap_used.as_f64(),
            budget: self.budget.as_f64(),
            method: self.method,
            infeasible: self.infeasible,
            witness_cells: self.witness.count(),
            capacity_solves: self.capacity_solves,
        }
    }
}

struct Setup<T> {
    grid: Grid<T>,
    cells: CellField<T>,
    ambient: Ambient<T>,
    budget: T,
    mandatory: CompactSetMask<T>,
}

fn setup<T: Real>(q: &MolchanovQuery<T>, cache: &CapacityCache<T>) -> Result<Setup<T>> {
    if !(q.gamma >= T::zero() && q.gamma < T::one()) {
        return Err(Error::Precondition(format!("gamma must lie in [0, 1), got {}", q.gamma)));
    }
    let grid = rasterize(&q.cube, q.m)?;
    let cells = q.v.sample(&grid)?;
    let ambient = Ambient::standard(&q.cube)?;
    let budget = q.gamma * cache.capacity(&CompactSetMask::full(grid.clone()), &ambient)?;
    let mandatory = match &q.mandatory {
        Some(mask) => {
            grid.ensure_same(mask.grid(), "mandatory mask")?;
            mask.clone()
        }
        None => CompactSetMask::empty(grid.clone()),
    };
    Ok(Setup { grid, cells, ambient, budget, mandatory })
}

impl<T: Real> Setup<T> {
    fn cell_mass(&self, c: usize) -> T {
        self.cells.values()[c] * self.grid.cell_volume()
    }

    fn finish(
        &self,
        witness: CompactSetMask<T>,
        cap_used: T,
        method: Method,
        solves: usize,
    ) -> Result<MolchanovResult<T>> {
        let value = integrate_sampled(&self.cells, &witness.complement())?;
        Ok(MolchanovResult { value, witness, cap_used, budget: self.budget, method, infeasible: false, capacity_solves: solves })
    }

    fn infeasible(&self, cap_used: T, method: Method, solves: usize) -> MolchanovResult<T> {
        MolchanovResult {
            value: T::lit(f64::INFINITY),
            witness: self.mandatory.clone(),
            cap_used,
            budget: self.budget,
            method,
            infeasible: true,
            capacity_solves: solves,
        }
    }

    /// Mandatory check shared by both methods: `None` means infeasible.
    fn base(&self, cache: &CapacityCache<T>) -> Result<Option<T>> {
        let cap = cache.capacity(&self.mandatory, &self.ambient)?;
        Ok((cap <= self.budget).then_some(cap))
    }
}

/// Cells in greedy order: decreasing `∫_cell V`, ties by index.
fn greedy_order<T: Real>(s: &Setup<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.grid.cell_count()).filter(|&c| !s.mandatory.contains_cell(c)).collect();
    order.sort_by(|&a, &b| s.cell_mass(b).partial_cmp(&s.cell_mass(a)).unwrap().then(a.cmp(&b)));
    order
}

pub fn molchanov_greedy<T: Real>(q: &MolchanovQuery<T>) -> Result<MolchanovResult<T>> {
    molchanov_greedy_with(q, &CapacityCache::default())
}

/// Region-growing seeds tried on large problems; small ones grow from every cell.
const GROWTH_SEEDS: usize = 4;

/// Cells sharing a face with `c`, or at least one node when `faces_only` is false.
fn touching<T: Real>(grid: &Grid<T>, c: usize, faces_only: bool) -> Vec<usize> {
    let n = grid.dim();
    let k = grid.cells_per_edge() as isize;
    let idx = grid.cell_multi(c);
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut t = code;
        let mut nb = [0usize; 3];
        let mut ok = true;
        let mut same = true;
        for j in 0..n {
            let off = (t % 3) as isize - 1;
            t /= 3;
            same &= off == 0;
            let p = idx[j] as isize + off;
            ok &= (0..k).contains(&p);
            nb[j] = p.max(0) as usize;
        }
        let moved = (0..n).filter(|&j| nb[j] != idx[j]).count();
        if ok && !same && (!faces_only || moved == 1) {
            out.push(grid.cell_flat(&nb[..n]));
        }
    }
    out
}

/// Region-growing order from `seed`: repeatedly take the highest-`V` cell adjacent to the
/// current set (ties by index), falling back to the plain order when nothing touches.
fn growth_order<T: Real>(s: &Setup<T>, base: &[usize], seed: usize, faces_only: bool) -> Vec<usize> {
    let mut rank = vec![usize::MAX; s.grid.cell_count()];
    for (r, &c) in base.iter().enumerate() {
        rank[c] = r;
    }
    let mut taken: Vec<bool> = (0..s.grid.cell_count()).map(|c| s.mandatory.contains_cell(c)).collect();
    let mut frontier = BTreeSet::new();
    let grow = |c: usize, taken: &[bool], frontier: &mut BTreeSet<usize>| {
        for nb in touching(&s.grid, c, faces_only) {
            if !taken[nb] {
                frontier.insert(rank[nb]);
            }
        }
    };
    for c in s.mandatory.indices() {
        grow(c, &taken, &mut frontier);
    }
    let mut out = Vec::with_capacity(base.len());
    let mut next = Some(seed);
    let mut cursor = 0;
    while out.len() < base.len() {
        let c = match next.take() {
            Some(c) => c,
            None => match frontier.pop_first() {
                Some(r) => base[r],
                None => {
                    while taken[base[cursor]] {
                        cursor += 1;
                    }
                    base[cursor]
                }
            },
        };
        if taken[c] {
            continue;
        }
        taken[c] = true;
        frontier.remove(&rank[c]);
        out.push(c);
        grow(c, &taken, &mut frontier);
    }
    out
}

/// Problems with at most this many cells also try capacity-aware chains, which cost a
/// quadratic number of solves, and grow regions from every cell.
const EFFICIENCY_LIMIT: usize = 16;

/// Exponents `p` in the efficiency score `mass / Δcapᵖ`.
const EFFICIENCY_POWERS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

/// Forward chain: repeatedly add the cell with the largest score `mass / Δcapᵖ`.
fn forward_efficiency<T: Real>(
    s: &Setup<T>,
    cache: &CapacityCache<T>,
    base: &[usize],
    base_cap: T,
    power: T,
    solves: &mut usize,
) -> Result<Vec<usize>> {
    let mut current = s.mandatory.clone();
    let mut cap = base_cap;
    let mut left: Vec<usize> = base.to_vec();
    let mut out = Vec::with_capacity(base.len());
    let tiny = T::lit(1e-12) * cache.capacity(&CompactSetMask::full(s.grid.clone()), &s.ambient)?;
    while !left.is_empty() {
        let mut pick = (0, T::zero(), T::zero());
        for (pos, &c) in left.iter().enumerate() {
            current.insert(c);
            *solves += 1;
            let inc = (cache.capacity(&current, &s.ambient)? - cap).max(tiny);
            current.remove(c);
            let score = s.cell_mass(c) / inc.powf(power);
            if pos == 0 || score > pick.1 {
                pick = (pos, score, inc);
            }
        }
        let c = left.remove(pick.0);
        current.insert(c);
        cap = cache.capacity(&current, &s.ambient)?;
        out.push(c);
    }
    Ok(out)
}

/// Backward chain: peel from the full cube the cell with the smallest score
/// `mass / Δcapᵖ` for the capacity it saves; the chain is the reversed peeling order.
fn backward_efficiency<T: Real>(
    s: &Setup<T>,
    cache: &CapacityCache<T>,
    base: &[usize],
    power: T,
    solves: &mut usize,
) -> Result<Vec<usize>> {
    let mut current = s.mandatory.clone();
    for &c in base {
        current.insert(c);
    }
    let mut cap = cache.capacity(&current, &s.ambient)?;
    let tiny = T::lit(1e-12) * cap.max(T::eps());
    let mut left: Vec<usize> = base.to_vec();
    let mut peeled = Vec::with_capacity(base.len());
    while !left.is_empty() {
        let mut pick = (0, T::zero());
        for (pos, &c) in left.iter().enumerate() {
            current.remove(c);
            *solves += 1;
            let dec = (cap - cache.capacity(&current, &s.ambient)?).max(tiny);
            current.insert(c);
            let score = s.cell_mass(c) / dec.powf(power);
            if pos == 0 || score < pick.1 {
                pick = (pos, score);
            }
        }
        let c = left.remove(pick.0);
        current.remove(c);
        cap = cache.capacity(&current, &s.ambient)?;
        peeled.push(c);
    }
    peeled.reverse();
    Ok(peeled)
}

/// Largest feasible prefix of `order` on top of the mandatory part. Prefix capacities
/// increase along the chain, so the cut point is found by bisection.
fn best_prefix<T: Real>(
    s: &Setup<T>,
    cache: &CapacityCache<T>,
    order: &[usize],
    base_cap: T,
    solves: &mut usize,
) -> Result<(CompactSetMask<T>, T)> {
    let prefix = |len: usize| {
        let mut f = s.mandatory.clone();
        for &c in &order[..len] {
            f.insert(c);
        }
        f
    };
    let (mut lo, mut hi) = (0usize, order.len());
    let mut lo_cap = base_cap;
    let full = prefix(hi);
    *solves += 1;
    let full_cap = cache.capacity(&full, &s.ambient)?;
    if full_cap <= s.budget {
        return Ok((full, full_cap));
    }
    // invariant: prefix(lo) feasible, prefix(hi) infeasible
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        *solves += 1;
        let c = cache.capacity(&prefix(mid), &s.ambient)?;
        if c <= s.budget {
            lo = mid;
            lo_cap = c;
        } else {
            hi = mid;
        }
    }
    Ok((prefix(lo), lo_cap))
}

/// Greedy upper bound. Candidate witnesses are the largest feasible prefixes of a fixed
/// family of nested cell chains: decreasing `∫_cell V` (ties by index) and region growth
/// from the top cells of that order. Every chain is independent of `γ`, so the result
/// is monotone in `γ`.
pub fn molchanov_greedy_with<T: Real>(q: &MolchanovQuery<T>, cache: &CapacityCache<T>) -> Result<MolchanovResult<T>> {
    let s = setup(q, cache)?;
    let mut solves = 1;
    let Some(base_cap) = s.base(cache)? else {
        let cap = cache.capacity(&s.mandatory, &s.ambient)?;
        return Ok(s.infeasible(cap, Method::Greedy, solves));
    };
    let order = greedy_order(&s);
    let mut best: Option<(T, CompactSetMask<T>, T)> = None;
    let mut chains = vec![order.clone()];
    for faces_only in [false, true] {
        let seeds = if order.len() <= EFFICIENCY_LIMIT { order.len() } else { GROWTH_SEEDS };
        chains.extend(order.iter().take(seeds).map(|&seed| growth_order(&s, &order, seed, faces_only)));
    }
    if order.len() <= EFFICIENCY_LIMIT {
        for power in EFFICIENCY_POWERS {
            chains.push(forward_efficiency(&s, cache, &order, base_cap, T::lit(power), &mut solves)?);
            chains.push(backward_efficiency(&s, cache, &order, T::lit(power), &mut solves)?);
        }
    }
    for chain in &chains {
        let (f, cap) = best_prefix(&s, cache, chain, base_cap, &mut solves)?;
        let gained: T = f.indices().filter(|&c| !s.mandatory.contains_cell(c)).map(|c| s.cell_mass(c)).sum();
        if best.as_ref().is_none_or(|b| gained > b.0) {
            best = Some((gained, f, cap));
        }
    }
    let (_, witness, cap) = best.expect("at least one chain");
    s.finish(witness, cap, Method::Greedy, solves)
}

pub const DEFAULT_MAX_CELLS: usize = 16;

pub fn molchanov_brute<T: Real>(q: &MolchanovQuery<T>, max_cells: usize) -> Result<MolchanovResult<T>> {
    molchanov_brute_with(q, max_cells, &CapacityCache::default())
}

/// Exact discrete infimum by depth-first enumeration of feasible cell sets. Capacity is
/// monotone, so an infeasible set prunes all its extensions; branches that cannot beat
/// the incumbent are cut by the remaining `V` mass.
pub fn molchanov_brute_with<T: Real>(
    q: &MolchanovQuery<T>,
    max_cells: usize,
    cache: &CapacityCache<T>,
) -> Result<MolchanovResult<T>> {
    let grid = rasterize(&q.cube, q.m)?;
    if grid.cell_count() > max_cells {
        return Err(Error::TooLarge { cells: grid.cell_count(), max: max_cells });
    }
    let s = setup(q, cache)?;
    let Some(cap0) = s.base(cache)? else {
        let cap = cache.capacity(&s.mandatory, &s.ambient)?;
        return Ok(s.infeasible(cap, Method::Brute, 1));
    };
    let order = greedy_order(&s);
    let masses: Vec<T> = order.iter().map(|&c| s.cell_mass(c)).collect();
    let mut tail = vec![T::zero(); order.len() + 1];
    for i in (0..order.len()).rev() {
        tail[i] = tail[i + 1] + masses[i];
    }
    struct Search<'a, T: Real> {
        s: &'a Setup<T>,
        cache: &'a CapacityCache<T>,
        order: &'a [usize],
        masses: &'a [T],
        tail: &'a [T],
        best: (T, CompactSetMask<T>, T),
        solves: usize,
    }
    impl<T: Real> Search<'_, T> {
        fn go(&mut self, from: usize, current: &mut CompactSetMask<T>, gained: T, cap: T) -> Result<()> {
            if gained > self.best.0 {
                self.best = (gained, current.clone(), cap);
            }
            for i in from..self.order.len() {
                if gained + self.tail[i] <= self.best.0 {
                    return Ok(());
                }
                let c = self.order[i];
                current.insert(c);
                self.solves += 1;
                let cap_next = self.cache.capacity(current, &self.s.ambient)?;
                if cap_next <= self.s.budget {
                    self.go(i + 1, current, gained + self.masses[i], cap_next)?;
                }
                current.remove(c);
            }
            Ok(())
        }
    }
    let mut search = Search {
        s: &s,
        cache,
        order: &order,
        masses: &masses,
        tail: &tail,
        best: (T::zero(), s.mandatory.clone(), cap0),
        solves: 1,
    };
    let mut start = s.mandatory.clone();
    search.go(0, &mut start, T::zero(), cap0)?;
    let (_, witness, cap) = search.best;
    let solves = search.solves;
    s.finish(witness, cap, Method::Brute, solves)
}

/// `cap(F) ≤ γ·cap(Q_d)` with both capacities at the resolution of `F`'s grid.
pub fn negligibility_test<T: Real>(f: &CompactSetMask<T>, gamma: T) -> Result<bool> {
    negligibility_test_with(f, gamma, &CapacityCache::default())
}

pub fn negligibility_test_with<T: Real>(f: &CompactSetMask<T>, gamma: T, cache: &CapacityCache<T>) -> Result<bool> {
    if f.is_empty() {
        return Ok(gamma >= T::zero());
    }
    let full = CompactSetMask::full(f.grid().clone());
    Ok(cache.standard(f)? <= gamma * cache.standard(&full)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(v: ScalarPotential<f64>, gamma: f64, m: usize) -> MolchanovQuery<f64> {
        MolchanovQuery { cube: Cube::centered(2, 1.0).unwrap(), v, gamma, m, mandatory: None }
    }

    #[test]
    fn zero_gamma_keeps_whole_integral() {
        let q = query(ScalarPotential::harmonic(), 0.0, 5);
        let r = molchanov_greedy(&q).unwrap();
        assert!(r.witness.is_empty());
        let total = crate::lattice::integrate(&q.v, &CompactSetMask::full(r.witness.grid().clone())).unwrap();
        assert_eq!(r.value, total);
        assert_eq!(molchanov_brute(&q, 16).unwrap().value, total);
    }

    #[test]
    fn zero_potential_gives_zero() {
        for g in [0.0, 0.3, 0.9] {
            assert_eq!(molchanov_greedy(&query(ScalarPotential::zero(), g, 4)).unwrap().value, 0.0);
        }
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(molchanov_greedy(&query(ScalarPotential::zero(), 1.0, 4)).is_err());
        assert!(molchanov_brute(&query(ScalarPotential::zero(), -0.1, 4), 16).is_err());
    }

    #[test]
    fn brute_refuses_large_grids() {
        let r = molchanov_brute(&query(ScalarPotential::zero(), 0.2, 6), 16);
        assert!(matches!(r, Err(Error::TooLarge { cells: 25, max: 16 })));
    }

    #[test]
    fn infeasible_mandatory_part_is_infinite() {
        let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 4).unwrap();
        let mut q = query(ScalarPotential::Constant(1.0), 0.1, 4);
        q.mandatory = Some(CompactSetMask::full(g));
        let r = molchanov_greedy(&q).unwrap();
        assert!(r.infeasible && r.value.is_infinite());
        assert!(molchanov_brute(&q, 16).unwrap().infeasible);
    }

    #[test]
    fn negligibility_edges() {
        let g = rasterize(&Cube::centered(2, 1.0).unwrap(), 5).unwrap();
        assert!(negligibility_test(&CompactSetMask::empty(g.clone()), 0.0).unwrap());
        assert!(!negligibility_test(&CompactSetMask::full(g), 0.99).unwrap());
    }
}
