use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pair::{validate_pair, AdmissiblePair, SampleLattice};
use crate::capacity::{CapacityCache, CapacityOptions};
use crate::error::{Error, Result};
use crate::lattice::{rasterize, Cube, DomainRule, ScalarPotential, VectorPotential};
use crate::molchanov::{molchanov_brute_with, molchanov_greedy_with, Method, MolchanovQuery, DEFAULT_MAX_CELLS};
use crate::scalar::Real;
use crate::spectral::{dirichlet_bottom, local_energy, neumann_bottom, EigenOptions, LocalEnergy};

/// One cube of the origin-anchored tiling `Π [k_i d, (k_i+1) d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCube<T> {
    pub index: Vec<i64>,
    /// `max_i max(k_i, −k_i−1)`: 0 for the cubes touching the origin.
    pub shell: usize,
    pub cube: Cube<T>,
}

/// Tiling cubes of edge `d` in shells `0..shells`, ordered by shell, then lexicographically.
pub fn tiling<T: Real>(n: usize, d: T, shells: usize) -> Result<Vec<TileCube<T>>> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidGeometry(format!("dimension {n} is not 2 or 3")));
    }
    let s = shells as i64;
    let mut out = Vec::new();
    let mut idx = vec![-s; n];
    loop {
        let shell = idx.iter().map(|&k| k.max(-k - 1)).max().unwrap() as usize;
        let lower: Vec<T> = idx.iter().map(|&k| T::lit(k as f64) * d).collect();
        out.push(TileCube { index: idx.clone(), shell, cube: Cube::from_lower(&lower, d)? });
        let mut axis = n;
        loop {
            if axis == 0 {
                out.sort_by(|a, b| a.shell.cmp(&b.shell).then_with(|| a.index.cmp(&b.index)));
                return Ok(out);
            }
            axis -= 1;
            if idx[axis] < s - 1 {
                idx[axis] += 1;
                break;
            }
            idx[axis] = -s;
        }
    }
}

/// Where `γ` comes from.
#[derive(Debug, Clone)]
pub enum GammaRule<T: Real> {
    /// `γ = c_n f(μ̃₀) g(d)⁻¹ d²`.
    Pair { pair: AdmissiblePair<T>, c_n: T },
    /// Fixed `γ = c` (the `M_c` conditions).
    Fixed(T),
    /// `γ = 0`: plain integral of `V`.
    Zero,
}

impl<T: Real> GammaRule<T> {
    pub fn gamma(&self, e: &LocalEnergy<T>, d: T) -> T {
        match self {
            Self::Pair { pair, c_n } => pair.gamma(*c_n, e.mu0_tilde, d),
            Self::Fixed(c) => *c,
            Self::Zero => T::zero(),
        }
    }

    /// Threshold of the liminf condition: `g(d)⁻¹`, or `d⁻²` without a pair.
    pub fn threshold(&self, d: T) -> T {
        match self {
            Self::Pair { pair, .. } => T::one() / pair.g(d),
            _ => T::one() / (d * d),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Pair { pair, c_n } => format!("pair({}), c_n={}", pair.label, c_n),
            Self::Fixed(c) => format!("fixed c={c}"),
            Self::Zero => "gamma=0".into(),
        }
    }
}

/// Scan controls. Shell count per `d` is `max(1, ⌊R/d⌋)`.
#[derive(Debug, Clone)]
pub struct ScanOptions<T> {
    /// Nodes per cube edge.
    pub m: usize,
    pub radius: T,
    pub eigen: EigenOptions<T>,
    pub capacity: CapacityOptions<T>,
    /// Also compute `λ(Q_d)` and `μ(Q_d)` per cube.
    pub spectra: bool,
    /// Evenly spaced subsample (nearest-to-origin first) of at most this many cubes per shell.
    pub max_per_shell: Option<usize>,
    /// Exhaustive `M_γ` when the cube has at most this many cells.
    pub exact_cells: usize,
    /// Verdict (b): last-shell minimum must exceed this multiple of the first.
    pub growth_factor: T,
}

impl<T: Real> Default for ScanOptions<T> {
    fn default() -> Self {
        Self {
            m: 9,
            radius: T::lit(2.5),
            eigen: EigenOptions::default(),
            capacity: CapacityOptions::default(),
            spectra: true,
            max_per_shell: None,
            exact_cells: 0,
            growth_factor: T::lit(2.0),
        }
    }
}

/// Instance data for a scan.
#[derive(Debug, Clone)]
pub struct ScanProblem<T: Real> {
    pub a: VectorPotential<T>,
    pub v: ScalarPotential<T>,
    pub domain: DomainRule<T>,
}

impl<T: Real> ScanProblem<T> {
    pub fn new(a: VectorPotential<T>, v: ScalarPotential<T>) -> Self {
        Self { a, v, domain: DomainRule::WholeSpace }
    }

    pub fn in_domain(mut self, domain: DomainRule<T>) -> Self {
        self.domain = domain;
        self
    }

    fn whole_space(&self) -> bool {
        matches!(self.domain, DomainRule::WholeSpace)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeRecord {
    pub d: f64,
    pub shell: usize,
    pub index: Vec<i64>,
    pub center: Vec<f64>,
    pub mu0: f64,
    pub mu0_tilde: f64,
    pub gamma: f64,
    pub m_gamma: f64,
    pub m_gamma_method: Method,
    /// `μ₀ + d⁻ⁿ M_γ`.
    pub value: f64,
    /// `E = μ₀ + d⁻²`.
    pub energy: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellSummary {
    pub shell: usize,
    pub cubes: usize,
    pub min: f64,
    pub argmin: Vec<i64>,
    /// `γ` and `μ₀` at the minimizing cube.
    pub gamma: f64,
    pub mu0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeScan {
    pub d: f64,
    pub shells: Vec<ShellSummary>,
    /// Least-squares slope of shell minima against shell index.
    pub slope: f64,
    pub threshold: f64,
    /// Growth trend: slope > 0 and last minimum above `growth_factor ×` the first.
    pub verdict_growth: bool,
    /// Last-shell minimum at or above `threshold`.
    pub verdict_threshold: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub kind: String,
    pub gamma_rule: String,
    pub radius: f64,
    pub m: usize,
    pub scans: Vec<SizeScan>,
    pub cubes: Vec<CubeRecord>,
    /// Growth verdict for every `d`.
    pub verdict_growth: bool,
    pub verdict_threshold: bool,
    /// Cubes with `μ₀ > μ(Q_d)` beyond solver tolerance.
    pub consistency_violations: usize,
    pub note: String,
}

const TREND_NOTE: &str = "finite-radius proxy: shell minima and their trend stand in for the limit over distant cubes";

pub(crate) fn ls_slope(y: &[f64]) -> f64 {
    let k = y.len();
    if k < 2 {
        return 0.0;
    }
    let xm = (k - 1) as f64 / 2.0;
    let ym = y.iter().sum::<f64>() / k as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        num += (i as f64 - xm) * (v - ym);
        den += (i as f64 - xm).powi(2);
    }
    num / den
}

pub(crate) fn shells_for<T: Real>(radius: T, d: T) -> usize {
    ((radius / d).as_f64() + 1e-9).floor().max(1.0) as usize
}

/// Subsample a shell: sort by center distance (index tie-break), then take evenly spaced entries.
pub(crate) fn thin<T: Real>(mut cubes: Vec<TileCube<T>>, max_per_shell: Option<usize>) -> Vec<TileCube<T>> {
    let Some(k) = max_per_shell else { return cubes };
    let max_shell = cubes.iter().map(|c| c.shell).max().unwrap_or(0);
    let mut out = Vec::new();
    for s in 0..=max_shell {
        let mut shell: Vec<_> = cubes.iter().filter(|c| c.shell == s).cloned().collect();
        shell.sort_by(|a, b| {
            a.cube.center_norm().partial_cmp(&b.cube.center_norm()).unwrap().then_with(|| a.index.cmp(&b.index))
        });
        if shell.len() <= k {
            out.extend(shell);
        } else {
            let picked: Vec<_> = (0..k).map(|j| shell[j * shell.len() / k].clone()).collect();
            out.extend(picked);
        }
    }
    cubes.clear();
    out.sort_by(|a, b| a.shell.cmp(&b.shell).then_with(|| a.index.cmp(&b.index)));
    out
}

fn evaluate<T: Real>(
    problem: &ScanProblem<T>,
    rule: &GammaRule<T>,
    tile: &TileCube<T>,
    opts: &ScanOptions<T>,
    cache: &CapacityCache<T>,
) -> Result<CubeRecord> {
    let n = tile.cube.dim();
    let d = tile.cube.edge();
    let grid = rasterize(&tile.cube, opts.m)?;
    let mask = (!problem.whole_space()).then(|| problem.domain.sample(&grid));
    let a = problem.a.sample(&grid)?;
    // a ≡ 0 on the whole cube: constants are admissible and the form is nonnegative
    let energy = if problem.a.is_zero() && mask.is_none() {
        LocalEnergy { mu0: T::zero(), mu0_tilde: T::zero() }
    } else {
        local_energy(&grid, &a, mask.as_ref(), &opts.eigen)?
    };
    let gamma = rule.gamma(&energy, d);
    let query = MolchanovQuery {
        cube: tile.cube.clone(),
        v: problem.v.clone(),
        gamma,
        m: opts.m,
        mandatory: mask.as_ref().map(|m| m.complement_cells()),
    };
    let molchanov = if grid.cell_count() <= opts.exact_cells {
        molchanov_brute_with(&query, opts.exact_cells.max(DEFAULT_MAX_CELLS), cache)?
    } else {
        molchanov_greedy_with(&query, cache)?
    };
    let dn = d.powi(n as i32);
    let value = energy.mu0 + molchanov.value / dn;
    let (lambda, mu) = if opts.spectra {
        let l = dirichlet_bottom(&grid, &a, &problem.v, mask.as_ref(), &opts.eigen)?;
        let u = neumann_bottom(&grid, &a, &problem.v, mask.as_ref(), &opts.eigen)?;
        (Some(l.value.as_f64()), Some(u.value.as_f64()))
    } else {
        (None, None)
    };
    Ok(CubeRecord {
        d: d.as_f64(),
        shell: tile.shell,
        index: tile.index.clone(),
        center: tile.cube.center().iter().map(|c| c.as_f64()).collect(),
        mu0: energy.mu0.as_f64(),
        mu0_tilde: energy.mu0_tilde.as_f64(),
        gamma: gamma.as_f64(),
        m_gamma: molchanov.value.as_f64(),
        m_gamma_method: molchanov.method,
        value: value.as_f64(),
        energy: (energy.mu0 + T::one() / (d * d)).as_f64(),
        lambda,
        mu,
    })
}

fn summarize<T: Real>(d: T, records: &[CubeRecord], rule: &GammaRule<T>, opts: &ScanOptions<T>) -> SizeScan {
    let max_shell = records.iter().map(|r| r.shell).max().unwrap_or(0);
    let mut shells = Vec::new();
    for s in 0..=max_shell {
        let mut best: Option<&CubeRecord> = None;
        let mut count = 0;
        for r in records.iter().filter(|r| r.shell == s) {
            count += 1;
            if best.is_none_or(|b| r.value < b.value) {
                best = Some(r);
            }
        }
        if let Some(b) = best {
            shells.push(ShellSummary {
                shell: s,
                cubes: count,
                min: b.value,
                argmin: b.index.clone(),
                gamma: b.gamma,
                mu0: b.mu0,
            });
        }
    }
    let mins: Vec<f64> = shells.iter().map(|s| s.min).collect();
    let slope = ls_slope(&mins);
    let first = mins.first().copied().unwrap_or(0.0);
    let last = mins.last().copied().unwrap_or(0.0);
    let threshold = rule.threshold(d).as_f64();
    SizeScan {
        d: d.as_f64(),
        shells,
        slope,
        threshold,
        verdict_growth: slope > 0.0 && last > opts.growth_factor.as_f64() * first,
        verdict_threshold: last >= threshold,
    }
}

fn check_sizes<T: Real>(ds: &[T], d0: Option<T>) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::Precondition("empty list of cube sizes".into()));
    }
    for &d in ds {
        let ok = d > T::zero() && d.is_finite() && d0.is_none_or(|d0| d < d0);
        if !ok {
            return Err(Error::Precondition(format!("cube size {d} outside (0, d0)")));
        }
    }
    Ok(())
}

/// Tiling scan of `μ₀ + d⁻ⁿ M_γ` under any `γ` rule.
pub fn scan_with_rule<T: Real>(
    problem: &ScanProblem<T>,
    rule: &GammaRule<T>,
    n: usize,
    ds: &[T],
    opts: &ScanOptions<T>,
    kind: &str,
) -> Result<CriterionReport> {
    let d0 = match rule {
        GammaRule::Pair { pair, .. } => Some(pair.d0),
        _ => None,
    };
    check_sizes(ds, d0)?;
    if !(opts.radius > T::zero()) {
        return Err(Error::Precondition("scan radius must be positive".into()));
    }
    let cache = CapacityCache::new(opts.capacity);
    let mut scans = Vec::new();
    let mut cubes = Vec::new();
    for &d in ds {
        let tiles = thin(tiling(n, d, shells_for(opts.radius, d))?, opts.max_per_shell);
        let records: Vec<CubeRecord> = tiles
            .par_iter()
            .map(|t| evaluate(problem, rule, t, opts, &cache))
            .collect::<Result<_>>()?;
        scans.push(summarize(d, &records, rule, opts));
        cubes.extend(records);
    }
    let tol = opts.eigen.tol.as_f64().max(1e-6);
    let consistency_violations = cubes
        .iter()
        .filter(|r| r.mu.is_some_and(|mu| r.mu0 > mu + tol * mu.abs().max(1.0 / (r.d * r.d))))
        .count();
    Ok(CriterionReport {
        kind: kind.to_string(),
        gamma_rule: rule.label(),
        radius: opts.radius.as_f64(),
        m: opts.m,
        verdict_growth: scans.iter().all(|s| s.verdict_growth),
        verdict_threshold: scans.iter().all(|s| s.verdict_threshold),
        scans,
        cubes,
        consistency_violations,
        note: TREND_NOTE.to_string(),
    })
}

/// Discreteness scan under an admissible pair; non-admissible pairs are rejected.
pub fn scan_discreteness<T: Real>(
    problem: &ScanProblem<T>,
    pair: &AdmissiblePair<T>,
    c_n: T,
    ds: &[T],
    opts: &ScanOptions<T>,
) -> Result<CriterionReport> {
    validate_pair(pair, &SampleLattice::default()).into_result()?;
    if !(c_n > T::zero()) {
        return Err(Error::Precondition("c_n must be positive".into()));
    }
    let rule = GammaRule::Pair { pair: pair.clone(), c_n };
    scan_with_rule(problem, &rule, pair.n, ds, opts, "discreteness")
}

/// Fixed-`c` scan.
pub fn check_sufficient<T: Real>(
    problem: &ScanProblem<T>,
    c: T,
    n: usize,
    ds: &[T],
    opts: &ScanOptions<T>,
) -> Result<CriterionReport> {
    if !(c >= T::zero() && c < T::one()) {
        return Err(Error::Precondition(format!("c must lie in [0, 1), got {c}")));
    }
    scan_with_rule(problem, &GammaRule::Fixed(c), n, ds, opts, "sufficient")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NecessaryReport {
    pub report: CriterionReport,
    /// Sizes where a discreteness verdict was claimed but the `γ = 0` quantity does not grow.
    pub inconsistent: Vec<f64>,
}

/// `γ = 0` scan; audits a previously claimed discreteness verdict if given.
pub fn check_necessary<T: Real>(
    problem: &ScanProblem<T>,
    n: usize,
    ds: &[T],
    opts: &ScanOptions<T>,
    claimed: Option<&CriterionReport>,
) -> Result<NecessaryReport> {
    let report = scan_with_rule(problem, &GammaRule::Zero, n, ds, opts, "necessary")?;
    let mut inconsistent = Vec::new();
    if let Some(c) = claimed {
        for s in c.scans.iter().filter(|s| s.verdict_growth) {
            let mine = report.scans.iter().find(|r| (r.d - s.d).abs() <= 1e-12 * s.d);
            if mine.is_some_and(|r| !r.verdict_growth) {
                inconsistent.push(s.d);
            }
        }
    }
    Ok(NecessaryReport { report, inconsistent })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub first: String,
    pub second: String,
    pub agree: bool,
    /// `(d, condition)` pairs where the verdicts differ; discretization artifacts.
    pub disagreements: Vec<(f64, String)>,
}

/// Compares per-size verdicts of two scans of the same instance.
pub fn equivalence_probe(a: &CriterionReport, b: &CriterionReport) -> EquivalenceReport {
    let mut disagreements = Vec::new();
    for sa in &a.scans {
        let Some(sb) = b.scans.iter().find(|s| (s.d - sa.d).abs() <= 1e-12 * sa.d) else {
            disagreements.push((sa.d, "missing".into()));
            continue;
        };
        if sa.verdict_growth != sb.verdict_growth {
            disagreements.push((sa.d, "growth".into()));
        }
        if sa.verdict_threshold != sb.verdict_threshold {
            disagreements.push((sa.d, "threshold".into()));
        }
    }
    EquivalenceReport {
        first: a.gamma_rule.clone(),
        second: b.gamma_rule.clone(),
        agree: disagreements.is_empty(),
        disagreements,
    }
}

impl CriterionReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Per-cube rows.
    pub fn write_cubes_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record([
            "d", "shell", "index", "center", "mu0", "mu0_tilde", "gamma", "m_gamma", "method", "value", "energy",
            "lambda", "mu",
        ])
        .map_err(fmt)?;
        let join = |v: Vec<String>| v.join(" ");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.cubes {
            out.write_record([
                r.d.to_string(),
                r.shell.to_string(),
                join(r.index.iter().map(|k| k.to_string()).collect()),
                join(r.center.iter().map(|k| k.to_string()).collect()),
                r.mu0.to_string(),
                r.mu0_tilde.to_string(),
                r.gamma.to_string(),
                r.m_gamma.to_string(),
                format!("{:?}", r.m_gamma_method).to_lowercase(),
                r.value.to_string(),
                r.energy.to_string(),
                opt(r.lambda),
                opt(r.mu),
            ])
            .map_err(fmt)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Plot rows: one per `(d, shell)`.
    pub fn write_shells_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["d", "shell", "cubes", "min", "gamma", "mu0"]).map_err(fmt)?;
        for s in &self.scans {
            for sh in &s.shells {
                out.write_record([
                    s.d.to_string(),
                    sh.shell.to_string(),
                    sh.cubes.to_string(),
                    sh.min.to_string(),
                    sh.gamma.to_string(),
                    sh.mu0.to_string(),
                ])
                .map_err(fmt)?;
            }
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Shell minima for one size.
    pub fn shell_minima(&self, d: f64) -> Option<Vec<f64>> {
        self.scans
            .iter()
            .find(|s| (s.d - d).abs() <= 1e-12 * d)
            .map(|s| s.shells.iter().map(|x| x.min).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_shells_partition() {
        let t = tiling::<f64>(2, 0.5, 3).unwrap();
        assert_eq!(t.len(), 36);
        let counts: Vec<usize> = (0..3).map(|s| t.iter().filter(|c| c.shell == s).count()).collect();
        // (2s+2)^2 − (2s)^2 cubes per shell
        assert_eq!(counts, vec![4, 12, 20]);
        assert!(t.windows(2).all(|w| w[0].shell <= w[1].shell));
        let origin = t.iter().find(|c| c.index == vec![0, 0]).unwrap();
        assert_eq!(origin.cube.lower(0), 0.0);
        assert_eq!(origin.cube.upper(1), 0.5);
        assert_eq!(tiling::<f64>(3, 1.0, 2).unwrap().len(), 64);
    }

    #[test]
    fn slope_of_line() {
        assert!((ls_slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-14);
        assert_eq!(ls_slope(&[0.0; 5]), 0.0);
        assert_eq!(ls_slope(&[4.0]), 0.0);
    }

    #[test]
    fn thinning_keeps_nearest() {
        let t = tiling::<f64>(2, 1.0, 3).unwrap();
        let thinned = thin(t, Some(2));
        assert_eq!(thinned.len(), 6);
        // shell 0 cubes are all equidistant, so index order decides
        assert_eq!(thinned[0].index, vec![-1, -1]);
    }

    #[test]
    fn shell_count_from_radius() {
        assert_eq!(shells_for(2.5f64, 0.5), 5);
        assert_eq!(shells_for(0.1f64, 0.5), 1);
    }

    #[test]
    fn inadmissible_pair_rejected() {
        let p = AdmissiblePair::new(2, 1.0, |t: f64| 2.0 * super::super::pair::f_n(2, t), |d| d * d, "bad");
        let prob = ScanProblem::new(VectorPotential::Zero, ScalarPotential::zero());
        let err = scan_discreteness(&prob, &p, 0.25, &[0.5], &ScanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn size_outside_range_rejected() {
        let p = AdmissiblePair::<f64>::standard(2, 1.0);
        let prob = ScanProblem::new(VectorPotential::Zero, ScalarPotential::zero());
        assert!(scan_discreteness(&prob, &p, 0.25, &[1.5], &ScanOptions::default()).is_err());
    }
}
