use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::*;
use super::random::*;
use crate::capacity::{CapacityCache, CapacityOptions};
use crate::criteria::ConstantsLedger;
use crate::error::{Error, Result};
use crate::lattice::{rasterize, CellField, CompactSetMask, Cube, Grid, GridFunction, MagneticPotential, ScalarPotential};
use crate::spectral::{bottom_with_pinned, dirichlet_bottom, neumann_bottom, BoundaryKind, EigenOptions};

/// Frozen constants are the fitted extreme widened by this fraction.
pub const FIT_MARGIN: f64 = 0.25;
/// Largest relative change of a fitted constant between disjoint-seed suites.
pub const DRIFT_LIMIT: f64 = 0.2;

/// Constants fitted by the suite, named by check.
pub const FITTED: [&str; 6] = ["cap_upper", "two_term", "levelset_cap", "restriction", "cutoff_energy", "cutoff_cap_fraction"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    /// Nodes per edge of the unit test cube.
    pub m: usize,
    /// Nodes per edge for the two-term check, small enough for exhaustive `M_γ`.
    pub two_term_m: usize,
    /// Nodes per edge for the cutoff check, which needs sets well below one cell-cluster of capacity.
    pub cutoff_m: usize,
    /// Random cases per check.
    pub cases: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        match n {
            2 => Self { n, m: 9, two_term_m: 4, cutoff_m: 17, cases: 120, seed },
            _ => Self { n, m: 5, two_term_m: 3, cutoff_m: 9, cases: 8, seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub cap_upper: f64,
    pub two_term: f64,
    pub levelset_cap: f64,
    pub restriction: f64,
    pub cutoff_energy: f64,
    pub cutoff_cap_fraction: f64,
}

impl Constants {
    /// Everything passes; used while fitting.
    fn open(cutoff_cap_fraction: f64) -> Self {
        Self {
            cap_upper: f64::INFINITY,
            two_term: f64::INFINITY,
            levelset_cap: f64::INFINITY,
            restriction: f64::INFINITY,
            cutoff_energy: 0.0,
            cutoff_cap_fraction,
        }
    }

    fn get(&self, name: &str) -> f64 {
        match name {
            "cap_upper" => self.cap_upper,
            "two_term" => self.two_term,
            "levelset_cap" => self.levelset_cap,
            "restriction" => self.restriction,
            "cutoff_energy" => self.cutoff_energy,
            _ => self.cutoff_cap_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub constants: Constants,
    pub cases: Vec<InequalityCase>,
    /// Extreme observed ratio per fitted constant (sup, or inf for the lower-bound constant).
    pub fits: BTreeMap<String, f64>,
    /// Cutoff constructions refused by the threshold.
    pub refused: usize,
    pub failures: usize,
}

fn case_rng(seed: u64, tag: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag * 1_000_003 + i as u64);
    r
}

fn unit_grid(n: usize, m: usize) -> Result<Grid<f64>> {
    rasterize(&Cube::unit(n)?, m)
}

fn extremal_vanishing(f: &CompactSetMask<f64>, eigen: &EigenOptions<f64>) -> Result<Option<GridFunction<f64>>> {
    let g = f.grid();
    let a = MagneticPotential::zero(g.clone());
    let v = CellField::new(g.clone(), vec![0.0; g.cell_count()])?;
    Ok(bottom_with_pinned(&a, &v, &f.node_closure(), BoundaryKind::Neumann, eigen)?.eigenvector)
}

/// Centered, corner and face boxes of every size.
fn anchor_sets(g: &Grid<f64>) -> Vec<CompactSetMask<f64>> {
    let n = g.dim();
    let mut sets = Vec::new();
    for k in 1..g.cells_per_edge() {
        let w = k as f64 * g.h() + 1e-9;
        sets.push(CompactSetMask::sub_box(g.clone(), &vec![0.5 - w / 2.0; n], &vec![0.5 + w / 2.0; n]));
        sets.push(CompactSetMask::sub_box(g.clone(), &vec![-1e-9; n], &vec![w; n]));
        let mut lo = vec![0.5 - w / 2.0; n];
        let mut hi = vec![0.5 + w / 2.0; n];
        lo[0] = -1e-9;
        hi[0] = w;
        sets.push(CompactSetMask::sub_box(g.clone(), &lo, &hi));
    }
    sets.retain(|r| !r.is_empty());
    sets
}

fn cap_upper_anchors(cfg: &SuiteConfig, c: f64, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    let eigen = EigenOptions::default();
    let per: Vec<Option<InequalityCase>> = anchor_sets(&g)
        .par_iter()
        .map(|f| match extremal_vanishing(f, &eigen)? {
            Some(u) => check_cap_upper(&u, f, None, c, cache).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn cap_upper_cases(cfg: &SuiteConfig, c: f64, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    let eigen = EigenOptions::default();
    let per: Vec<Vec<InequalityCase>> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 1, i);
            let f = random_set(&g, &mut rng, 0.1, 0.5);
            let mut out = Vec::new();
            if let Some(u) = extremal_vanishing(&f, &eigen)? {
                out.push(check_cap_upper(&u, &f, None, c, cache)?);
            }
            let rho = 2.0 * g.h();
            let u = vanish_on(&smooth_function(&g, &mut rng, false), &f, rho);
            if crate::lattice::l2_norm_sq(&u) > 0.0 {
                out.push(check_cap_upper(&u, &f, None, c, cache)?);
            }
            // magnetic variant with a complex function and a linear field
            let a = random_linear_field(&mut rng, cfg.n, 4.0).sample(&g)?;
            let w = vanish_on(&smooth_function(&g, &mut rng, true), &f, rho);
            if crate::lattice::l2_norm_sq(&w) > 0.0 {
                out.push(check_cap_upper(&w, &f, Some(&a), c, cache)?);
                out.push(check_diamagnetic(&w, &a)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Every cell pattern `S` with `V = amp·1_S` and `u` the lowest mode vanishing on `S`: the potential term is zero,
/// so only the gradient term can bound `∫|u|²`.
fn two_term_anchors(cfg: &SuiteConfig, c: f64, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.two_term_m)?;
    let cells = g.cell_count();
    let eigen = EigenOptions::default();
    let per: Vec<Vec<InequalityCase>> = (1..(1usize << cells) - 1)
        .into_par_iter()
        .map(|bits| {
            let idx: Vec<usize> = (0..cells).filter(|&k| bits >> k & 1 == 1).collect();
            let s = CompactSetMask::from_cell_indices(g.clone(), &idx)?;
            let Some(u) = extremal_vanishing(&s, &eigen)? else { return Ok(Vec::new()) };
            let gg = g.clone();
            let v = ScalarPotential::closed(move |x: &[f64]| if bits >> gg.cell_containing(x) & 1 == 1 { 10.0 } else { 0.0 });
            [0.05, 0.1, 0.2, 0.4, 0.6].iter().map(|&gamma| check_two_term(&u, &v, gamma, c, cache)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn two_term_cases(cfg: &SuiteConfig, c: f64, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.two_term_m)?;
    let lo = vec![0.0; cfg.n];
    (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 2, i);
            let (u, v) = if i % 2 == 0 {
                (smooth_function(&g, &mut rng, i % 4 == 2), random_potential(&mut rng, cfg.n, &lo, 1.0))
            } else {
                // u concentrated where V vanishes, so the gradient term has to carry the bound
                let (v, p, r) = well_potential(&mut rng, cfg.n, &lo, 1.0);
                let mut u = tent(&g, &p, rng.random_range(1.0..3.0) * r);
                u.add_assign(&smooth_function(&g, &mut rng, false), rng.random_range(0.0..0.2))?;
                (u, v)
            };
            let gamma = rng.random_range(0.05..0.6);
            check_two_term(&u, &v, gamma, c, cache)
        })
        .collect()
}

/// Largest capacity fraction `β` such that every swept set with fraction at most `β` keeps `d⁻ⁿ∫ψ² ≥ 1/4`.
///
/// The sweep grows balls around the cube center and a few random centers.
pub fn cutoff_threshold_sweep(cfg: &SuiteConfig, centers: usize) -> Result<f64> {
    let g = unit_grid(cfg.n, cfg.cutoff_m)?;
    let opts = CapacityOptions::default();
    let mut rng = case_rng(cfg.seed, 9, 0);
    let mut pts = vec![vec![0.5; cfg.n]];
    for _ in 0..centers {
        pts.push((0..cfg.n).map(|_| rng.random_range(0.2..0.8)).collect());
    }
    let steps = cfg.cutoff_m;
    let jobs: Vec<(usize, usize)> = (0..pts.len()).flat_map(|p| (1..=steps).map(move |s| (p, s))).collect();
    let mut samples: Vec<(f64, bool)> = jobs
        .par_iter()
        .filter_map(|&(p, s)| {
            let r = 0.4 * s as f64 / steps as f64;
            let mut ball = CompactSetMask::ball(g.clone(), &pts[p], r);
            if ball.is_empty() {
                ball.insert(g.cell_containing(&pts[p]));
            }
            Some(build_cutoff(&ball, f64::INFINITY, &opts).map(|w| (w.beta, w.mass_ratio >= 0.25)))
        })
        .collect::<Result<_>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first_fail = samples.iter().position(|s| !s.1).unwrap_or(samples.len());
    if first_fail == 0 {
        return Err(Error::Solver("cutoff sweep: the smallest swept set already violates the mass bound".into()));
    }
    Ok(samples[first_fail - 1].0)
}

fn cutoff_cases(cfg: &SuiteConfig, c_prime: f64, threshold: f64) -> Result<(Vec<InequalityCase>, usize)> {
    let g = unit_grid(cfg.n, cfg.cutoff_m)?;
    let opts = CapacityOptions::default();
    let per: Vec<Option<[InequalityCase; 2]>> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 3, i);
            let f = random_set(&g, &mut rng, 0.02, 0.25);
            match build_cutoff(&f, threshold, &opts) {
                Ok(w) => Ok(Some(check_cutoff(&w, c_prime))),
                Err(Error::Precondition(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let refused = per.iter().filter(|p| p.is_none()).count();
    Ok((per.into_iter().flatten().flatten().collect(), refused))
}

/// Level-set checks of `u` at up to eight levels spread over the cell levels of the normalized `|u|`.
fn levelset_scan(
    u: &GridFunction<f64>,
    a: Option<&MagneticPotential<f64>>,
    c: f64,
    cache: &CapacityCache<f64>,
) -> Result<Vec<InequalityCase>> {
    let g = u.grid();
    let s = (g.cube().volume() / crate::lattice::l2_norm_sq(u)).sqrt();
    let abs: Vec<f64> = u.values().iter().map(|z| z.norm() * s).collect();
    let mut levels: Vec<f64> = (0..g.cell_count())
        .map(|c| g.cell_corners(c).map(|i| abs[i]).fold(f64::INFINITY, f64::min))
        .filter(|&t| t > 1e-3)
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let picks = levels.len().min(8);
    (0..picks)
        .map(|j| levels[j * (levels.len() - 1) / (picks - 1).max(1)])
        .map(|k| check_levelset_cap(u, k, a, c, cache))
        .collect()
}

/// Plateaus and tents on a fixed set of centers and widths.
fn levelset_anchors(g: &Grid<f64>) -> Vec<GridFunction<f64>> {
    let n = g.dim();
    let mut out = vec![GridFunction::from_real_fn(g.clone(), |_| 1.0).expect("finite")];
    for &r in &[0.25, 0.5, 1.0, 2.0] {
        for p in [vec![0.5; n], vec![0.0; n], vec![0.25; n]] {
            out.push(tent(g, &p, r));
            let q = p.clone();
            // plateau: flat top of radius r/2 with a linear edge of width r/2
            out.push(
                GridFunction::from_real_fn(g.clone(), move |x| {
                    let dist = q.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    (2.0 - 2.0 * dist / r).clamp(0.0, 1.0)
                })
                .expect("finite"),
            );
        }
    }
    out
}

fn levelset_cases(cfg: &SuiteConfig, c: f64, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    let anchors: Vec<Vec<InequalityCase>> =
        levelset_anchors(&g).par_iter().map(|u| levelset_scan(u, None, c, cache)).collect::<Result<_>>()?;
    let random: Vec<Vec<InequalityCase>> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 4, i);
            let magnetic = i % 2 == 1;
            let u = smooth_function(&g, &mut rng, magnetic);
            let a = if magnetic { Some(random_linear_field(&mut rng, cfg.n, 4.0).sample(&g)?) } else { None };
            levelset_scan(&u, a.as_ref(), c, cache)
        })
        .collect::<Result<_>>()?;
    Ok(anchors.into_iter().chain(random).flatten().collect())
}

/// Constants, plateaus and tents against centered and corner boxes of every size.
fn restriction_anchors(cfg: &SuiteConfig, c: f64) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    let us = levelset_anchors(&g);
    let mut sets = anchor_sets(&g);
    sets.push(CompactSetMask::full(g.clone()));
    sets.retain(|r| !r.is_empty());
    let per: Vec<Vec<InequalityCase>> =
        us.par_iter().map(|u| sets.iter().map(|r| check_restriction(u, r, c)).collect()).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn restriction_cases(cfg: &SuiteConfig, c: f64) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 5, i);
            let r = random_set(&g, &mut rng, 0.1, 0.6);
            let u = if i % 2 == 0 {
                smooth_function(&g, &mut rng, false)
            } else {
                // tent concentrated on R
                let cells: Vec<usize> = r.indices().collect();
                let n = cfg.n;
                let center: Vec<f64> =
                    (0..n).map(|k| cells.iter().map(|&c| g.cell_center(c)[k]).sum::<f64>() / cells.len() as f64).collect();
                let width = rng.random_range(0.1..0.5);
                GridFunction::from_real_fn(g.clone(), |x| {
                    let dist = (0..n).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>().sqrt();
                    (1.0 - dist / width).max(0.0) + 1e-3
                })?
            };
            check_restriction(&u, &r, c)
        })
        .collect()
}

fn cap_dirichlet_cases(cfg: &SuiteConfig, cache: &CapacityCache<f64>) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 6, i);
            let u = vanish_on_boundary(&smooth_function(&g, &mut rng, i % 2 == 1));
            let r = if i % 3 == 0 { CompactSetMask::full(g.clone()) } else { random_set(&g, &mut rng, 0.3, 0.8) };
            check_cap_dirichlet(&u, &r, cache)
        })
        .collect()
}

fn poincare_cases(cfg: &SuiteConfig) -> Result<Vec<InequalityCase>> {
    let g = unit_grid(cfg.n, cfg.m)?;
    Ok((0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, 7, i);
            check_poincare(&smooth_function(&g, &mut rng, i % 2 == 1))
        })
        .collect())
}

fn extreme(cases: &[InequalityCase], name: &str, lower: bool) -> f64 {
    let it = cases.iter().filter(|c| c.name == name).filter_map(|c| c.ratio);
    if lower {
        it.fold(f64::INFINITY, f64::min)
    } else {
        it.fold(0.0, f64::max)
    }
}

/// Runs every lemma check with the given constants.
pub fn run_suite(cfg: &SuiteConfig, k: &Constants) -> Result<SuiteReport> {
    if !(2..=3).contains(&cfg.n) || cfg.cases == 0 {
        return Err(Error::Precondition("suite needs n in {2, 3} and at least one case".into()));
    }
    let cache = CapacityCache::new(CapacityOptions::default());
    let mut cases = poincare_cases(cfg)?;
    cases.extend(cap_upper_anchors(cfg, k.cap_upper, &cache)?);
    cases.extend(cap_upper_cases(cfg, k.cap_upper, &cache)?);
    cases.extend(two_term_anchors(cfg, k.two_term, &cache)?);
    cases.extend(two_term_cases(cfg, k.two_term, &cache)?);
    let (cut, refused) = cutoff_cases(cfg, k.cutoff_energy, k.cutoff_cap_fraction)?;
    cases.extend(cut);
    cases.extend(levelset_cases(cfg, k.levelset_cap, &cache)?);
    cases.extend(restriction_anchors(cfg, k.restriction)?);
    cases.extend(restriction_cases(cfg, k.restriction)?);
    cases.extend(cap_dirichlet_cases(cfg, &cache)?);
    let mut fits = BTreeMap::new();
    for name in ["cap_upper", "two_term", "levelset_cap", "restriction"] {
        fits.insert(name.to_string(), extreme(&cases, name, false));
    }
    fits.insert("cap_upper".into(), fits["cap_upper"].max(extreme(&cases, "cap_upper_magnetic", false)));
    fits.insert("cutoff_energy".into(), extreme(&cases, "cutoff_energy", true));
    fits.insert("cutoff_cap_fraction".into(), k.cutoff_cap_fraction / (1.0 - FIT_MARGIN));
    let failures = cases.iter().filter(|c| !c.passed).count();
    Ok(SuiteReport { config: *cfg, constants: *k, cases, fits, refused, failures })
}

fn key(name: &str, n: usize) -> String {
    format!("{name}_n{n}")
}

fn fit_key(name: &str, n: usize) -> String {
    format!("{name}_n{n}_fit")
}

/// Fits every constant, widens it by [`FIT_MARGIN`] and writes both the frozen value and the raw fit.
pub fn calibrate(cfg: &SuiteConfig, ledger: &mut ConstantsLedger, run_id: &str) -> Result<SuiteReport> {
    let beta = cutoff_threshold_sweep(cfg, 3)?;
    let frozen_fraction = beta * (1.0 - FIT_MARGIN);
    let mut report = run_suite(cfg, &Constants::open(frozen_fraction))?;
    report.fits.insert("cutoff_cap_fraction".into(), beta);
    let n = cfg.n;
    for name in FITTED {
        let fit = report.fits[name];
        let frozen = match name {
            "cutoff_energy" => fit / (1.0 + FIT_MARGIN),
            "cutoff_cap_fraction" => frozen_fraction,
            _ => fit * (1.0 + FIT_MARGIN),
        };
        if !frozen.is_finite() {
            return Err(Error::Solver(format!("calibration produced no data for {name}")));
        }
        ledger.set(&key(name, n), frozen, run_id, "frozen: fitted extreme widened by the fit margin");
        ledger.set(&fit_key(name, n), fit, run_id, "raw fitted extreme");
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: SuiteReport,
    /// `|refit − calibrated fit| / calibrated fit` per constant.
    pub drift: BTreeMap<String, f64>,
    pub passed: bool,
}

/// Runs the suite under frozen ledger constants and refits on the same data.
pub fn validate(cfg: &SuiteConfig, ledger: &ConstantsLedger) -> Result<ValidationReport> {
    let n = cfg.n;
    let get = |name: &str| ledger.require(&key(name, n));
    let k = Constants {
        cap_upper: get("cap_upper")?,
        two_term: get("two_term")?,
        levelset_cap: get("levelset_cap")?,
        restriction: get("restriction")?,
        cutoff_energy: get("cutoff_energy")?,
        cutoff_cap_fraction: get("cutoff_cap_fraction")?,
    };
    let mut suite = run_suite(cfg, &k)?;
    let refit_beta = cutoff_threshold_sweep(cfg, 3)?;
    suite.fits.insert("cutoff_cap_fraction".into(), refit_beta);
    let mut drift = BTreeMap::new();
    for name in FITTED {
        let old = ledger.require(&fit_key(name, n))?;
        drift.insert(name.to_string(), (suite.fits[name] - old).abs() / old.abs());
    }
    let passed = suite.failures == 0 && drift.values().all(|&d| d < DRIFT_LIMIT);
    Ok(ValidationReport { suite, drift, passed })
}

impl Constants {
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
    }
}

/// Least-squares fit `λ d² ≈ A μ d² + B` over a list of instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeFit {
    pub a: f64,
    pub b: f64,
    /// Smallest `B` making `λ ≤ A μ + B/d²` hold on every instance with the fitted `A`.
    pub b_envelope: f64,
    /// `(d, μ, λ)` per instance.
    pub points: Vec<(f64, f64, f64)>,
    /// Instances with `μ > λ`.
    pub order_violations: usize,
}

/// Dirichlet and Neumann bottoms on each instance, then the two-parameter fit.
pub fn check_bridge(
    instances: &[(crate::lattice::VectorPotential<f64>, ScalarPotential<f64>, Cube<f64>)],
    m: usize,
    eigen: &EigenOptions<f64>,
) -> Result<BridgeFit> {
    if instances.len() < 2 {
        return Err(Error::Precondition("bridge fit needs at least two instances".into()));
    }
    let points: Vec<(f64, f64, f64)> = instances
        .par_iter()
        .map(|(a, v, cube)| {
            let g = rasterize(cube, m)?;
            let field = a.sample(&g)?;
            let mu = neumann_bottom(&g, &field, v, None, eigen)?.value;
            let lam = dirichlet_bottom(&g, &field, v, None, eigen)?.value;
            Ok((cube.edge(), mu, lam))
        })
        .collect::<Result<_>>()?;
    let order_violations = points.iter().filter(|(_, mu, lam)| mu > lam).count();
    let xs: Vec<f64> = points.iter().map(|(d, mu, _)| mu * d * d).collect();
    let ys: Vec<f64> = points.iter().map(|(d, _, lam)| lam * d * d).collect();
    let k = xs.len() as f64;
    let (xm, ym) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = ym - a * xm;
    let b_envelope = xs.iter().zip(&ys).map(|(x, y)| y - a * x).fold(f64::NEG_INFINITY, f64::max);
    Ok(BridgeFit { a, b, b_envelope, points, order_violations })
}

/// Random bridge instances: linear fields, random potentials, sizes in `[0.5, 2]`.
pub fn bridge_instances(
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(crate::lattice::VectorPotential<f64>, ScalarPotential<f64>, Cube<f64>)>> {
    let mut rng = case_rng(seed, 8, 0);
    (0..count)
        .map(|_| {
            let d = rng.random_range(0.5..2.0);
            let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cube = Cube::from_lower(&lo, d)?;
            let a = random_linear_field(&mut rng, n, 3.0);
            let v = random_potential(&mut rng, n, &lo, d);
            Ok((a, v, cube))
        })
        .collect()
}

/// Writes `bridge_a_n{n}` and `bridge_b_n{n}` (the envelope).
pub fn calibrate_bridge(n: usize, m: usize, seed: u64, ledger: &mut ConstantsLedger, run_id: &str) -> Result<BridgeFit> {
    let fit = check_bridge(&bridge_instances(n, 16, seed)?, m, &EigenOptions::default())?;
    ledger.set(&format!("bridge_a_n{n}"), fit.a, run_id, "least-squares slope of lambda d^2 against mu d^2");
    ledger.set(&format!("bridge_b_n{n}"), fit.b_envelope, run_id, "intercept envelope over the fit instances");
    Ok(fit)
}
