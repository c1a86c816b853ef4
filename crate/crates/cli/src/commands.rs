use std::path::Path;

use serde::Serialize;

use magspec::capacity::{capacity_in, Ambient, CapacityCache, CapacityOptions, CapacityReport};
use magspec::criteria::{
    check_necessary, check_sufficient, domain_geometry_check, equivalence_probe, f_n, keys, positivity_check,
    scan_discreteness, AdmissiblePair, ConstantsLedger, CriterionReport, CubeSample, PositivityParams,
    PositivityVariant, ScanOptions, ScanProblem,
};
use magspec::examples::{
    demonstrate_precision, growing_bottle, mu0_delta_scan, sliding_shift, tetrahedron_sweep, write_mu0_csv,
    write_precision_csv, write_tetra_csv, HalfspaceOperator, PrecisionOptions, PrecisionProfile, F_CAP,
};
use magspec::lattice::io::{read_binary, to_csv, write_binary, ValueKind};
use magspec::lattice::{rasterize, CellField, CompactSetMask, Cube, DomainRule, Grid, ScalarPotential, VectorPotential};
use magspec::molchanov::{molchanov_brute_with, molchanov_greedy_with, MolchanovQuery, MolchanovReport, DEFAULT_MAX_CELLS};
use magspec::spectral::{dirichlet_bottom, local_energy, neumann_bottom, EigenOptions, SpectralBottom};
use magspec::testbench::{calibrate, calibrate_bridge, validate, SuiteConfig};

use crate::config::{
    self, Boundary, CapacityConfig, CubeSpec, DemoConfig, EigenConfig, MolchanovConfig, MolchanovMethod,
    PairSpec, ScanConfig, ScanKind, SetSpec, VerifyConfig, VerifyMode,
};
use crate::error::CliError;
use crate::expr::Expr;
use crate::output::{sha256_hex, Outputs};

/// Filled in by a command as soon as its config is loaded.
#[derive(Debug, Default)]
pub struct Meta {
    pub config_sha256: String,
    pub threads: usize,
    pub ledger_version: u32,
}

/// Descriptions of failed checks; empty means every check passed.
pub type Failures = Vec<String>;

fn load<C: serde::de::DeserializeOwned>(path: &Path, meta: &mut Meta) -> Result<C, CliError> {
    let (cfg, bytes) = config::load(path)?;
    meta.config_sha256 = sha256_hex(&bytes);
    meta.ledger_version = magspec::criteria::LEDGER_VERSION;
    Ok(cfg)
}

/// Sizes the rayon pool from the config, then `MAGSPEC_THREADS`, then the machine.
fn init_threads(requested: Option<usize>, meta: &mut Meta) -> Result<(), CliError> {
    let from_env = match std::env::var("MAGSPEC_THREADS") {
        Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| CliError::Config(format!("MAGSPEC_THREADS: not a count: '{s}'")))?),
        Err(_) => None,
    };
    let k = requested.or(from_env).unwrap_or(0);
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    meta.threads = rayon::current_num_threads();
    Ok(())
}

fn check_dim(dim: usize) -> Result<(), CliError> {
    if (2..=3).contains(&dim) {
        Ok(())
    } else {
        Err(CliError::Config(format!("dim: must be 2 or 3, got {dim}")))
    }
}

fn cube(spec: &CubeSpec, dim: usize) -> Result<Cube<f64>, CliError> {
    if spec.center.len() != dim {
        return Err(CliError::Config(format!("cube.center: expected {dim} coordinates, got {}", spec.center.len())));
    }
    Ok(Cube::new(spec.center.clone(), spec.edge)?)
}

fn load_ledger(path: Option<&Path>) -> Result<ConstantsLedger, CliError> {
    match path {
        Some(p) => ConstantsLedger::load(p).map_err(|e| CliError::Config(format!("ledger {}: {e}", p.display()))),
        None => Ok(ConstantsLedger::default()),
    }
}

fn vector_potential(a: Option<&[String]>, b: Option<f64>, dim: usize, field: &str) -> Result<VectorPotential<f64>, CliError> {
    let mut out = VectorPotential::Zero;
    if let Some(comps) = a {
        if comps.len() != dim {
            return Err(CliError::Config(format!("{field}: expected {dim} components, got {}", comps.len())));
        }
        let ex = comps.iter().map(|c| Expr::spatial(c, dim, field)).collect::<Result<Vec<_>, _>>()?;
        out = VectorPotential::closed(move |x: &[f64], k| ex[k].eval(x));
    }
    if let Some(b) = b {
        out = out.plus(VectorPotential::constant_field(b));
    }
    Ok(out)
}

fn scalar_expr(v: Option<&str>, dim: usize, field: &str) -> Result<ScalarPotential<f64>, CliError> {
    match v {
        None => Ok(ScalarPotential::zero()),
        Some(text) => {
            let e = Expr::spatial(text, dim, field)?;
            Ok(ScalarPotential::closed(move |x: &[f64]| e.eval(x)))
        }
    }
}

/// Cell values as the mean of the corner samples of a real nodal field stored on `grid`.
fn potential_file(path: &Path, grid: &Grid<f64>) -> Result<ScalarPotential<f64>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (u, _) = read_binary::<f64, _>(std::io::BufReader::new(file))?;
    let g = u.grid();
    let same_cube = g.cube().center().iter().zip(grid.cube().center()).all(|(a, b)| (a - b).abs() <= 1e-12)
        && (g.cube().edge() - grid.cube().edge()).abs() <= 1e-12;
    if !g.same_shape(grid) || !same_cube {
        return Err(CliError::Config(format!("{}: grid differs from the configured cube and m", path.display())));
    }
    let values = (0..grid.cell_count())
        .map(|c| {
            let corners: Vec<usize> = grid.cell_corners(c).collect();
            corners.iter().map(|&i| u.values()[i].re).sum::<f64>() / corners.len() as f64
        })
        .collect();
    Ok(ScalarPotential::Table(CellField::new(grid.clone(), values)?))
}

fn potential(v: Option<&str>, v_file: Option<&Path>, grid: &Grid<f64>, dim: usize) -> Result<ScalarPotential<f64>, CliError> {
    match (v, v_file) {
        (Some(_), Some(_)) => Err(CliError::Config("v and v_file are mutually exclusive".into())),
        (_, Some(p)) => potential_file(p, grid),
        (v, None) => scalar_expr(v, dim, "v"),
    }
}

fn domain(level: Option<&str>, dim: usize) -> Result<DomainRule<f64>, CliError> {
    match level {
        None => Ok(DomainRule::WholeSpace),
        Some(text) => {
            let e = Expr::spatial(text, dim, "domain")?;
            Ok(DomainRule::closed(move |x: &[f64]| e.eval(x) > 0.0))
        }
    }
}

fn set_mask(spec: &SetSpec, grid: &Grid<f64>, dim: usize) -> Result<CompactSetMask<f64>, CliError> {
    let len = |v: &[f64], what: &str| {
        if v.len() == dim {
            Ok(())
        } else {
            Err(CliError::Config(format!("set.{what}: expected {dim} coordinates, got {}", v.len())))
        }
    };
    let mask = match spec {
        SetSpec::Full => CompactSetMask::full(grid.clone()),
        SetSpec::Ball { center, radius } => {
            len(center, "center")?;
            CompactSetMask::ball(grid.clone(), center, *radius)
        }
        SetSpec::Box { lo, hi } => {
            len(lo, "lo")?;
            len(hi, "hi")?;
            CompactSetMask::sub_box(grid.clone(), lo, hi)
        }
        SetSpec::Rle { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let mask = CompactSetMask::from_rle(&text)?;
            if !mask.grid().same_shape(grid) {
                return Err(CliError::Config(format!("{}: mask grid differs from the configured cube and m", path.display())));
            }
            CompactSetMask::new(grid.clone(), mask.cells().to_vec())?
        }
        SetSpec::Tetrahedron { delta } => {
            let cube = grid.cube();
            let lower: Vec<f64> = (0..dim).map(|k| cube.lower(k)).collect();
            let cells = (0..grid.cell_count())
                .map(|c| {
                    let x = grid.cell_center(c);
                    (0..dim).map(|k| x[k] - lower[k]).sum::<f64>() <= delta * (1.0 + 1e-12)
                })
                .collect();
            CompactSetMask::new(grid.clone(), cells)?
        }
    };
    Ok(mask)
}

#[derive(Serialize)]
struct CapacityOutput {
    capacity: CapacityReport,
    ambient: String,
    convention: &'static str,
}

pub fn capacity(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: CapacityConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    check_dim(cfg.dim)?;
    let q = cube(&cfg.cube, cfg.dim)?;
    let grid = rasterize(&q, cfg.m)?;
    let mask = set_mask(&cfg.set, &grid, cfg.dim)?;
    let ambient = match cfg.ambient_factor {
        Some(f) => Ambient::truncated(&q, f)?,
        None => Ambient::standard(&q)?,
    };
    let mut opts = CapacityOptions::default();
    if let Some(t) = cfg.tol {
        opts.tol = t;
    }
    let res = capacity_in(&mask, &ambient, &opts)?;
    let convention = if cfg.dim == 2 {
        "plane: capacity relative to the concentric square of twice the edge"
    } else {
        "space: whole-space capacity, Dirichlet energy without the 1/(4 pi) normalization"
    };
    out.write_json("capacity.json", &CapacityOutput { capacity: res.report(&mask), ambient: ambient.describe(), convention })?;
    out.write("set.rle", mask.to_rle().as_bytes())?;
    if cfg.minimizer_csv {
        out.write("minimizer.csv", to_csv(&res.minimizer).as_bytes())?;
    }
    Ok(Vec::new())
}

#[derive(Serialize)]
struct BottomRecord {
    value: f64,
    residual: f64,
    iterations: usize,
}

impl From<&SpectralBottom<f64>> for BottomRecord {
    fn from(b: &SpectralBottom<f64>) -> Self {
        Self { value: b.value, residual: b.residual, iterations: b.iterations }
    }
}

#[derive(Serialize)]
struct EigenOutput {
    dim: usize,
    m: usize,
    center: Vec<f64>,
    edge: f64,
    dirichlet: Option<BottomRecord>,
    neumann: Option<BottomRecord>,
    mu0: Option<f64>,
    mu0_tilde: Option<f64>,
    /// `n π² / d²`, the Dirichlet bottom of the free Laplacian.
    free_dirichlet: f64,
}

pub fn eigen(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: EigenConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    check_dim(cfg.dim)?;
    let q = cube(&cfg.cube, cfg.dim)?;
    let grid = rasterize(&q, cfg.m)?;
    let f = &cfg.field;
    let a = vector_potential(f.a.as_deref(), f.b, cfg.dim, "field.a")?.sample(&grid)?;
    let v = potential(f.v.as_deref(), f.v_file.as_deref(), &grid, cfg.dim)?;
    let mask = f.domain.as_deref().map(|d| domain(Some(d), cfg.dim).map(|r| r.sample(&grid))).transpose()?;
    let mut opts = EigenOptions::default();
    if let Some(t) = cfg.tol {
        opts.tol = t;
    }
    if let Some(s) = cfg.seed {
        opts.seed = s;
    }
    opts.max_iter = cfg.max_iter.or(opts.max_iter);
    let dir = matches!(cfg.boundary, Boundary::Dirichlet | Boundary::Both)
        .then(|| dirichlet_bottom(&grid, &a, &v, mask.as_ref(), &opts))
        .transpose()?;
    let neu = matches!(cfg.boundary, Boundary::Neumann | Boundary::Both)
        .then(|| neumann_bottom(&grid, &a, &v, mask.as_ref(), &opts))
        .transpose()?;
    let energy = cfg.local_energy.then(|| local_energy(&grid, &a, mask.as_ref(), &opts)).transpose()?;
    let d = q.edge();
    out.write_json(
        "eigen.json",
        &EigenOutput {
            dim: cfg.dim,
            m: cfg.m,
            center: q.center().to_vec(),
            edge: d,
            dirichlet: dir.as_ref().map(BottomRecord::from),
            neumann: neu.as_ref().map(BottomRecord::from),
            mu0: energy.map(|e| e.mu0),
            mu0_tilde: energy.map(|e| e.mu0_tilde),
            free_dirichlet: cfg.dim as f64 * std::f64::consts::PI.powi(2) / (d * d),
        },
    )?;
    if cfg.eigenvectors {
        for (name, b) in [("dirichlet.mgf", &dir), ("neumann.mgf", &neu)] {
            if let Some(u) = b.as_ref().and_then(|b| b.eigenvector.as_ref()) {
                let mut bytes = Vec::new();
                write_binary(u, ValueKind::Complex, &mut bytes)?;
                out.write(name, &bytes)?;
            }
        }
    }
    Ok(Vec::new())
}

#[derive(Serialize)]
struct MolchanovRow {
    gamma: f64,
    greedy: Option<MolchanovReport>,
    brute: Option<MolchanovReport>,
}

pub fn molchanov(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: MolchanovConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    check_dim(cfg.dim)?;
    if cfg.gammas.is_empty() {
        return Err(CliError::Config("gammas: need at least one value".into()));
    }
    let q = cube(&cfg.cube, cfg.dim)?;
    let grid = rasterize(&q, cfg.m)?;
    let v = potential(cfg.v.as_deref(), cfg.v_file.as_deref(), &grid, cfg.dim)?;
    let mandatory = cfg.domain.as_deref().map(|d| domain(Some(d), cfg.dim).map(|r| r.sample(&grid).complement_cells())).transpose()?;
    let cache = CapacityCache::new(CapacityOptions::default());
    let max_cells = cfg.max_cells.unwrap_or(DEFAULT_MAX_CELLS);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, &gamma) in cfg.gammas.iter().enumerate() {
        let query = MolchanovQuery { cube: q.clone(), v: v.clone(), gamma, m: cfg.m, mandatory: mandatory.clone() };
        let greedy = matches!(cfg.method, MolchanovMethod::Greedy | MolchanovMethod::Both)
            .then(|| molchanov_greedy_with(&query, &cache))
            .transpose()?;
        let brute = matches!(cfg.method, MolchanovMethod::Brute | MolchanovMethod::Both)
            .then(|| molchanov_brute_with(&query, max_cells, &cache))
            .transpose()?;
        for r in greedy.iter().chain(brute.iter()) {
            let name = format!("witness_{}_{i}.rle", serde_json::to_value(r.method)?.as_str().unwrap_or("set"));
            out.write(&name, r.witness.to_rle().as_bytes())?;
        }
        if let (Some(g), Some(b)) = (&greedy, &brute) {
            if b.value > g.value + 1e-9 * g.value.abs().max(1.0) {
                failures.push(format!("gamma={gamma}: exhaustive value {} exceeds greedy value {}", b.value, g.value));
            }
        }
        rows.push(MolchanovRow { gamma, greedy: greedy.map(|r| r.report()), brute: brute.map(|r| r.report()) });
    }
    out.write_json("molchanov.json", &rows)?;
    Ok(failures)
}

fn pair(spec: &PairSpec, n: usize, d0: f64) -> Result<AdmissiblePair<f64>, CliError> {
    let g = match &spec.g {
        Some(text) => Some(Expr::univariate(text, "d", "pair.g")?),
        None => None,
    };
    let g_label = g.as_ref().map_or("d^2".to_string(), |e| e.text().to_string());
    let g_fn = move |d: f64| g.as_ref().map_or(d * d, |e| e.eval(&[d]));
    let d0 = spec.d0.unwrap_or(d0);
    match (&spec.f, &spec.h) {
        (Some(_), Some(_)) => Err(CliError::Config("pair: give either f or h, not both".into())),
        (Some(text), None) => {
            let f = Expr::univariate(text, "t", "pair.f")?;
            let label = format!("{text}, {g_label}");
            Ok(AdmissiblePair::new(n, d0, move |t| f.eval(&[t]), g_fn, label))
        }
        (None, Some(text)) => {
            let h = Expr::univariate(text, "t", "pair.h")?;
            let label = format!("f_n*({text}), {g_label}");
            Ok(AdmissiblePair::new(n, d0, move |t| F_CAP.min(f_n(n, t) * h.eval(&[t])), g_fn, label))
        }
        (None, None) => Ok(AdmissiblePair::new(n, d0, move |t| f_n(n, t), g_fn, format!("f_n, {g_label}"))),
    }
}

fn write_report(out: &mut Outputs, stem: &str, r: &CriterionReport) -> Result<(), CliError> {
    out.write(&format!("{stem}.json"), (r.to_json()? + "\n").as_bytes())?;
    let mut cubes = Vec::new();
    r.write_cubes_csv(&mut cubes)?;
    out.write(&format!("{stem}_cubes.csv"), &cubes)?;
    let mut shells = Vec::new();
    r.write_shells_csv(&mut shells)?;
    out.write(&format!("{stem}_shells.csv"), &shells)?;
    Ok(())
}

fn consistency(r: &CriterionReport, failures: &mut Failures) {
    if r.consistency_violations > 0 {
        failures.push(format!("{}: {} cubes with mu0 above mu", r.kind, r.consistency_violations));
    }
}

pub fn scan(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: ScanConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    check_dim(cfg.dim)?;
    let n = cfg.dim;
    let ledger = load_ledger(cfg.ledger.as_deref())?;
    meta.ledger_version = ledger.version;
    let c_n = ledger.require(keys::GAMMA_PREFACTOR)?;
    let f = &cfg.field;
    if f.v_file.is_some() {
        return Err(CliError::Config("field.v_file: tables are tied to one cube; scans need closed-form fields".into()));
    }
    let a = vector_potential(f.a.as_deref(), f.b, n, "field.a")?;
    let v = scalar_expr(f.v.as_deref(), n, "field.v")?;
    let omega = domain(f.domain.as_deref(), n)?;
    let needs_sizes = !matches!(cfg.kind, ScanKind::Positivity);
    if needs_sizes && cfg.sizes.is_empty() {
        return Err(CliError::Config("sizes: need at least one cube size".into()));
    }
    let mut opts = ScanOptions::default();
    if let Some(x) = cfg.m {
        opts.m = x;
    }
    if let Some(x) = cfg.radius {
        opts.radius = x;
    }
    if let Some(x) = cfg.tol {
        opts.eigen.tol = x;
    }
    opts.max_per_shell = cfg.max_per_shell.or(opts.max_per_shell);
    opts.exact_cells = cfg.exact_cells.unwrap_or(opts.exact_cells);
    opts.spectra = cfg.spectra.unwrap_or(opts.spectra);
    opts.growth_factor = cfg.growth_factor.unwrap_or(opts.growth_factor);
    let problem = ScanProblem::new(a.clone(), v.clone()).in_domain(omega.clone());
    let d0 = 2.0 * cfg.sizes.iter().cloned().fold(0.0, f64::max);
    let mut failures = Vec::new();
    match cfg.kind {
        ScanKind::Discreteness => {
            let first = pair(&cfg.pair, n, d0)?;
            let report = scan_discreteness(&problem, &first, c_n, &cfg.sizes, &opts)?;
            consistency(&report, &mut failures);
            write_report(out, "discreteness", &report)?;
            if let Some(second) = &cfg.second_pair {
                let second = pair(second, n, d0)?;
                let other = scan_discreteness(&problem, &second, c_n, &cfg.sizes, &opts)?;
                consistency(&other, &mut failures);
                write_report(out, "discreteness_second", &other)?;
                out.write_json("equivalence.json", &equivalence_probe(&report, &other))?;
            }
        }
        ScanKind::Sufficient => {
            let c = cfg.c.ok_or_else(|| CliError::Config("c: required for kind = \"sufficient\"".into()))?;
            let report = check_sufficient(&problem, c, n, &cfg.sizes, &opts)?;
            consistency(&report, &mut failures);
            write_report(out, "sufficient", &report)?;
        }
        ScanKind::Necessary => {
            let nec = check_necessary(&problem, n, &cfg.sizes, &opts, None)?;
            consistency(&nec.report, &mut failures);
            write_report(out, "necessary", &nec.report)?;
        }
        ScanKind::Positivity => {
            let p = cfg.positivity.as_ref().ok_or_else(|| CliError::Config("positivity: table required".into()))?;
            let variant: PositivityVariant = p.variant.parse()?;
            let ledger_c = matches!(variant, PositivityVariant::C | PositivityVariant::E);
            let c = if ledger_c { c_n } else { p.c.ok_or_else(|| CliError::Config("positivity.c: required".into()))? };
            let c_tilde = match variant {
                PositivityVariant::E => ledger.require(keys::POSITIVITY_TILDE_C)?,
                _ => p.c_tilde.unwrap_or(0.0),
            };
            let params = PositivityParams { c, d1: p.d1, d: p.d.unwrap_or(0.0), d2: p.d2.unwrap_or(0.0), c_tilde };
            let mut sample = CubeSample::default();
            sample.count = p.count.unwrap_or(sample.count);
            sample.seed = p.seed.unwrap_or(sample.seed);
            sample.box_radius = p.box_radius.unwrap_or(sample.box_radius);
            sample.m = p.m.unwrap_or(sample.m);
            let report = positivity_check(&a, &v, n, variant, params, &sample, &opts.eigen)?;
            if !report.agree {
                failures.push("positivity: verdict and localization cross-check disagree".into());
            }
            out.write_json("positivity.json", &report)?;
        }
        ScanKind::Domain => {
            if f.domain.is_none() {
                return Err(CliError::Config("field.domain: required for kind = \"domain\"".into()));
            }
            let g = match &cfg.pair.g {
                Some(text) => Some(Expr::univariate(text, "d", "pair.g")?),
                None => None,
            };
            let g_fn = |d: f64| g.as_ref().map_or(d * d, |e| e.eval(&[d]));
            let report = domain_geometry_check(&omega, g_fn, c_n, n, &cfg.sizes, opts.radius, opts.m, opts.max_per_shell)?;
            out.write_json("domain.json", &report)?;
        }
    }
    Ok(failures)
}

pub fn verify(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: VerifyConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    if cfg.dims.is_empty() {
        return Err(CliError::Config("dims: need at least one dimension".into()));
    }
    for &n in &cfg.dims {
        check_dim(n)?;
    }
    let suite = |n: usize| {
        let mut s = SuiteConfig::new(n, cfg.seed);
        if let Some(c) = cfg.cases {
            s.cases = c;
        }
        s
    };
    let ledger_path = cfg.ledger.clone();
    let mut failures = Vec::new();
    match cfg.mode {
        VerifyMode::Calibrate => {
            let mut ledger = if ledger_path.exists() { ConstantsLedger::load(&ledger_path)? } else { ConstantsLedger::default() };
            let run_id = format!("calibrate-seed{}", cfg.seed);
            for &n in &cfg.dims {
                let report = calibrate(&suite(n), &mut ledger, &run_id)?;
                if report.failures > 0 {
                    failures.push(format!("n={n}: {} inequality cases fail under the fitted constants", report.failures));
                }
                out.write_json(&format!("calibration_n{n}.json"), &report)?;
                if cfg.bridge {
                    let m = if n == 2 { 9 } else { 5 };
                    let fit = calibrate_bridge(n, m, cfg.seed, &mut ledger, &run_id)?;
                    out.write_json(&format!("bridge_n{n}.json"), &fit)?;
                }
            }
            meta.ledger_version = ledger.version;
            out.write_at(&ledger_path, ledger.to_toml()?.as_bytes())?;
        }
        VerifyMode::Validate => {
            if !ledger_path.exists() {
                return Err(CliError::Config(format!("ledger {}: not found; run calibrate first", ledger_path.display())));
            }
            let ledger = ConstantsLedger::load(&ledger_path)?;
            meta.ledger_version = ledger.version;
            for &n in &cfg.dims {
                let report = validate(&suite(n), &ledger)?;
                if !report.passed {
                    let drift = report.drift.values().cloned().fold(0.0, f64::max);
                    failures.push(format!(
                        "n={n}: {} inequality cases fail, largest refit drift {drift:.3}",
                        report.suite.failures
                    ));
                }
                out.write_json(&format!("validation_n{n}.json"), &report)?;
            }
        }
    }
    Ok(failures)
}

pub fn demo_precision(path: &Path, out: &mut Outputs, meta: &mut Meta) -> Result<Failures, CliError> {
    let cfg: DemoConfig = load(path, meta)?;
    init_threads(cfg.threads, meta)?;
    check_dim(cfg.dim)?;
    let n = cfg.dim;
    let ledger = load_ledger(cfg.ledger.as_deref())?;
    meta.ledger_version = ledger.version;
    let c_n = ledger.require(keys::GAMMA_PREFACTOR)?;
    let a_tilde = match &cfg.a_tilde {
        Some(a) => vector_potential(Some(a), None, n, "a_tilde")?,
        None => growing_bottle(),
    };
    let v_tilde = match &cfg.v_tilde {
        Some(v) => scalar_expr(Some(v), n, "v_tilde")?,
        None => ScalarPotential::harmonic(),
    };
    let op = HalfspaceOperator::new(n, a_tilde, v_tilde)?;
    let profile = if cfg.profile == "logarithmic" {
        PrecisionProfile::logarithmic()
    } else {
        let h = Expr::univariate(&cfg.profile, "t", "profile")?;
        PrecisionProfile::new(move |t| h.eval(&[t]), cfg.profile.clone())
    };
    let mut opts = PrecisionOptions::new(n, cfg.d);
    opts.m = cfg.m.unwrap_or(opts.m);
    if let Some(ds) = &cfg.deltas {
        opts.deltas = ds.clone();
    }
    opts.shells = cfg.shells.unwrap_or(opts.shells);
    opts.spacing = cfg.spacing.unwrap_or(opts.spacing);
    let report = demonstrate_precision(&op, &profile, cfg.d, c_n, &opts)?;
    out.write_json("precision.json", &report)?;
    let mut csv = Vec::new();
    write_precision_csv(&report, &mut csv)?;
    out.write("precision.csv", &csv)?;
    let mut failures = Vec::new();
    if report.found_delta.is_none() {
        failures.push(report.note.clone());
    }
    if let Some(deltas) = &cfg.tetra_deltas {
        let m = cfg.tetra_m.unwrap_or(if n == 2 { 65 } else { 17 });
        let sweep = tetrahedron_sweep(n, cfg.d, deltas, m)?;
        out.write_json("tetra.json", &sweep)?;
        let mut csv = Vec::new();
        write_tetra_csv(&sweep, &mut csv)?;
        out.write("tetra.csv", &csv)?;
    }
    if let Some(deltas) = &cfg.mu0_deltas {
        let shift = sliding_shift(n, 1, opts.spacing);
        let scan = mu0_delta_scan(&op, cfg.d, deltas, &shift, opts.m, &opts.eigen)?;
        if !scan.bounded {
            failures.push("mu0 exceeds the pocket bound".into());
        }
        out.write_json("mu0.json", &scan)?;
        let mut csv = Vec::new();
        write_mu0_csv(&scan, &mut csv)?;
        out.write("mu0.csv", &csv)?;
    }
    Ok(failures)
}
