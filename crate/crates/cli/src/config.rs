//! One TOML file per run. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<C: DeserializeOwned>(path: &Path) -> Result<(C, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, bytes))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub edge: f64,
}

/// Magnetic and scalar potentials plus an optional domain `{level > 0}`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// Components of `a`; omitted means `a ≡ 0`.
    pub a: Option<Vec<String>>,
    /// Constant field in the `x¹x²` plane, symmetric gauge; added to `a`.
    pub b: Option<f64>,
    pub v: Option<String>,
    /// Real nodal field in the binary grid format; cells take the mean of their corners.
    pub v_file: Option<PathBuf>,
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum SetSpec {
    Full,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Rle { path: PathBuf },
    /// Corner tetrahedron `{x ≥ lower, Σ(xᵏ − lowerᵏ) ≤ delta}`, by cell midpoints.
    Tetrahedron { delta: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    pub dim: usize,
    pub m: usize,
    pub cube: CubeSpec,
    pub set: SetSpec,
    /// Ambient box edge over `d` with the far-field closure (space only).
    pub ambient_factor: Option<f64>,
    pub tol: Option<f64>,
    /// Also write the equilibrium potential on the cube grid as CSV.
    #[serde(default)]
    pub minimizer_csv: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub dim: usize,
    pub m: usize,
    pub cube: CubeSpec,
    #[serde(default)]
    pub field: FieldSpec,
    pub boundary: Boundary,
    #[serde(default = "yes")]
    pub local_energy: bool,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    /// Write the minimizers in the binary grid format.
    #[serde(default)]
    pub eigenvectors: bool,
    pub threads: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MolchanovMethod {
    Greedy,
    Brute,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MolchanovConfig {
    pub dim: usize,
    pub m: usize,
    pub cube: CubeSpec,
    pub v: Option<String>,
    pub v_file: Option<PathBuf>,
    /// `Ω = {level > 0}`; the part of the cube outside is always removed.
    pub domain: Option<String>,
    pub gammas: Vec<f64>,
    pub method: MolchanovMethod,
    pub max_cells: Option<usize>,
    pub threads: Option<usize>,
}

/// Pair `(f, g)`: `f` is given directly in `t`, or as `min(0.99, f_n(t)·h(t))` through `h`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub f: Option<String>,
    pub h: Option<String>,
    /// Expression in `d`; default `d^2`.
    pub g: Option<String>,
    pub d0: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    Discreteness,
    Sufficient,
    Necessary,
    Positivity,
    Domain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivitySpec {
    pub variant: String,
    #[serde(default)]
    pub c: Option<f64>,
    pub d1: f64,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub d2: Option<f64>,
    #[serde(default)]
    pub c_tilde: Option<f64>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub box_radius: Option<f64>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub dim: usize,
    pub kind: ScanKind,
    #[serde(default)]
    pub sizes: Vec<f64>,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub pair: PairSpec,
    /// Second pair for the equivalence probe (discreteness only).
    pub second_pair: Option<PairSpec>,
    /// Fixed fraction for `kind = "sufficient"`.
    pub c: Option<f64>,
    pub radius: Option<f64>,
    pub m: Option<usize>,
    pub max_per_shell: Option<usize>,
    pub exact_cells: Option<usize>,
    pub spectra: Option<bool>,
    pub growth_factor: Option<f64>,
    pub tol: Option<f64>,
    pub positivity: Option<PositivitySpec>,
    pub ledger: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Calibrate,
    Validate,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub mode: VerifyMode,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub ledger: PathBuf,
    pub cases: Option<usize>,
    /// Also fit the two constants linking `λ` and `μ` (calibrate only).
    #[serde(default)]
    pub bridge: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub dim: usize,
    pub d: f64,
    /// `"logarithmic"` for `h(t) = 1 + log(1 + t)`, otherwise an expression in `t`.
    pub profile: String,
    pub m: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub shells: Option<usize>,
    pub spacing: Option<f64>,
    /// `ã` and `Ṽ` on the two half-spaces; defaults are the growing bottle and `|x|²`.
    pub a_tilde: Option<Vec<String>>,
    pub v_tilde: Option<String>,
    /// Tetrahedron capacity sweep.
    pub tetra_deltas: Option<Vec<f64>>,
    pub tetra_m: Option<usize>,
    /// `μ₀·δ²` sweep at the first sliding cube.
    pub mu0_deltas: Option<Vec<f64>>,
    pub ledger: Option<PathBuf>,
    pub threads: Option<usize>,
}
