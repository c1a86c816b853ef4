//! Discreteness and positivity criteria evaluated over cube tilings.
//!
//! Limits over distant cubes are replaced by shell-wise minima up to a finite
//! radius plus a trend statistic; every report says so.

mod domain;
mod ledger;
mod pair;
mod positivity;
mod scan;

pub use domain::{domain_geometry_check, DomainCubeRecord, DomainGeometryReport, DomainSizeScan};
pub use ledger::{keys, ConstantsLedger, LedgerEntry, LEDGER_VERSION};
pub use pair::{f_n, validate_pair, AdmissiblePair, PairValidation, PairViolation, PairViolationKind, SampleLattice};
pub use positivity::{
    positivity_check, CubeSample, PositivityCase, PositivityParams, PositivityReport, PositivityVariant,
    POSITIVITY_RTOL,
};
pub use scan::{
    check_necessary, check_sufficient, equivalence_probe, scan_discreteness, scan_with_rule, tiling,
    CriterionReport, CubeRecord, EquivalenceReport, GammaRule, NecessaryReport, ScanOptions, ScanProblem,
    ShellSummary, SizeScan, TileCube,
};
