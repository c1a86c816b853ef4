use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEDGER_VERSION: u32 = 1;

/// Names of the constants the scanners and the testbench read.
pub mod keys {
    /// Prefactor `c_n` in `γ = c_n f(μ̃₀) g(d)⁻¹ d²`.
    pub const GAMMA_PREFACTOR: &str = "gamma_prefactor";
    pub const CAP_UNIT_CUBE_2D: &str = "cap_unit_cube_2d";
    pub const CAP_UNIT_CUBE_3D: &str = "cap_unit_cube_3d";
    pub const POSITIVITY_TILDE_C: &str = "positivity_tilde_c";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub value: f64,
    /// Calibration run that produced the value.
    pub run_id: String,
    #[serde(default)]
    pub note: String,
}

/// Named empirical constants with provenance, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub version: u32,
    pub constants: BTreeMap<String, LedgerEntry>,
}

impl Default for ConstantsLedger {
    fn default() -> Self {
        let mut l = Self { version: LEDGER_VERSION, constants: BTreeMap::new() };
        l.set(
            keys::GAMMA_PREFACTOR,
            0.25,
            "default",
            "capacity fraction scale in gamma; must keep gamma below 1",
        );
        l.set(keys::POSITIVITY_TILDE_C, 1.0, "default", "tilde c_n of the large-cube positivity variant");
        l
    }
}

impl ConstantsLedger {
    pub fn set(&mut self, key: &str, value: f64, run_id: &str, note: &str) {
        self.constants
            .insert(key.to_string(), LedgerEntry { value, run_id: run_id.to_string(), note: note.to_string() });
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.constants.get(key).map(|e| e.value)
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::Validation(format!("ledger has no constant '{key}'")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let l: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if l.version != LEDGER_VERSION {
            return Err(Error::Format(format!("ledger version {} (expected {LEDGER_VERSION})", l.version)));
        }
        for (k, e) in &l.constants {
            if !e.value.is_finite() {
                return Err(Error::Format(format!("ledger constant '{k}' is not finite")));
            }
        }
        Ok(l)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read ledger {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)
            .map_err(|e| Error::Format(format!("cannot write ledger {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut l = ConstantsLedger::default();
        l.set("lemma_cap_upper_2d", 3.5, "calib-42", "sup ratio times margin");
        let back = ConstantsLedger::from_toml(&l.to_toml().unwrap()).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.get(keys::GAMMA_PREFACTOR), Some(0.25));
        assert!(back.require("missing").is_err());
    }

    #[test]
    fn version_checked() {
        let text = ConstantsLedger::default().to_toml().unwrap().replace("version = 1", "version = 9");
        assert!(ConstantsLedger::from_toml(&text).is_err());
    }
}
