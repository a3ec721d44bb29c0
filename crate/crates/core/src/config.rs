//! Run configuration: window sizes, tolerances, RNG seed and sector caps.
//!
//! Loaded from TOML or JSON (picked by file extension); missing fields fall
//! back to the defaults below. `CAR_LAB_CONFIG` names the file for the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const CONFIG_ENV: &str = "CAR_LAB_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact algebraic identities (matrix products, projections).
    pub algebraic: f64,
    /// Comparisons against quadrature or FFT oracles.
    pub quadrature: f64,
    /// Singular values below this count as zero in rank decisions.
    pub rank_zero: f64,
    /// Required lower edge of the "nonzero" singular value cluster.
    pub rank_gap: f64,
    /// Window-independence of exported scalars.
    pub window_stability: f64,
    /// Fock-space operator identities (commutators, phases).
    pub fock: f64,
    /// Unitarity of Fock-space exponentials.
    pub unitarity: f64,
    /// Spread allowed in the measured generating-functional exponent.
    pub kappa_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-12,
            quadrature: 1e-10,
            rank_zero: 1e-7,
            rank_gap: 1e-3,
            window_stability: 1e-8,
            fock: 1e-10,
            unitarity: 1e-9,
            kappa_spread: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub n_max: usize,
    /// Window used by Fock-space checks.
    pub fock_n_max: usize,
    pub seed: u64,
    /// Largest Fock sector the sparse engine will build.
    pub sector_cap: usize,
    /// Record wall-clock time in check records. Off by default so that
    /// reports are byte-identical across runs.
    pub timing: bool,
    pub tolerances: Tolerances,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            n_max: 8,
            fock_n_max: 6,
            seed: 0x5eed_c0de,
            sector_cap: 1 << 16,
            timing: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl LabConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Reads the file named by `CAR_LAB_CONFIG`, or returns defaults.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) => Self::from_path(Path::new(&p)),
            None => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        assert_eq!(LabConfig::from_toml_str("").unwrap(), LabConfig::default());
        assert_eq!(LabConfig::from_json_str("{}").unwrap(), LabConfig::default());
    }

    #[test]
    fn partial_override() {
        let cfg = LabConfig::from_toml_str("n_max = 12\n[tolerances]\nfock = 1e-9\n").unwrap();
        assert_eq!(cfg.n_max, 12);
        assert_eq!(cfg.tolerances.fock, 1e-9);
        assert_eq!(cfg.tolerances.algebraic, 1e-12);
    }

    #[test]
    fn malformed_config_rejected() {
        assert!(matches!(
            LabConfig::from_toml_str("n_max = \"eight\""),
            Err(LabError::Config(_))
        ));
        assert!(LabConfig::from_json_str("{\"bogus\": 1}").is_err());
    }
}
