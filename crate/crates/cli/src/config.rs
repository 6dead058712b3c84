//! Configuration documents for each subcommand. Every field has a default;
//! thresholds default to the values the acceptance suite uses.

use std::path::Path;

use anyhow::{Context, Result};
use lightcone_core::harness::{Interval, LocalField, Perturbation, ScenarioConfig, DEFAULT_WITNESS_THRESHOLD};
use lightcone_core::kernels::{IdentityKind, KernelRole};
use lightcone_core::oracle::NormalizationConfig;
use lightcone_core::{Dispersion, LatticeSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Parse a TOML document, or JSON when the file ends in `.json`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn one() -> f64 {
    1.0
}

fn lattice_dispersion() -> Dispersion {
    Dispersion::Lattice
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub spacing: f64,
    pub mass: f64,
    #[serde(default = "lattice_dispersion")]
    pub dispersion: Dispersion,
}

impl Lattice {
    pub fn unit(n_sites: usize, mass: f64) -> Self {
        Self { n_sites, spacing: 1.0, mass, dispersion: Dispersion::Lattice }
    }

    pub fn spec(&self) -> lightcone_core::Result<LatticeSpec> {
        LatticeSpec::new(self.n_sites, self.spacing, self.mass, self.dispersion)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelsConfig {
    pub lattice: Lattice,
    /// Kernels to dump at every time.
    pub roles: Vec<KernelRole>,
    pub times: Vec<f64>,
    pub identities: Vec<IdentityKind>,
    pub dt: f64,
    pub identity_tolerance: f64,
    /// Second step for the convergence-order check of derivative identities.
    pub coarse_dt: f64,
    /// Required `log10(r(coarse_dt) / r(dt))`.
    pub min_dt_order: f64,
    pub profile: ProfileConfig,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::unit(64, 1.0),
            roles: vec![KernelRole::BigG, KernelRole::SmallG, KernelRole::GInv],
            times: vec![0.3, 0.7, 1.1],
            identities: IdentityKind::ALL.to_vec(),
            dt: 1e-4,
            identity_tolerance: 1e-6,
            coarse_dt: 1e-3,
            min_dt_order: 1.8,
            profile: ProfileConfig::default(),
        }
    }
}

/// Commutator light-cone profile `|g⁻¹(x; t)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub enabled: bool,
    pub lattice: Lattice,
    pub t: f64,
    pub margin: f64,
    /// Distances, as multiples of `t`, compared inside and outside the cone.
    pub inside: f64,
    pub outside: f64,
    pub ratio_tolerance: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lattice: Lattice::unit(1024, 1.0),
            t: 100.0,
            margin: 0.0,
            inside: 0.9,
            outside: 1.5,
            ratio_tolerance: 1e-6,
        }
    }
}

fn benchmark_kick() -> Perturbation {
    Perturbation::Displacement { dphi: LocalField::Uniform(1.0), dpi: LocalField::Uniform(0.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CausalityConfig {
    pub lattice: Lattice,
    pub region_a: Interval,
    pub time: f64,
    pub perturbation: Perturbation,
    pub margins: Vec<usize>,
    pub tolerance: f64,
    /// Smallest cone-edge deviation accepted for a nontrivial kick.
    pub min_cone_edge: f64,
    pub seed: u64,
    /// Also reconstruct the kick as a Gaussian unitary on `a`.
    pub check_kick: bool,
}

impl Default for CausalityConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::unit(128, 0.2),
            region_a: Interval { start: 60, len: 8 },
            time: 10.0,
            perturbation: benchmark_kick(),
            margins: vec![20, 30, 40],
            tolerance: 1e-8,
            min_cone_edge: 1e-2,
            seed: 0,
            check_kick: false,
        }
    }
}

impl CausalityConfig {
    pub fn scenario(&self, seed: Option<u64>) -> lightcone_core::Result<ScenarioConfig> {
        let mut sc = ScenarioConfig::new(self.lattice.spec()?, self.region_a, self.time, self.perturbation.clone());
        sc.margins = self.margins.clone();
        sc.tolerance = self.tolerance;
        sc.seed = seed.unwrap_or(self.seed);
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lattice: Lattice,
    pub region_a: Interval,
    pub times: Vec<f64>,
    pub perturbation: Perturbation,
    pub margins: Vec<usize>,
    pub tolerance: f64,
    pub seed: u64,
    /// Relative growth allowed between consecutive margins at fixed `t`.
    pub monotone_slack: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::unit(128, 0.2),
            region_a: Interval { start: 60, len: 8 },
            times: (0..=5).map(|k| 2.0 * k as f64).collect(),
            perturbation: benchmark_kick(),
            margins: vec![0, 10, 20, 30],
            tolerance: 1e-8,
            seed: 0,
            monotone_slack: 0.1,
        }
    }
}

impl SweepConfig {
    pub fn sweep(&self, seed: Option<u64>) -> lightcone_core::Result<lightcone_core::harness::SweepConfig> {
        let mut sc = ScenarioConfig::new(self.lattice.spec()?, self.region_a, 0.0, self.perturbation.clone());
        sc.margins = self.margins.clone();
        sc.tolerance = self.tolerance;
        sc.seed = seed.unwrap_or(self.seed);
        Ok(lightcone_core::harness::SweepConfig { scenario: sc, times: self.times.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatConfig {
    pub lattice: Lattice,
    pub region_a: Interval,
    pub dphi: LocalField,
    pub dpi: LocalField,
    pub witness_threshold: f64,
    pub oracle: CatOracleConfig,
}

impl Default for CatConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::unit(16, 1.0),
            region_a: Interval { start: 7, len: 1 },
            dphi: LocalField::Uniform(1.0),
            dpi: LocalField::Uniform(0.0),
            witness_threshold: DEFAULT_WITNESS_THRESHOLD,
            oracle: CatOracleConfig::default(),
        }
    }
}

/// Small-chain cross-check of the witness against exact diagonalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatOracleConfig {
    pub enabled: bool,
    pub lattice: Lattice,
    pub cutoff: usize,
    pub region_a: Interval,
    pub dphi: LocalField,
    pub dpi: LocalField,
    pub relative_tolerance: f64,
}

impl Default for CatOracleConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lattice: Lattice::unit(3, 1.0),
            cutoff: 8,
            region_a: Interval { start: 0, len: 1 },
            dphi: LocalField::Uniform(1.0),
            dpi: LocalField::Uniform(0.0),
            relative_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub moments: MomentsConfig,
    pub normalization: NormalizationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsConfig {
    pub enabled: bool,
    pub lattice: Lattice,
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub times: Vec<f64>,
    pub cutoffs: Vec<usize>,
    pub tolerance: f64,
    /// The tolerance applies to cutoffs at or above this one.
    pub tolerance_from_cutoff: usize,
    pub monotone_slack: f64,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lattice: Lattice::unit(3, 1.0),
            phi: vec![0.2, 0.0, -0.1],
            pi: vec![0.0, 0.15, 0.0],
            times: (0..=8).map(|k| 0.25 * k as f64).collect(),
            cutoffs: vec![6, 8, 10],
            tolerance: 1e-3,
            tolerance_from_cutoff: 8,
            monotone_slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationSection {
    pub enabled: bool,
    pub lattice: Lattice,
    pub grid: NormalizationConfig,
    pub modulus_tolerance: f64,
}

impl Default for NormalizationSection {
    fn default() -> Self {
        Self {
            enabled: true,
            lattice: Lattice::unit(1, 1.0),
            grid: NormalizationConfig::default(),
            modulus_tolerance: 1e-3,
        }
    }
}

fn default_unitary_tolerance() -> f64 {
    1e-10
}

/// Input of `factor-unitary`: two `M × N` amplitude matrices as rows of
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorInput {
    pub f1: lightcone_core::local_unitary::AmplitudeMatrix,
    pub f2: lightcone_core::local_unitary::AmplitudeMatrix,
    /// Gram-equality and rank threshold.
    #[serde(default = "default_unitary_tolerance")]
    pub tolerance: f64,
    /// Bound on both output residuals.
    #[serde(default = "default_unitary_tolerance")]
    pub residual_tolerance: f64,
}

pub fn load_factor_input(path: &Path) -> Result<FactorInput> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
