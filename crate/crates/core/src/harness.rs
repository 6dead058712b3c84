//! Perturb a region, evolve, and compare reduced descriptors outside the
//! future light cone.
//!
//! Geometry: `b` is `a` dilated by `⌈t/a⌉` sites, `B` its complement. A
//! margin `m` shrinks `B` to the complement of `a` dilated by `⌈t/a⌉ + m`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianState};
use crate::lattice::LatticeSpec;
use crate::region::Region;
use crate::superposition::{self, Branch, CoherentSuperposition};
use crate::symplectic;
use crate::ARTIFACT_VERSION;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Cone-edge deviation must exceed the out-of-cone maximum by this factor.
pub const RESPONSIVENESS_RATIO: f64 = 1e3;
/// Allowed change of the complement descriptors when the kick is applied.
pub const PRECONDITION_TOLERANCE: f64 = 1e-12;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_WITNESS_THRESHOLD: f64 = 1e-3;

/// Contiguous run of sites `start, start+1, …` (periodic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub start: usize,
    pub len: usize,
}

impl Interval {
    pub fn region(&self, n_sites: usize) -> Result<Region> {
        if self.len == 0 {
            return Err(Error::EmptyRegion);
        }
        if self.start >= n_sites {
            return Err(Error::InvalidRegion(format!("start {} outside [0, {n_sites})", self.start)));
        }
        Region::interval(n_sites, self.start, self.len)
    }

    /// `len` sites centred on the lattice.
    pub fn centered(n_sites: usize, len: usize) -> Self {
        Self { start: (n_sites - len.min(n_sites)) / 2, len }
    }
}

/// Per-site values on region `a`: one number for every site or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocalField {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl Default for LocalField {
    fn default() -> Self {
        LocalField::Uniform(0.0)
    }
}

impl LocalField {
    /// Full-lattice vector, zero outside `region`.
    pub fn expand(&self, region: &Region) -> Result<Vec<f64>> {
        let mut out = vec![0.0; region.n_sites()];
        match self {
            LocalField::Uniform(v) => region.sites().iter().for_each(|&x| out[x] = *v),
            LocalField::PerSite(vals) => {
                if vals.len() != region.len() {
                    return Err(Error::LengthMismatch { expected: region.len(), got: vals.len() });
                }
                for (&x, v) in region.sites().iter().zip(vals) {
                    out[x] = *v;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    None,
    Displacement {
        #[serde(default)]
        dphi: LocalField,
        #[serde(default)]
        dpi: LocalField,
    },
    /// Acts on `(φ_a, π_a)`; rows of a `2|a|` square matrix.
    LocalSymplectic { matrix: Vec<Vec<f64>> },
    /// Single-mode squeeze `φ → e^r φ`, `π → e^{-r} π` on every site of `a`.
    Squeeze { r: f64 },
    /// Seeded random symplectic plus random displacement on `a`.
    Random {
        #[serde(default = "default_max_squeeze")]
        max_squeeze: f64,
        #[serde(default = "default_random_displacement")]
        displacement: f64,
    },
    /// Equal-weight superposition of `±(dphi, dpi)` on `a`.
    CatPair {
        #[serde(default)]
        dphi: LocalField,
        #[serde(default)]
        dpi: LocalField,
    },
}

fn default_max_squeeze() -> f64 {
    0.5
}

fn default_random_displacement() -> f64 {
    1.0
}

fn default_margins() -> Vec<usize> {
    vec![0, 5, 10, 20]
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_witness_threshold() -> f64 {
    DEFAULT_WITNESS_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub spec: LatticeSpec,
    pub region_a: Interval,
    pub time: f64,
    pub perturbation: Perturbation,
    #[serde(default = "default_margins")]
    pub margins: Vec<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the vacuum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_state: Option<GaussianState>,
    #[serde(default = "default_witness_threshold")]
    pub witness_threshold: f64,
}

impl ScenarioConfig {
    pub fn new(spec: LatticeSpec, region_a: Interval, time: f64, perturbation: Perturbation) -> Self {
        Self {
            spec,
            region_a,
            time,
            perturbation,
            margins: default_margins(),
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            base_state: None,
            witness_threshold: DEFAULT_WITNESS_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.region_a.region(self.spec.n_sites)?;
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(Error::Precondition(format!("time must be finite and non-negative, got {}", self.time)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Precondition("tolerance must be positive".into()));
        }
        if self.margins.is_empty() {
            return Err(Error::Precondition("at least one margin is required".into()));
        }
        if let Some(base) = &self.base_state {
            if base.spec != self.spec {
                return Err(Error::Precondition("base state lives on a different lattice".into()));
            }
        }
        Ok(())
    }

    fn region(&self) -> Result<Region> {
        self.region_a.region(self.spec.n_sites)
    }

    fn base(&self) -> Result<GaussianState> {
        match &self.base_state {
            Some(s) => Ok(s.clone()),
            None => gaussian::vacuum(&self.spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Sites added on each side of `a`.
    pub dilation: usize,
    pub region_b: Region,
    pub region_big_b: Region,
}

fn dilation_for(t: f64, spacing: f64) -> usize {
    // guard against t/a landing a hair above an integer
    let steps = t / spacing;
    let rounded = steps.round();
    if (steps - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        steps.ceil() as usize
    }
}

fn check_wrap(region_a: &Region, radius: usize) -> Result<()> {
    let n = region_a.n_sites();
    if region_a.len() + 2 * radius >= n {
        return Err(Error::PeriodicWrap(format!(
            "{} sites dilated by {radius} on each side do not fit in {n} with a nonempty outside",
            region_a.len()
        )));
    }
    Ok(())
}

/// `b = a` dilated by `⌈t/spacing⌉` sites, `B` its complement.
pub fn region_geometry(region_a: &Region, t: f64, spec: &LatticeSpec) -> Result<Geometry> {
    if region_a.n_sites() != spec.n_sites {
        return Err(Error::InvalidRegion("region and lattice sizes differ".into()));
    }
    if region_a.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !region_a.is_contiguous() {
        return Err(Error::InvalidRegion("region a must be a contiguous interval".into()));
    }
    let dilation = dilation_for(t, spec.spacing);
    check_wrap(region_a, dilation)?;
    let region_b = region_a.dilate(dilation);
    let region_big_b = region_b.complement();
    Ok(Geometry { dilation, region_b, region_big_b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub config_hash: String,
    pub artifact_version: String,
    pub seed: u64,
    pub timestamps: Timestamps,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// SHA-256 of the compact JSON form, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn start<T: Serialize>(config: &T, seed: u64) -> Self {
        let stamp = now();
        Self {
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            config_hash: config_hash(config),
            artifact_version: ARTIFACT_VERSION.to_string(),
            seed,
            timestamps: Timestamps { started: stamp.clone(), finished: stamp },
        }
    }

    pub fn finish(mut self) -> Self {
        self.timestamps.finished = now();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDeviation {
    pub site: usize,
    /// Periodic distance to `a`.
    pub distance: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginDeviation {
    pub margin: usize,
    pub sites_in_b: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub scenario: String,
    pub time: f64,
    pub geometry: Geometry,
    pub profile: Vec<SiteDeviation>,
    pub margins: Vec<MarginDeviation>,
    /// Largest single-site deviation on the two outermost layers of `b`.
    pub cone_edge_deviation: f64,
    /// Farthest distance from `a` at which a single-site deviation exceeds
    /// the tolerance.
    pub light_cone_edge: Option<usize>,
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// Cone edge beats the out-of-cone maximum by [`RESPONSIVENESS_RATIO`].
    pub responsive: bool,
    pub pass: bool,
    pub manifest: RunManifest,
}

impl CausalityReport {
    pub fn max_out_of_cone(&self) -> f64 {
        self.margins.iter().map(|m| m.max_deviation).fold(0.0, f64::max)
    }
}

/// Apply a non-cat perturbation to `state` on `region`.
pub fn perturb(state: &GaussianState, region: &Region, p: &Perturbation, seed: u64) -> Result<GaussianState> {
    let r = region.len();
    match p {
        Perturbation::None => Ok(state.clone()),
        Perturbation::Displacement { dphi, dpi } => {
            gaussian::apply_local_displacement(state, region, &dphi.expand(region)?, &dpi.expand(region)?)
        }
        Perturbation::LocalSymplectic { matrix } => {
            let m = crate::io::matrix_from_rows(matrix).map_err(Error::ShapeMismatch)?;
            gaussian::apply_local_symplectic(state, region, &m)
        }
        Perturbation::Squeeze { r: sq } => gaussian::apply_local_symplectic(state, region, &symplectic::squeeze(r, *sq)),
        Perturbation::Random { max_squeeze, displacement } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = symplectic::random_symplectic(r, *max_squeeze, &mut rng);
            let mut dphi = vec![0.0; region.n_sites()];
            let mut dpi = vec![0.0; region.n_sites()];
            for &x in region.sites() {
                dphi[x] = rng.gen_range(-*displacement..=*displacement);
                dpi[x] = rng.gen_range(-*displacement..=*displacement);
            }
            let moved = gaussian::apply_local_symplectic(state, region, &t)?;
            gaussian::apply_local_displacement(&moved, region, &dphi, &dpi)
        }
        Perturbation::CatPair { .. } => {
            Err(Error::Precondition("cat_pair is not a Gaussian perturbation; use the cat scenario".into()))
        }
    }
}

/// Per-site descriptor deviation between two evolved states.
fn site_profile(s1: &GaussianState, s2: &GaussianState, region_a: &Region) -> Result<Vec<SiteDeviation>> {
    let n = s1.n_sites();
    (0..n)
        .map(|x| {
            let site = Region::new(n, [x])?;
            let deviation = gaussian::descriptor_distance(&gaussian::restrict(s1, &site)?, &gaussian::restrict(s2, &site)?)?;
            Ok(SiteDeviation { site: x, distance: region_a.distance_to(x).unwrap_or(0), deviation })
        })
        .collect()
}

struct Evolved {
    geometry: Geometry,
    reference: GaussianState,
    perturbed: GaussianState,
}

fn evolve_pair(config: &ScenarioConfig, t: f64) -> Result<Evolved> {
    config.validate()?;
    let region_a = config.region()?;
    let geometry = region_geometry(&region_a, t, &config.spec)?;
    let max_margin = config.margins.iter().copied().max().unwrap_or(0);
    check_wrap(&region_a, geometry.dilation + max_margin)?;

    let base = config.base()?;
    let kicked = perturb(&base, &region_a, &config.perturbation, config.seed)?;
    let outside = region_a.complement();
    if !outside.is_empty() {
        let before =
            gaussian::descriptor_distance(&gaussian::restrict(&base, &outside)?, &gaussian::restrict(&kicked, &outside)?)?;
        if !(before <= PRECONDITION_TOLERANCE) {
            return Err(Error::Precondition(format!(
                "perturbation changes the complement of a by {before:e} at t = 0"
            )));
        }
    }
    if t == 0.0 {
        return Ok(Evolved { geometry, reference: base, perturbed: kicked });
    }
    let prop = gaussian::propagator(&config.spec, t)?;
    Ok(Evolved {
        geometry,
        reference: gaussian::apply_propagator(&base, &prop),
        perturbed: gaussian::apply_propagator(&kicked, &prop),
    })
}

struct CellResult {
    margins: Vec<MarginDeviation>,
    cone_edge: f64,
}

fn measure(ev: &Evolved, region_a: &Region, margins: &[usize]) -> Result<(CellResult, Vec<SiteDeviation>)> {
    let profile = site_profile(&ev.reference, &ev.perturbed, region_a)?;
    let dil = ev.geometry.dilation;
    let cone_edge = profile
        .iter()
        .filter(|s| s.distance + 1 >= dil && s.distance <= dil)
        .map(|s| s.deviation)
        .fold(0.0, f64::max);
    let mut sorted = margins.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let margins = sorted
        .iter()
        .map(|&m| {
            let big_b = region_a.dilate(dil + m).complement();
            let max_deviation = gaussian::descriptor_distance(
                &gaussian::restrict(&ev.reference, &big_b)?,
                &gaussian::restrict(&ev.perturbed, &big_b)?,
            )?;
            Ok(MarginDeviation { margin: m, sites_in_b: big_b.len(), max_deviation })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((CellResult { margins, cone_edge }, profile))
}

fn report(config: &ScenarioConfig, scenario: &str) -> Result<CausalityReport> {
    let manifest = RunManifest::start(config, config.seed);
    let region_a = config.region()?;
    let ev = evolve_pair(config, config.time)?;
    let (cell, profile) = measure(&ev, &region_a, &config.margins)?;
    let max_b = cell.margins.iter().map(|m| m.max_deviation).fold(0.0, f64::max);
    let within_tolerance = cell.margins.iter().all(|m| m.max_deviation <= config.tolerance);
    let responsive = cell.cone_edge > 0.0 && cell.cone_edge >= RESPONSIVENESS_RATIO * max_b;
    let unperturbed = cell.cone_edge == 0.0 && max_b == 0.0;
    let light_cone_edge = profile.iter().filter(|s| s.deviation > config.tolerance).map(|s| s.distance).max();
    Ok(CausalityReport {
        scenario: scenario.to_string(),
        time: config.time,
        geometry: ev.geometry,
        profile,
        margins: cell.margins,
        cone_edge_deviation: cell.cone_edge,
        light_cone_edge,
        tolerance: config.tolerance,
        within_tolerance,
        responsive,
        pass: within_tolerance && (responsive || unperturbed),
        manifest: manifest.finish(),
    })
}

/// Kick `a`, evolve both states by `t`, and compare descriptors on `B` at
/// every margin.
pub fn run_causality_check(config: &ScenarioConfig) -> Result<CausalityReport> {
    report(config, "causality")
}

/// An excitation in `a` on top of the vacuum stays invisible outside the
/// light cone.
pub fn confinement_demo(config: &ScenarioConfig) -> Result<CausalityReport> {
    if config.base_state.is_some() {
        return Err(Error::Precondition("confinement is measured against the vacuum".into()));
    }
    if matches!(config.perturbation, Perturbation::CatPair { .. }) {
        return Err(Error::Precondition("confinement needs a Gaussian excitation".into()));
    }
    report(config, "confinement")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickReport {
    pub complement_distance: f64,
    pub symplectic_residual: f64,
    pub reconstruction_residual: f64,
    pub operation: gaussian::LocalGaussianUnitary,
    pub pass: bool,
    pub manifest: RunManifest,
}

/// Recover the kick as a Gaussian unitary on `a` and reapply it.
pub fn kick_equivalence_check(config: &ScenarioConfig) -> Result<KickReport> {
    config.validate()?;
    let manifest = RunManifest::start(config, config.seed);
    let region_a = config.region()?;
    let base = config.base()?;
    let kicked = perturb(&base, &region_a, &config.perturbation, config.seed)?;
    let outside = region_a.complement();
    let complement_distance = if outside.is_empty() {
        0.0
    } else {
        gaussian::descriptor_distance(&gaussian::restrict(&base, &outside)?, &gaussian::restrict(&kicked, &outside)?)?
    };
    let operation = gaussian::find_local_gaussian_unitary(&base, &kicked, &region_a, RECONSTRUCTION_TOLERANCE)?;
    let rebuilt = operation.apply(&base)?;
    let full = Region::full(config.spec.n_sites);
    let reconstruction_residual =
        gaussian::descriptor_distance(&gaussian::restrict(&rebuilt, &full)?, &gaussian::restrict(&kicked, &full)?)?;
    let symplectic_residual = symplectic::symplectic_residual(&operation.symplectic);
    Ok(KickReport {
        complement_distance,
        symplectic_residual,
        reconstruction_residual,
        pass: reconstruction_residual <= RECONSTRUCTION_TOLERANCE,
        operation,
        manifest: manifest.finish(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub margin: usize,
    #[serde(rename = "max_B_deviation")]
    pub max_b_deviation: f64,
    pub cone_edge_deviation: f64,
}

pub const SWEEP_HEADER: &str = "t,margin,max_B_deviation,cone_edge_deviation";

/// Every `(t, margin)` cell, ordered by `t` then margin regardless of the
/// order in which cells finish.
pub fn lightcone_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.times.is_empty() {
        return Err(Error::Precondition("sweep needs at least one time".into()));
    }
    config.scenario.validate()?;
    let region_a = config.scenario.region()?;
    let mut times = config.times.clone();
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Precondition("sweep times must be finite and non-negative".into()));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let cells: Vec<Result<Vec<SweepRow>>> = times
        .par_iter()
        .map(|&t| {
            let ev = evolve_pair(&config.scenario, t)?;
            let (cell, _) = measure(&ev, &region_a, &config.scenario.margins)?;
            Ok(cell
                .margins
                .iter()
                .map(|m| SweepRow { t, margin: m.margin, max_b_deviation: m.max_deviation, cone_edge_deviation: cell.cone_edge })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for c in cells {
        rows.extend(c?);
    }
    Ok(rows)
}

/// CSV text with a header line; floats use the shortest exact form.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:?},{},{:?},{:?}\n", r.t, r.margin, r.max_b_deviation, r.cone_edge_deviation));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatReport {
    /// Region where the witness is evaluated: the complement of `a`.
    pub region: Region,
    pub branch_witnesses: Vec<f64>,
    pub superposition_witness: f64,
    pub branch_tolerance: f64,
    pub threshold: f64,
    pub pass: bool,
    pub manifest: RunManifest,
}

fn cat_branches(config: &ScenarioConfig) -> Result<(CoherentSuperposition, Region)> {
    config.validate()?;
    if config.base_state.is_some() {
        return Err(Error::Precondition("cat branches are displaced vacua".into()));
    }
    let (dphi, dpi) = match &config.perturbation {
        Perturbation::CatPair { dphi, dpi } => (dphi, dpi),
        _ => return Err(Error::Precondition("cat scenario needs a cat_pair perturbation".into())),
    };
    let region_a = config.region()?;
    let phi = dphi.expand(&region_a)?;
    let pi = dpi.expand(&region_a)?;
    Ok((CoherentSuperposition::cat(config.spec, phi, pi)?, region_a))
}

/// Each branch alone looks like the vacuum outside `a`; their equal-weight
/// superposition does not.
pub fn cat_scenario(config: &ScenarioConfig) -> Result<CatReport> {
    let manifest = RunManifest::start(config, config.seed);
    let (sup, region_a) = cat_branches(config)?;
    let region = region_a.complement();
    let branch_witnesses = sup
        .branches()
        .iter()
        .map(|b| {
            let single = CoherentSuperposition::new(config.spec, vec![Branch::new(1.0.into(), b.phi_class.clone(), b.pi_class.clone())])?;
            superposition::vacuum_witness(&single, &region)
        })
        .collect::<Result<Vec<_>>>()?;
    let superposition_witness = superposition::vacuum_witness(&sup, &region)?;
    let branch_tolerance = superposition::BRANCH_EQUIVALENCE_TOLERANCE;
    let pass = branch_witnesses.iter().all(|w| *w <= branch_tolerance) && superposition_witness >= config.witness_threshold;
    Ok(CatReport {
        region,
        branch_witnesses,
        superposition_witness,
        branch_tolerance,
        threshold: config.witness_threshold,
        pass,
        manifest: manifest.finish(),
    })
}

/// Witness on the single site at distance `d` from `a`, for `d = 1..=max_distance`
/// (the side after the end of `a`).
pub fn cat_witness_profile(config: &ScenarioConfig, max_distance: usize) -> Result<Vec<(usize, f64)>> {
    let (sup, region_a) = cat_branches(config)?;
    let n = config.spec.n_sites;
    if region_a.len() + max_distance > n {
        return Err(Error::PeriodicWrap("witness probe runs around the lattice".into()));
    }
    let last = (config.region_a.start + config.region_a.len - 1) % n;
    (1..=max_distance)
        .map(|d| {
            let probe = Region::new(n, [(last + d) % n])?;
            Ok((d, superposition::vacuum_witness(&sup, &probe)?))
        })
        .collect()
}

/// Convenience: a `2|a|` random symplectic matrix as rows, for configs.
pub fn random_local_symplectic_rows(region_len: usize, max_squeeze: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: DMatrix<f64> = symplectic::random_symplectic(region_len, max_squeeze, &mut rng);
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn displacement(v: f64) -> Perturbation {
        Perturbation::Displacement { dphi: LocalField::Uniform(v), dpi: LocalField::Uniform(0.0) }
    }

    #[test]
    fn geometry_examples() {
        let spec = LatticeSpec::unit(128, 1.0).unwrap();
        let a = Region::new(128, 30..=33).unwrap();
        let g = region_geometry(&a, 5.0, &spec).unwrap();
        assert_eq!(g.dilation, 5);
        assert_eq!(g.region_b, Region::new(128, 25..=38).unwrap());
        assert_eq!(g.region_big_b, g.region_b.complement());
        let g0 = region_geometry(&a, 0.0, &spec).unwrap();
        assert_eq!(g0.region_b, a);
        assert_eq!(g0.region_big_b, a.complement());
        assert!(matches!(region_geometry(&a, 70.0, &spec), Err(Error::PeriodicWrap(_))));
        let split = Region::new(128, [1, 5]).unwrap();
        assert!(region_geometry(&split, 1.0, &spec).is_err());
    }

    #[test]
    fn dilation_rounds_up() {
        assert_eq!(dilation_for(4.2, 1.0), 5);
        assert_eq!(dilation_for(3.0, 0.5), 6);
        assert_eq!(dilation_for(0.3 * 3.0, 0.3), 3);
    }

    #[test]
    fn zero_perturbation_gives_zero() {
        let spec = LatticeSpec::unit(48, 0.5).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(48, 4), 3.0, Perturbation::None);
        cfg.margins = vec![0, 10];
        let r = run_causality_check(&cfg).unwrap();
        assert!(r.margins.iter().all(|m| m.max_deviation == 0.0));
        assert!(r.pass);
        assert!(!r.responsive);
    }

    #[test]
    fn displacement_kick_stays_inside() {
        let spec = LatticeSpec::unit(64, 0.5).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(64, 4), 6.0, displacement(1.0));
        cfg.margins = vec![0, 4, 12];
        let r = run_causality_check(&cfg).unwrap();
        assert!(r.cone_edge_deviation > 1e-2);
        let d: Vec<f64> = r.margins.iter().map(|m| m.max_deviation).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        // the lattice tail just outside the cone is far above tolerance
        assert!(!r.pass && d[0] > 1e-3);
        cfg.margins = vec![12, 14];
        let r = run_causality_check(&cfg).unwrap();
        assert!(r.pass && r.responsive, "{:?}", r.margins);
    }

    #[test]
    fn precondition_rejects_leaky_base() {
        let spec = LatticeSpec::unit(32, 1.0).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(32, 4), 2.0, Perturbation::CatPair {
            dphi: LocalField::Uniform(1.0),
            dpi: LocalField::default(),
        });
        cfg.margins = vec![2];
        assert!(matches!(run_causality_check(&cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn wrapping_margin_is_rejected() {
        let spec = LatticeSpec::unit(32, 1.0).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(32, 4), 5.0, displacement(1.0));
        cfg.margins = vec![20];
        assert!(matches!(run_causality_check(&cfg), Err(Error::PeriodicWrap(_))));
    }

    #[test]
    fn kick_is_a_local_unitary() {
        let spec = LatticeSpec::unit(24, 1.0).unwrap();
        for p in [
            Perturbation::None,
            displacement(0.7),
            Perturbation::Squeeze { r: 0.4 },
            Perturbation::Random { max_squeeze: 0.5, displacement: 1.0 },
        ] {
            let cfg = ScenarioConfig::new(spec, Interval::centered(24, 3), 1.0, p);
            let r = kick_equivalence_check(&cfg).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.complement_distance <= 1e-12);
        }
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let spec = LatticeSpec::unit(64, 0.5).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(64, 4), 0.0, Perturbation::Random {
            max_squeeze: 0.3,
            displacement: 1.0,
        });
        cfg.margins = vec![6, 0, 3];
        cfg.seed = 9;
        let sweep = SweepConfig { scenario: cfg, times: vec![4.0, 0.0, 2.0] };
        let rows = lightcone_sweep(&sweep).unwrap();
        let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.t, r.margin)).collect();
        assert_eq!(keys[..4], [(0.0, 0), (0.0, 3), (0.0, 6), (2.0, 0)]);
        assert!(rows.iter().filter(|r| r.t == 0.0).all(|r| r.max_b_deviation == 0.0));
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("t,margin,max_B_deviation,cone_edge_deviation\n"));
        assert_eq!(csv, sweep_csv(&lightcone_sweep(&sweep).unwrap()));
    }

    #[test]
    fn cat_scenario_examples() {
        let spec = LatticeSpec::unit(16, 1.0).unwrap();
        let cat = Perturbation::CatPair { dphi: LocalField::Uniform(1.0), dpi: LocalField::default() };
        let cfg = ScenarioConfig::new(spec, Interval { start: 7, len: 1 }, 0.0, cat);
        let r = cat_scenario(&cfg).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.superposition_witness > 1e-3);
        let profile = cat_witness_profile(&cfg, 6).unwrap();
        assert!(profile.windows(2).all(|w| w[1].1 < w[0].1));
        let wrong = ScenarioConfig::new(spec, Interval { start: 7, len: 1 }, 0.0, displacement(1.0));
        assert!(cat_scenario(&wrong).is_err());
    }

    #[test]
    fn config_round_trip_and_hash() {
        let spec = LatticeSpec::unit(16, 1.0).unwrap();
        let cfg = ScenarioConfig::new(spec, Interval { start: 2, len: 3 }, 1.5, Perturbation::Displacement {
            dphi: LocalField::PerSite(vec![1.0, 0.0, -1.0]),
            dpi: LocalField::Uniform(0.2),
        });
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(config_hash(&cfg), config_hash(&back));
        assert_eq!(config_hash(&cfg).len(), 64);
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(config_hash(&cfg), config_hash(&other));
        let bad = text.replace("\"kind\":\"displacement\"", "\"kind\":\"displacement\",\"extra\":1");
        assert!(serde_json::from_str::<ScenarioConfig>(&bad).is_err());
    }
}
