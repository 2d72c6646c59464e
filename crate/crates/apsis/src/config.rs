//! Experiment configuration files.

use std::path::{Path, PathBuf};

use apsis_core::continuation::ContinuationOptions;
use apsis_core::flow::IntegratorOptions;
use apsis_core::model::{Perturbation, PerturbationFamily, TabulatedPotential, TimeProfile};
use apsis_core::nondeg::NondegOptions;
use apsis_core::orbit::{ClosedOrbitOptions, Group, Search};
use apsis_core::{Dim, KineticLaw, Potential};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::RunError;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema every configuration file is checked against.
pub const CONFIG_SCHEMA: &str = include_str!("../schemas/config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub law: LawConfig,
    pub potential: PotentialConfig,
    pub orbit: OrbitConfig,
    /// Further configurations for `nondeg`; each inherits the fields it omits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub limit: LimitConfig,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Classical { m: f64 },
    Relativistic { m: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Homogeneous { kappa: f64, alpha: f64 },
    Kepler { kappa: f64 },
    LeviCivita { kappa: f64, lambda: f64 },
    /// CSV with columns `r, V, dV, d2V`; relative paths resolve against the config file.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    VaryL,
    VaryH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DimConfig {
    #[default]
    Planar,
    Spatial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub k: u32,
    pub n: u32,
    /// Energy; the seed of the search when `search` is `vary_h`.
    pub h: f64,
    /// Angular momentum; the seed of the search when `search` is `vary_l`.
    pub l: f64,
    #[serde(default)]
    pub search: SearchMode,
    #[serde(default)]
    pub dim: DimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    UniformElectric {
        direction: [f64; 3],
        #[serde(default)]
        profile: ProfileConfig,
    },
    UniformMagnetic {
        b0: [f64; 3],
    },
    RotatingFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileConfig {
    #[default]
    Constant,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub family: FamilyConfig,
    /// Target `ε`.
    pub eps: f64,
    /// Explicit increasing `ε` path ending at `eps`; the default path halves down from `eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    /// Defaults to the orbit period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing_period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProblemConfig {
    #[default]
    FixedPeriod,
    FixedEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupConfig {
    Planar,
    #[default]
    So3,
    O3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    pub rotations: usize,
    pub shifts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub problem: ProblemConfig,
    pub dim: DimConfig,
    pub group: GroupConfig,
    pub seeds: SampleCounts,
    /// Manifold grid used for distance certificates.
    pub grid: SampleCounts,
    pub polish: bool,
    pub proceed_if_degenerate: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            problem: ProblemConfig::FixedPeriod,
            dim: DimConfig::Spatial,
            group: GroupConfig::So3,
            seeds: SampleCounts { rotations: 8, shifts: 4 },
            grid: SampleCounts { rotations: 64, shifts: 8 },
            polish: true,
            proceed_if_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub fixed_period: bool,
    pub fixed_energy: bool,
    pub actions_route: bool,
    pub monodromy_route: bool,
    /// Also report the spatial monodromy kernels.
    pub spatial: bool,
    /// Manifold points at which the planar kernel is re-evaluated.
    pub extra_samples: usize,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            fixed_period: true,
            fixed_energy: true,
            actions_route: true,
            monodromy_route: true,
            spatial: true,
            extra_samples: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitConfig {
    pub c_values: Vec<f64>,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig { c_values: vec![5.0, 10.0, 20.0, 40.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Uniform time samples per trajectory CSV; the integrator's own steps when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_samples: Option<usize>,
}

/// Optional overrides of the numerical defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_integrator_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondeg_integrator_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuation_integrator_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_newton: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_damping: Option<f64>,
}

/// Every numerical setting in effect for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol_scale: f64,
    pub orbit_integrator_tol: f64,
    pub nondeg_integrator_tol: f64,
    pub continuation_integrator_tol: f64,
    pub max_steps: usize,
    pub collision_floor: f64,
    pub scan_points: usize,
    pub phi_tol: f64,
    pub rank_tol: f64,
    pub min_gap: f64,
    pub det_threshold: f64,
    pub fd_step: f64,
    pub eps_start: f64,
    pub max_newton: usize,
    pub residual_tol: f64,
    pub energy_tol: f64,
    pub initial_damping: f64,
    pub max_damping: f64,
}

impl Tolerances {
    /// Defaults, then overrides, then `tol_scale` applied to the accuracy targets.
    pub fn resolve(o: &ToleranceOverrides, tol_scale: f64) -> Result<Self, RunError> {
        if !(tol_scale.is_finite() && tol_scale > 0.0) {
            return Err(RunError::Validation("--tol-scale must be a positive number".into()));
        }
        let orbit = ClosedOrbitOptions::default();
        let nondeg = NondegOptions::default();
        let cont = ContinuationOptions::default();
        let integ = IntegratorOptions::default();
        let t = Tolerances {
            tol_scale,
            orbit_integrator_tol: tol_scale * o.orbit_integrator_tol.unwrap_or(orbit.integrator.tol),
            nondeg_integrator_tol: tol_scale * o.nondeg_integrator_tol.unwrap_or(nondeg.integrator.tol),
            continuation_integrator_tol: tol_scale * o.continuation_integrator_tol.unwrap_or(cont.integrator.tol),
            max_steps: o.max_steps.unwrap_or(integ.max_steps),
            collision_floor: o.collision_floor.unwrap_or(integ.collision_floor),
            scan_points: o.scan_points.unwrap_or(orbit.scan_points),
            phi_tol: tol_scale * o.phi_tol.unwrap_or(orbit.phi_tol),
            rank_tol: o.rank_tol.unwrap_or(nondeg.rank_tol),
            min_gap: o.min_gap.unwrap_or(nondeg.min_gap),
            det_threshold: o.det_threshold.unwrap_or(nondeg.det_threshold),
            fd_step: o.fd_step.unwrap_or(nondeg.fd_step),
            eps_start: o.eps_start.unwrap_or(cont.eps_start),
            max_newton: o.max_newton.unwrap_or(cont.max_newton),
            residual_tol: tol_scale * o.residual_tol.unwrap_or(cont.residual_tol),
            energy_tol: tol_scale * o.energy_tol.unwrap_or(cont.energy_tol),
            initial_damping: o.initial_damping.unwrap_or(cont.initial_damping),
            max_damping: o.max_damping.unwrap_or(cont.max_damping),
        };
        Ok(t)
    }

    fn integrator(&self, tol: f64) -> IntegratorOptions {
        IntegratorOptions {
            tol,
            max_steps: self.max_steps,
            collision_floor: self.collision_floor,
            ..IntegratorOptions::default()
        }
    }

    pub fn orbit_options(&self, search: SearchMode) -> ClosedOrbitOptions {
        ClosedOrbitOptions {
            search: match search {
                SearchMode::VaryL => Search::VaryL,
                SearchMode::VaryH => Search::VaryH,
            },
            scan_points: self.scan_points,
            phi_tol: self.phi_tol,
            integrator: self.integrator(self.orbit_integrator_tol),
        }
    }

    pub fn nondeg_options(&self) -> NondegOptions {
        NondegOptions {
            rank_tol: self.rank_tol,
            min_gap: self.min_gap,
            integrator: self.integrator(self.nondeg_integrator_tol),
            det_threshold: self.det_threshold,
            fd_step: self.fd_step,
        }
    }

    pub fn continuation_options(&self) -> ContinuationOptions {
        ContinuationOptions {
            eps_start: self.eps_start,
            max_newton: self.max_newton,
            residual_tol: self.residual_tol,
            energy_tol: self.energy_tol,
            initial_damping: self.initial_damping,
            max_damping: self.max_damping,
            integrator: self.integrator(self.continuation_integrator_tol),
        }
    }
}

impl LawConfig {
    pub fn build(&self) -> apsis_core::Result<KineticLaw> {
        match *self {
            LawConfig::Classical { m } => KineticLaw::classical(m),
            LawConfig::Relativistic { m, c } => KineticLaw::relativistic(m, c),
        }
    }
}

impl PotentialConfig {
    /// `base_dir` resolves relative table paths.
    pub fn build(&self, base_dir: &Path) -> Result<Potential, RunError> {
        Ok(match self {
            PotentialConfig::Homogeneous { kappa, alpha } => Potential::homogeneous(*kappa, *alpha)?,
            PotentialConfig::Kepler { kappa } => Potential::kepler(*kappa)?,
            PotentialConfig::LeviCivita { kappa, lambda } => Potential::levi_civita(*kappa, *lambda)?,
            PotentialConfig::Tabulated { path } => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                Potential::Tabulated(read_table(&full)?)
            }
        })
    }
}

impl DimConfig {
    pub fn dim(self) -> Dim {
        match self {
            DimConfig::Planar => Dim::Planar,
            DimConfig::Spatial => Dim::Spatial,
        }
    }
}

impl GroupConfig {
    pub fn group(self) -> Group {
        match self {
            GroupConfig::Planar => Group::Planar,
            GroupConfig::So3 => Group::SO3,
            GroupConfig::O3 => Group::O3,
        }
    }
}

impl FamilyConfig {
    pub fn family(&self) -> PerturbationFamily {
        match *self {
            FamilyConfig::UniformElectric { direction, profile } => PerturbationFamily::UniformElectric {
                direction,
                profile: match profile {
                    ProfileConfig::Constant => TimeProfile::Constant,
                    ProfileConfig::Cosine => TimeProfile::Cosine,
                },
            },
            FamilyConfig::UniformMagnetic { b0 } => PerturbationFamily::UniformMagnetic { b0 },
            FamilyConfig::RotatingFrame => PerturbationFamily::RotatingFrame,
        }
    }
}

impl PerturbationConfig {
    pub fn build(&self, orbit_period: f64) -> apsis_core::Result<Perturbation> {
        Perturbation::new(self.family.family(), self.eps, self.forcing_period.unwrap_or(orbit_period))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRow {
    r: f64,
    #[serde(rename = "V")]
    v: f64,
    #[serde(rename = "dV")]
    dv: f64,
    #[serde(rename = "d2V")]
    d2v: f64,
}

/// Reads a potential table with header `r,V,dV,d2V`.
pub fn read_table(path: &Path) -> Result<TabulatedPotential, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| RunError::Validation(format!("cannot read potential table {}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| RunError::Validation(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["r", "V", "dV", "d2V"] {
        return Err(RunError::Validation(format!(
            "potential table {} must have the header r,V,dV,d2V",
            path.display()
        )));
    }
    let (mut r, mut v, mut dv, mut d2v) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for row in reader.deserialize::<TableRow>() {
        let row = row.map_err(|e| RunError::Validation(format!("potential table {}: {e}", path.display())))?;
        r.push(row.r);
        v.push(row.v);
        dv.push(row.dv);
        d2v.push(row.d2v);
    }
    Ok(TabulatedPotential::new(r, v, dv, d2v)?)
}

/// Checks `value` against the config schema, listing every violation.
pub fn validate_value(value: &Value) -> Result<(), RunError> {
    let schema: Value = serde_json::from_str(CONFIG_SCHEMA).expect("embedded schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("embedded schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| {
            let at = e.instance_path().to_string();
            if at.is_empty() {
                e.to_string()
            } else {
                format!("{at}: {e}")
            }
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(RunError::Validation(format!("configuration does not match the schema:\n  {}", errors.join("\n  "))))
    }
}

impl ExperimentConfig {
    pub fn from_value(value: Value) -> Result<Self, RunError> {
        validate_value(&value)?;
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| RunError::Validation(format!("invalid configuration: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(RunError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, RunError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| RunError::Validation(format!("configuration is not valid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Configurations covered by `nondeg`: the sweep when present, else the top level.
    pub fn configurations(&self) -> Vec<(String, LawConfig, PotentialConfig, OrbitConfig)> {
        if self.sweep.is_empty() {
            return vec![("base".into(), self.law, self.potential.clone(), self.orbit)];
        }
        self.sweep
            .iter()
            .enumerate()
            .map(|(i, s)| {
                (
                    s.label.clone().unwrap_or_else(|| format!("sweep-{i}")),
                    s.law.unwrap_or(self.law),
                    s.potential.clone().unwrap_or_else(|| self.potential.clone()),
                    s.orbit.unwrap_or(self.orbit),
                )
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}
