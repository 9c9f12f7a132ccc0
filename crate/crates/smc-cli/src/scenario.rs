//! Scenario files: a TOML schema that resolves into a runnable
//! [`smc_core::sim::Scenario`] plus a list of requested analyses.
//!
//! Every optional field has a documented default; [`LoadedScenario`]
//! records which defaults were applied so commands can log them.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use smc_core::analysis::{Manifold, ManifoldKind};
use smc_core::control::{default_stall_tol, ControlConfig, ControlVariant};
use smc_core::density::{make_quadrimodal, GaussianComponent, GaussianMixture};
use smc_core::sim::{BoundaryPolicy, Scenario, SimConfig, World};
use smc_core::spectral::{ModeSet, QuadratureGrid, RectDomain, DEFAULT_QUADRATURE_POINTS};
use smc_core::Vec2;

pub const DEFAULT_U_MAX: f64 = 10.0;
pub const DEFAULT_EPSILON: f64 = 1.0e-3;
pub const DEFAULT_SIGMA: f64 = 1.0e-5;
pub const DEFAULT_K: f64 = 1.0e-3;
pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RECORD_STRIDE: u32 = 1;
pub const DEFAULT_MODES_PER_AXIS: u32 = 25;

/// Default spread of the quadrimodal density: 5% of the shorter side.
pub fn default_density_sigma(domain: &RectDomain) -> f64 {
    0.05 * domain.lx().min(domain.ly())
}

/// On-disk scenario schema. Optional fields fall back to the module
/// defaults when omitted; `resolve` reports every substitution.
///
/// Scalar keys come before the table-valued ones so the file serializes
/// to valid TOML in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Initial agent positions as `[x, y]` pairs.
    pub agents: Vec<[f64; 2]>,
    pub domain: DomainSpec,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub modes: ModesSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    pub control: ControlSpec,
    pub sim: SimSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub analyses: Vec<AnalysisSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
}

/// Target density. An empty component list selects the quadrimodal
/// default: four equal bumps at the quarter points with spread `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DensitySpec {
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub center: [f64; 2],
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSpec {
    pub kx: Option<u32>,
    pub ky: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub nx: Option<u32>,
    pub ny: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub variant: VariantSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    Classical,
    Regularized,
    Stochastic,
    StochasticContraction,
}

impl VariantSpec {
    pub fn label(self) -> &'static str {
        match self {
            VariantSpec::Classical => "classical",
            VariantSpec::Regularized => "regularized",
            VariantSpec::Stochastic => "stochastic",
            VariantSpec::StochasticContraction => "stochastic_contraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Reflect,
    Project,
    Free,
}

impl BoundarySpec {
    fn to_core(self) -> BoundaryPolicy {
        match self {
            BoundarySpec::Reflect => BoundaryPolicy::Reflect,
            BoundarySpec::Project => BoundaryPolicy::Project,
            BoundarySpec::Free => BoundaryPolicy::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldSpec {
    AxisX0,
    AxisY0,
    MidlineX,
    MidlineY,
    DiagonalMain,
    DiagonalAnti,
    Origin,
}

impl ManifoldSpec {
    pub fn label(self) -> &'static str {
        match self {
            ManifoldSpec::AxisX0 => "axis_x0",
            ManifoldSpec::AxisY0 => "axis_y0",
            ManifoldSpec::MidlineX => "midline_x",
            ManifoldSpec::MidlineY => "midline_y",
            ManifoldSpec::DiagonalMain => "diagonal_main",
            ManifoldSpec::DiagonalAnti => "diagonal_anti",
            ManifoldSpec::Origin => "origin",
        }
    }

    pub fn to_core(self) -> ManifoldKind {
        match self {
            ManifoldSpec::AxisX0 => ManifoldKind::AxisX0,
            ManifoldSpec::AxisY0 => ManifoldKind::AxisY0,
            ManifoldSpec::MidlineX => ManifoldKind::MidlineX,
            ManifoldSpec::MidlineY => ManifoldKind::MidlineY,
            ManifoldSpec::DiagonalMain => ManifoldKind::DiagonalMain,
            ManifoldSpec::DiagonalAnti => ManifoldKind::DiagonalAnti,
            ManifoldSpec::Origin => ManifoldKind::Origin,
        }
    }
}

/// A check requested by the scenario file, evaluated by `smc analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisSpec {
    /// The agent stays within `tol` of the manifold for the whole run.
    Confinement { manifold: ManifoldSpec, agent: usize, tol: f64 },
    /// Across `seeds` independent runs, the agent leaves the
    /// `delta`-neighborhood of the manifold at some recorded time.
    Escape { manifold: ManifoldSpec, agent: usize, delta: f64, seeds: u32 },
    /// Ensemble mean of `|x - center|^2` stays under the steady bound.
    /// `agent` restricts the check; default is every agent.
    MeanSquareBound {
        seeds: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slack: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent: Option<usize>,
    },
    /// Noise-free contracting run stays under the exponential envelope.
    DecayEnvelope { agent: usize },
    /// Stall detector outcome must equal `expect`.
    Stall { agent: usize, window: f64, tol: f64, expect: bool },
}

#[derive(Debug)]
pub enum ScenarioError {
    Io(std::io::Error),
    Parse(toml::de::Error),
    Invalid(String),
    Core(smc_core::Error),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io(e) => write!(f, "scenario io: {e}"),
            ScenarioError::Parse(e) => write!(f, "scenario parse: {e}"),
            ScenarioError::Invalid(msg) => write!(f, "scenario invalid: {msg}"),
            ScenarioError::Core(e) => write!(f, "scenario rejected: {e}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e)
    }
}

impl From<toml::de::Error> for ScenarioError {
    fn from(e: toml::de::Error) -> Self {
        ScenarioError::Parse(e)
    }
}

impl From<smc_core::Error> for ScenarioError {
    fn from(e: smc_core::Error) -> Self {
        ScenarioError::Core(e)
    }
}

/// A parsed scenario resolved against the defaults, ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub name: String,
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub analyses: Vec<AnalysisSpec>,
    /// One line per omitted optional field, e.g. `sim.dt = 0.1 (default)`.
    pub defaults_applied: Vec<String>,
}

impl LoadedScenario {
    pub fn domain(&self) -> RectDomain {
        self.scenario.world.domain()
    }

    pub fn agent_count(&self) -> usize {
        self.scenario.initial_positions.len()
    }

    pub fn manifold(&self, spec: ManifoldSpec) -> Result<Manifold, ScenarioError> {
        Ok(Manifold::new(spec.to_core(), self.domain())?)
    }
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ScenarioError> {
    let text = fs::read_to_string(path)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario(&text, &fallback)
}

pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<LoadedScenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    resolve(file, fallback_name)
}

/// Apply defaults, build the core scenario, and validate the analyses.
pub fn resolve(file: ScenarioFile, fallback_name: &str) -> Result<LoadedScenario, ScenarioError> {
    let mut notes = Vec::new();

    let domain = RectDomain::new(file.domain.lx, file.domain.ly)?;

    let nx = file.quadrature.nx.unwrap_or(DEFAULT_QUADRATURE_POINTS);
    let ny = file.quadrature.ny.unwrap_or(DEFAULT_QUADRATURE_POINTS);
    if file.quadrature.nx.is_none() {
        notes.push(format!("quadrature.nx = {nx} (default)"));
    }
    if file.quadrature.ny.is_none() {
        notes.push(format!("quadrature.ny = {ny} (default)"));
    }
    let grid = QuadratureGrid::new(nx, ny)?;

    let density = if file.density.components.is_empty() {
        let sigma = file.density.sigma.unwrap_or_else(|| default_density_sigma(&domain));
        if file.density.sigma.is_none() {
            notes.push(format!("density.sigma = {sigma} (default: 5% of the shorter side)"));
        }
        notes.push("density = quadrimodal quarter-point mixture (default)".to_string());
        make_quadrimodal(domain, sigma, grid)?
    } else {
        if file.density.sigma.is_some() {
            return Err(ScenarioError::Invalid(
                "density.sigma sets the default quadrimodal spread; explicit components carry their own sigma".to_string(),
            ));
        }
        let components = file
            .density
            .components
            .iter()
            .map(|c| GaussianComponent {
                weight: c.weight,
                center: Vec2::new(c.center[0], c.center[1]),
                sigma: c.sigma,
            })
            .collect();
        GaussianMixture::new(components, domain, grid)?
    };

    let kx = file.modes.kx.unwrap_or(DEFAULT_MODES_PER_AXIS);
    let ky = file.modes.ky.unwrap_or(DEFAULT_MODES_PER_AXIS);
    if file.modes.kx.is_none() {
        notes.push(format!("modes.kx = {kx} (default)"));
    }
    if file.modes.ky.is_none() {
        notes.push(format!("modes.ky = {ky} (default)"));
    }
    let modes = ModeSet::rectangular(kx, ky)?;

    let world = World::new(density, modes, grid)?;

    let control = resolve_control(&file.control, &mut notes)?;

    let dt = file.sim.dt.unwrap_or(DEFAULT_DT);
    if file.sim.dt.is_none() {
        notes.push(format!("sim.dt = {dt} (default)"));
    }
    let seed = file.sim.seed.unwrap_or(DEFAULT_SEED);
    if file.sim.seed.is_none() {
        notes.push(format!("sim.seed = {seed} (default)"));
    }
    let boundary = file.sim.boundary.unwrap_or(BoundarySpec::Reflect);
    if file.sim.boundary.is_none() {
        notes.push("sim.boundary = reflect (default)".to_string());
    }
    let record_stride = file.sim.record_stride.unwrap_or(DEFAULT_RECORD_STRIDE);
    if file.sim.record_stride.is_none() {
        notes.push(format!("sim.record_stride = {record_stride} (default)"));
    }
    let sim = SimConfig {
        dt,
        t_final: file.sim.t_final,
        seed,
        boundary: boundary.to_core(),
        record_stride,
    };

    let initial_positions: Vec<Vec2> =
        file.agents.iter().map(|&[x, y]| Vec2::new(x, y)).collect();

    let scenario = Scenario { world, control, sim, initial_positions };
    scenario.validate()?;

    let name = file.name.clone().unwrap_or_else(|| fallback_name.to_string());
    let loaded = LoadedScenario {
        name,
        analyses: file.analyses.clone(),
        file,
        scenario,
        defaults_applied: notes,
    };
    validate_analyses(&loaded)?;
    Ok(loaded)
}

fn resolve_control(
    spec: &ControlSpec,
    notes: &mut Vec<String>,
) -> Result<ControlConfig, ScenarioError> {
    let variant = spec.variant;
    let u_max = spec.u_max.unwrap_or(DEFAULT_U_MAX);
    if spec.u_max.is_none() {
        notes.push(format!("control.u_max = {u_max} (default)"));
    }

    let needs_epsilon = variant != VariantSpec::Classical;
    let epsilon = spec.epsilon.unwrap_or(DEFAULT_EPSILON);
    if needs_epsilon && spec.epsilon.is_none() {
        notes.push(format!("control.epsilon = {epsilon} (default)"));
    }
    if !needs_epsilon && spec.epsilon.is_some() {
        return Err(ScenarioError::Invalid(
            "control.epsilon has no effect on the classical variant".to_string(),
        ));
    }

    let is_stochastic =
        matches!(variant, VariantSpec::Stochastic | VariantSpec::StochasticContraction);
    let sigma = spec.sigma.unwrap_or(DEFAULT_SIGMA);
    if is_stochastic && spec.sigma.is_none() {
        notes.push(format!("control.sigma = {sigma} (default)"));
    }
    if !is_stochastic && spec.sigma.is_some() {
        return Err(ScenarioError::Invalid(
            "control.sigma applies to the stochastic variants only".to_string(),
        ));
    }

    let is_contracting = variant == VariantSpec::StochasticContraction;
    let k = spec.k.unwrap_or(DEFAULT_K);
    if is_contracting && spec.k.is_none() {
        notes.push(format!("control.k = {k} (default)"));
    }
    if !is_contracting && spec.k.is_some() {
        return Err(ScenarioError::Invalid(
            "control.k applies to the contracting variant only".to_string(),
        ));
    }
    let center = spec.center.map(|[x, y]| Vec2::new(x, y)).unwrap_or(Vec2::ZERO);
    if is_contracting && spec.center.is_none() {
        notes.push("control.center = [0, 0] (default)".to_string());
    }
    if !is_contracting && spec.center.is_some() {
        return Err(ScenarioError::Invalid(
            "control.center applies to the contracting variant only".to_string(),
        ));
    }

    let mut cfg = match variant {
        VariantSpec::Classical => ControlConfig::classical(u_max),
        VariantSpec::Regularized => ControlConfig::regularized(u_max, epsilon),
        VariantSpec::Stochastic => ControlConfig::stochastic(u_max, epsilon, sigma),
        VariantSpec::StochasticContraction => {
            ControlConfig::stochastic_contraction(u_max, epsilon, sigma, k)
        }
    };
    cfg.contraction_center = center;
    if let Some(tol) = spec.stall_tol {
        cfg.stall_tol = tol;
    } else {
        notes.push(format!(
            "control.stall_tol = {} (default: 1e-12 * u_max)",
            default_stall_tol(u_max)
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn validate_analyses(loaded: &LoadedScenario) -> Result<(), ScenarioError> {
    let n = loaded.agent_count();
    let variant = loaded.scenario.control.variant;
    let check_agent = |agent: usize, what: &str| -> Result<(), ScenarioError> {
        if agent >= n {
            return Err(ScenarioError::Invalid(format!(
                "{what} names agent {agent} but the scenario has {n}"
            )));
        }
        Ok(())
    };
    for spec in &loaded.analyses {
        match spec {
            AnalysisSpec::Confinement { manifold, agent, tol } => {
                check_agent(*agent, "confinement analysis")?;
                loaded.manifold(*manifold)?;
                if !(tol.is_finite() && *tol > 0.0) {
                    return Err(ScenarioError::Invalid(
                        "confinement tol must be finite and positive".to_string(),
                    ));
                }
            }
            AnalysisSpec::Escape { manifold, agent, delta, seeds } => {
                check_agent(*agent, "escape analysis")?;
                loaded.manifold(*manifold)?;
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(ScenarioError::Invalid(
                        "escape delta must be finite and positive".to_string(),
                    ));
                }
                if *seeds < 2 {
                    return Err(ScenarioError::Invalid(
                        "escape analysis needs at least 2 seeds".to_string(),
                    ));
                }
            }
            AnalysisSpec::MeanSquareBound { seeds, slack, agent } => {
                if variant != ControlVariant::StochasticContraction {
                    return Err(ScenarioError::Invalid(
                        "mean_square_bound analysis needs the stochastic_contraction variant"
                            .to_string(),
                    ));
                }
                if *seeds < 2 {
                    return Err(ScenarioError::Invalid(
                        "mean_square_bound analysis needs at least 2 seeds".to_string(),
                    ));
                }
                if let Some(s) = slack {
                    if !(s.is_finite() && *s >= 1.0) {
                        return Err(ScenarioError::Invalid(
                            "mean_square_bound slack must be finite and at least 1".to_string(),
                        ));
                    }
                }
                if let Some(a) = agent {
                    check_agent(*a, "mean_square_bound analysis")?;
                }
            }
            AnalysisSpec::DecayEnvelope { agent } => {
                check_agent(*agent, "decay_envelope analysis")?;
                if variant != ControlVariant::StochasticContraction
                    || loaded.scenario.control.noise_sigma() != 0.0
                {
                    return Err(ScenarioError::Invalid(
                        "decay_envelope analysis needs the noise-free contracting variant"
                            .to_string(),
                    ));
                }
            }
            AnalysisSpec::Stall { agent, window, tol, .. } => {
                check_agent(*agent, "stall analysis")?;
                if !(window.is_finite() && *window > 0.0) {
                    return Err(ScenarioError::Invalid(
                        "stall window must be finite and positive".to_string(),
                    ));
                }
                if !(tol.is_finite() && *tol > 0.0) {
                    return Err(ScenarioError::Invalid(
                        "stall tol must be finite and positive".to_string(),
                    ));
                }
            }
        }
    }
    Ok(())
}
