//! Run configuration: one JSON document per run, checked against a typed
//! schema per command. Unknown keys are rejected with their path.

use qcrit_core::gaussian::WilliamsonParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted key path, e.g. `g_grid` or `random.count`; empty for the root.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// A 1-D grid: `"lo:hi:step"` (inclusive of hi) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range(String),
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() != 3 {
                    return Err(format!("range `{s}` must be lo:hi:step"));
                }
                let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` in `{s}` is not a number"));
                let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
                    return Err(format!("range `{s}` needs finite bounds and a positive step"));
                }
                if hi < lo {
                    return Err(format!("range `{s}` is empty (hi < lo)"));
                }
                let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize;
                (0..=n).map(|i| lo + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err("grid has a non-finite value".into());
        }
        Ok(v)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// jc, rabi, dicke, two-photon-dicke (alias two-photon-rabi), dsc-interaction.
    pub model: String,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(rename = "Omega", default)]
    pub omega_q: f64,
    #[serde(default = "SpectrumConfig::default_n")]
    pub n_qubits: usize,
    pub g_grid: Grid,
    pub cutoff: usize,
    #[serde(default = "SpectrumConfig::default_levels")]
    pub levels: usize,
    /// A level is converged when its cutoff-halving margin is below this.
    #[serde(default = "SpectrumConfig::default_tol")]
    pub tolerance: f64,
}

impl SpectrumConfig {
    fn default_n() -> usize {
        1
    }
    fn default_levels() -> usize {
        6
    }
    fn default_tol() -> f64 {
        1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    pub gamma_down: f64,
    pub gamma_phi: f64,
    pub n_qubits: usize,
    pub g_grid: Grid,
    #[serde(rename = "Omega_grid")]
    pub omega_q_grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Hamiltonian ramp towards the critical point.
    Critical,
    /// Driven-dissipative steady state below g_p^D.
    Dissipative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Effective,
    FullRabi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationConfig {
    pub route: Route,
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiSweepConfig {
    pub protocol: Protocol,
    #[serde(default = "one")]
    pub omega: f64,
    /// Critical protocol: Ω/ω.
    pub eta: Option<f64>,
    /// Critical protocol: ramp speed parameter.
    #[serde(default = "QfiSweepConfig::default_v0")]
    pub v0: f64,
    /// Critical protocol: λ_end values.
    pub lambda_grid: Option<Grid>,
    /// Critical protocol: also integrate the ramp for |c₂|².
    pub excitation: Option<ExcitationConfig>,
    /// Dissipative protocol: Ω, κ, Γ and g/g_p^D values.
    #[serde(rename = "Omega")]
    pub omega_q: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub ratio_grid: Option<Grid>,
}

impl QfiSweepConfig {
    fn default_v0() -> f64 {
        0.05
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticConfig {
    pub v0: f64,
    pub eta: f64,
    #[serde(default = "one")]
    pub omega: f64,
    pub lambda_end: f64,
    #[serde(default = "AdiabaticConfig::default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "AdiabaticConfig::default_route")]
    pub route: Route,
    #[serde(default = "AdiabaticConfig::default_samples")]
    pub samples: usize,
}

impl AdiabaticConfig {
    fn default_cutoff() -> usize {
        40
    }
    fn default_route() -> Route {
        Route::Effective
    }
    fn default_samples() -> usize {
        50
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStates {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "RandomStates::default_nu")]
    pub nu_max: f64,
    #[serde(default = "RandomStates::default_xi")]
    pub xi_max: f64,
    #[serde(default = "RandomStates::default_gamma")]
    pub gamma_max: f64,
}

impl RandomStates {
    fn default_nu() -> f64 {
        2.0
    }
    fn default_xi() -> f64 {
        1.0
    }
    fn default_gamma() -> f64 {
        1.5
    }
}

/// Williamson parameters of one isotropic two-mode state; omitted fields are 0
/// (ν defaults to 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WilliamsonSpec {
    pub nu: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub theta: f64,
    pub psi: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub gamma_abs: f64,
    pub l: f64,
    pub phi_d1: f64,
    pub phi_d2: f64,
}

impl Default for WilliamsonSpec {
    fn default() -> Self {
        let w = WilliamsonParams::default();
        WilliamsonSpec::from(w)
    }
}

impl From<WilliamsonParams> for WilliamsonSpec {
    fn from(w: WilliamsonParams) -> Self {
        WilliamsonSpec {
            nu: w.nu,
            phi1: w.phi1,
            phi2: w.phi2,
            theta: w.theta,
            psi: w.psi,
            xi1: w.xi1,
            xi2: w.xi2,
            gamma_abs: w.gamma_abs,
            l: w.l,
            phi_d1: w.phi_d1,
            phi_d2: w.phi_d2,
        }
    }
}

impl From<WilliamsonSpec> for WilliamsonParams {
    fn from(w: WilliamsonSpec) -> Self {
        WilliamsonParams {
            nu: w.nu,
            phi1: w.phi1,
            phi2: w.phi2,
            theta: w.theta,
            psi: w.psi,
            xi1: w.xi1,
            xi2: w.xi2,
            gamma_abs: w.gamma_abs,
            l: w.l,
            phi_d1: w.phi_d1,
            phi_d2: w.phi_d2,
        }
    }
}

/// One state document: either `{"williamson": {...}}` or an explicit
/// `{"q": 2, "sigma": [[re, im], ...], "d": [[re, im], ...]}` in the
/// (a₁, a₂, a₁†, a₂†) basis, σ row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub williamson: Option<WilliamsonSpec>,
    pub q: Option<usize>,
    pub sigma: Option<Vec<[f64; 2]>>,
    pub d: Option<Vec<[f64; 2]>>,
}

impl StateDoc {
    fn check(&self, path: &str) -> Result<(), ConfigError> {
        let explicit = self.q.is_some() || self.sigma.is_some() || self.d.is_some();
        match (&self.williamson, explicit) {
            (Some(w), false) => {
                if !(w.nu >= 1.0) {
                    return Err(ConfigError::at(format!("{path}.williamson.nu"), "must be ≥ 1"));
                }
                Ok(())
            }
            (None, true) => {
                let q = *required(&format!("{path}.q"), &self.q, "with sigma and d")?;
                if q != 2 {
                    return Err(ConfigError::at(
                        format!("{path}.q"),
                        "the interferometer acts on two modes; q must be 2",
                    ));
                }
                let s = required(&format!("{path}.sigma"), &self.sigma, "with q")?;
                if s.len() != 16 {
                    return Err(ConfigError::at(format!("{path}.sigma"), format!("need 16 entries, got {}", s.len())));
                }
                let d = required(&format!("{path}.d"), &self.d, "with q")?;
                if d.len() != 4 {
                    return Err(ConfigError::at(format!("{path}.d"), format!("need 4 entries, got {}", d.len())));
                }
                Ok(())
            }
            (Some(_), true) => Err(ConfigError::at(path, "give either `williamson` or `q`/`sigma`/`d`, not both")),
            (None, false) => Err(ConfigError::at(path, "give `williamson` or `q`/`sigma`/`d`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianAdvantageConfig {
    pub random: Option<RandomStates>,
    pub states: Option<Vec<StateDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwVerifyConfig {
    /// rabi-like, two-photon-dicke, two-photon-rabi, boson-boson.
    #[serde(default = "SwVerifyConfig::default_models")]
    pub models: Vec<String>,
    #[serde(default = "SwVerifyConfig::default_eps")]
    pub epsilons: Vec<f64>,
    #[serde(default = "SwVerifyConfig::default_lambda")]
    pub lambda: f64,
    #[serde(default = "SwVerifyConfig::default_order")]
    pub order: usize,
    /// "corrected" (default) or "quoted".
    #[serde(default = "SwVerifyConfig::default_generators")]
    pub generators: String,
}

impl SwVerifyConfig {
    fn default_models() -> Vec<String> {
        ["rabi-like", "two-photon-dicke", "two-photon-rabi", "boson-boson"].map(String::from).to_vec()
    }
    fn default_eps() -> Vec<f64> {
        vec![0.2, 0.1, 0.05]
    }
    fn default_lambda() -> f64 {
        0.5
    }
    fn default_order() -> usize {
        4
    }
    fn default_generators() -> String {
        "corrected".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyModel {
    /// Field covariance of the Rabi model with photon loss and spin decay.
    RabiCovariance,
    /// Mean-field fixed points of the two-photon Dicke model.
    TwoPhoton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativeSteadyConfig {
    pub model: SteadyModel,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub omega_q: f64,
    pub kappa: f64,
    /// Rabi covariance: spin decay Γ.
    pub gamma: Option<f64>,
    /// Rabi covariance: g/g_p^D values.
    pub ratio_grid: Option<Grid>,
    /// Two-photon: rates and size.
    pub gamma_down: Option<f64>,
    pub gamma_phi: Option<f64>,
    pub n_qubits: Option<usize>,
    /// Two-photon: collective coupling values.
    pub g_grid: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Spectrum(SpectrumConfig),
    PhaseDiagram(PhaseDiagramConfig),
    QfiSweep(QfiSweepConfig),
    Adiabatic(AdiabaticConfig),
    GaussianAdvantage(GaussianAdvantageConfig),
    SwVerify(SwVerifyConfig),
    DissipativeSteady(DissipativeSteadyConfig),
}

impl Command {
    pub const NAMES: [&'static str; 7] = [
        "spectrum",
        "phase-diagram",
        "qfi-sweep",
        "adiabatic",
        "gaussian-advantage",
        "sw-verify",
        "dissipative-steady",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::QfiSweep(_) => "qfi-sweep",
            Command::Adiabatic(_) => "adiabatic",
            Command::GaussianAdvantage(_) => "gaussian-advantage",
            Command::SwVerify(_) => "sw-verify",
            Command::DissipativeSteady(_) => "dissipative-steady",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Output directory.
    pub output: String,
    /// The document as given, echoed into the manifest.
    pub echo: Value,
}

fn typed<T: DeserializeOwned>(v: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::at(path, e.into_inner().to_string())
    })
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be a finite positive number, got {x}")))
    }
}

fn non_negative(path: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be finite and ≥ 0, got {x}")))
    }
}

fn grid_ok(path: &str, g: &Grid) -> Result<Vec<f64>, ConfigError> {
    g.values().map_err(|m| ConfigError::at(path, m))
}

fn required<'a, T>(path: &str, v: &'a Option<T>, why: &str) -> Result<&'a T, ConfigError> {
    v.as_ref().ok_or_else(|| ConfigError::at(path, format!("missing field (required {why})")))
}

impl RunConfig {
    /// Parses and checks a config document. `command` and `output` are
    /// top-level keys; everything else belongs to the command's schema.
    pub fn from_value(doc: Value) -> Result<Self, ConfigError> {
        let Value::Object(mut map) = doc.clone() else {
            return Err(ConfigError::at("", "config must be a JSON object"));
        };
        let name = match map.remove("command") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(ConfigError::at("command", "must be a string")),
            None => return Err(ConfigError::at("command", "missing field")),
        };
        let output = match map.remove("output") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(ConfigError::at("output", "must be a string")),
            None => ".".into(),
        };
        let rest = Value::Object(map);
        let command = match name.as_str() {
            "spectrum" => Command::Spectrum(typed(rest)?),
            "phase-diagram" => Command::PhaseDiagram(typed(rest)?),
            "qfi-sweep" => Command::QfiSweep(typed(rest)?),
            "adiabatic" => Command::Adiabatic(typed(rest)?),
            "gaussian-advantage" => Command::GaussianAdvantage(typed(rest)?),
            "sw-verify" => Command::SwVerify(typed(rest)?),
            "dissipative-steady" => Command::DissipativeSteady(typed(rest)?),
            other => {
                return Err(ConfigError::at(
                    "command",
                    format!("unknown command `{other}`; expected one of {}", Command::NAMES.join(", ")),
                ))
            }
        };
        let cfg = RunConfig { command, output, echo: doc };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        let v: Value = serde_json::from_str(s).map_err(|e| ConfigError::at("", format!("invalid JSON: {e}")))?;
        Self::from_value(v)
    }

    /// Value-level checks the types cannot express.
    fn check(&self) -> Result<(), ConfigError> {
        match &self.command {
            Command::Spectrum(c) => {
                positive("omega", c.omega)?;
                non_negative("Omega", c.omega_q)?;
                if c.n_qubits == 0 {
                    return Err(ConfigError::at("n_qubits", "must be ≥ 1"));
                }
                if c.cutoff < 2 {
                    return Err(ConfigError::at("cutoff", "must be ≥ 2"));
                }
                if c.levels == 0 {
                    return Err(ConfigError::at("levels", "must be ≥ 1"));
                }
                positive("tolerance", c.tolerance)?;
                c.model
                    .parse::<qcrit_core::fock::HamiltonianKind>()
                    .map_err(|e| ConfigError::at("model", e.to_string()))?;
                for g in grid_ok("g_grid", &c.g_grid)? {
                    non_negative("g_grid", g)?;
                }
            }
            Command::PhaseDiagram(c) => {
                positive("omega", c.omega)?;
                non_negative("kappa", c.kappa)?;
                non_negative("gamma_down", c.gamma_down)?;
                non_negative("gamma_phi", c.gamma_phi)?;
                if c.n_qubits == 0 {
                    return Err(ConfigError::at("n_qubits", "must be ≥ 1"));
                }
                for g in grid_ok("g_grid", &c.g_grid)? {
                    non_negative("g_grid", g)?;
                }
                for o in grid_ok("Omega_grid", &c.omega_q_grid)? {
                    positive("Omega_grid", o)?;
                }
            }
            Command::QfiSweep(c) => {
                positive("omega", c.omega)?;
                match c.protocol {
                    Protocol::Critical => {
                        positive("eta", *required("eta", &c.eta, "by the critical protocol")?)?;
                        positive("v0", c.v0)?;
                        let g = required("lambda_grid", &c.lambda_grid, "by the critical protocol")?;
                        for l in grid_ok("lambda_grid", g)? {
                            if !(l > 0.0 && l < 1.0) {
                                return Err(ConfigError::at("lambda_grid", format!("λ must lie in (0, 1), got {l}")));
                            }
                        }
                        if let Some(e) = &c.excitation {
                            if e.cutoff < 4 {
                                return Err(ConfigError::at("excitation.cutoff", "must be ≥ 4"));
                            }
                        }
                        for (k, v) in [("Omega", c.omega_q), ("kappa", c.kappa), ("gamma", c.gamma)] {
                            if v.is_some() {
                                return Err(ConfigError::at(k, "only used by the dissipative protocol"));
                            }
                        }
                        if c.ratio_grid.is_some() {
                            return Err(ConfigError::at("ratio_grid", "only used by the dissipative protocol"));
                        }
                    }
                    Protocol::Dissipative => {
                        positive("Omega", *required("Omega", &c.omega_q, "by the dissipative protocol")?)?;
                        positive("kappa", *required("kappa", &c.kappa, "by the dissipative protocol")?)?;
                        non_negative("gamma", *required("gamma", &c.gamma, "by the dissipative protocol")?)?;
                        let g = required("ratio_grid", &c.ratio_grid, "by the dissipative protocol")?;
                        for r in grid_ok("ratio_grid", g)? {
                            if !(r > 0.0 && r < 1.0) {
                                return Err(ConfigError::at(
                                    "ratio_grid",
                                    format!("g/g_p^D must lie in (0, 1), got {r}"),
                                ));
                            }
                        }
                        for (k, present) in [
                            ("eta", c.eta.is_some()),
                            ("lambda_grid", c.lambda_grid.is_some()),
                            ("excitation", c.excitation.is_some()),
                        ] {
                            if present {
                                return Err(ConfigError::at(k, "only used by the critical protocol"));
                            }
                        }
                    }
                }
            }
            Command::Adiabatic(c) => {
                positive("v0", c.v0)?;
                positive("eta", c.eta)?;
                positive("omega", c.omega)?;
                if !(c.lambda_end > 0.0 && c.lambda_end < 1.0) {
                    return Err(ConfigError::at("lambda_end", format!("must lie in (0, 1), got {}", c.lambda_end)));
                }
                if c.cutoff < 4 {
                    return Err(ConfigError::at("cutoff", "must be ≥ 4"));
                }
                if c.samples == 0 {
                    return Err(ConfigError::at("samples", "must be ≥ 1"));
                }
            }
            Command::GaussianAdvantage(c) => {
                match (&c.random, &c.states) {
                    (None, None) => return Err(ConfigError::at("", "give `random` or `states`")),
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::at("states", "give either `random` or `states`, not both"))
                    }
                    _ => {}
                }
                if let Some(r) = &c.random {
                    if r.count == 0 {
                        return Err(ConfigError::at("random.count", "must be ≥ 1"));
                    }
                    if !(r.nu_max >= 1.0) {
                        return Err(ConfigError::at("random.nu_max", "must be ≥ 1"));
                    }
                    non_negative("random.xi_max", r.xi_max)?;
                    non_negative("random.gamma_max", r.gamma_max)?;
                }
                if let Some(s) = &c.states {
                    if s.is_empty() {
                        return Err(ConfigError::at("states", "list is empty"));
                    }
                    for (i, st) in s.iter().enumerate() {
                        st.check(&format!("states[{i}]"))?;
                    }
                }
            }
            Command::SwVerify(c) => {
                if c.models.is_empty() {
                    return Err(ConfigError::at("models", "list is empty"));
                }
                for (i, m) in c.models.iter().enumerate() {
                    m.parse::<qcrit_core::sw::ModelClass>()
                        .map_err(|e| ConfigError::at(format!("models[{i}]"), e.to_string()))?;
                }
                if c.epsilons.is_empty() {
                    return Err(ConfigError::at("epsilons", "list is empty"));
                }
                for &e in &c.epsilons {
                    positive("epsilons", e)?;
                }
                if !matches!(c.order, 1 | 3 | 4) {
                    return Err(ConfigError::at("order", "must be 1, 3 or 4"));
                }
                if !matches!(c.generators.as_str(), "corrected" | "quoted") {
                    return Err(ConfigError::at("generators", "must be `corrected` or `quoted`"));
                }
            }
            Command::DissipativeSteady(c) => {
                positive("omega", c.omega)?;
                positive("Omega", c.omega_q)?;
                match c.model {
                    SteadyModel::RabiCovariance => {
                        positive("kappa", c.kappa)?;
                        non_negative("gamma", *required("gamma", &c.gamma, "by rabi-covariance")?)?;
                        let g = required("ratio_grid", &c.ratio_grid, "by rabi-covariance")?;
                        for r in grid_ok("ratio_grid", g)? {
                            if !(0.0..1.0).contains(&r) {
                                return Err(ConfigError::at(
                                    "ratio_grid",
                                    format!("g/g_p^D must lie in [0, 1), got {r}"),
                                ));
                            }
                        }
                    }
                    SteadyModel::TwoPhoton => {
                        non_negative("kappa", c.kappa)?;
                        non_negative("gamma_down", *required("gamma_down", &c.gamma_down, "by two-photon")?)?;
                        non_negative("gamma_phi", *required("gamma_phi", &c.gamma_phi, "by two-photon")?)?;
                        if *required("n_qubits", &c.n_qubits, "by two-photon")? == 0 {
                            return Err(ConfigError::at("n_qubits", "must be ≥ 1"));
                        }
                        for g in grid_ok("g_grid", required("g_grid", &c.g_grid, "by two-photon")?)? {
                            non_negative("g_grid", g)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sets `key` (dotted for nested objects, e.g. `random.seed`) in a config
/// document; used to lay command-line flags over a file.
pub fn set_key(doc: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts = key.split('.').peekable();
    let mut cur = doc;
    while let Some(p) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(p.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = next.as_object_mut().ok_or_else(|| ConfigError::at(key, format!("`{p}` is not an object")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn range_grid_is_inclusive() {
        let g = Grid::Range("0:0.6:0.01".into()).values().unwrap();
        assert_eq!(g.len(), 61);
        assert!((g[60] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(Grid::List(vec![]).values().is_err());
        assert!(Grid::Range("1:0:0.1".into()).values().is_err());
        assert!(Grid::Range("0:1:0".into()).values().is_err());
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let e = RunConfig::from_value(json!({
            "command": "spectrum", "model": "rabi", "Omega": 1.0, "g_grid": [0.1], "cutoff": 20, "colour": 3
        }))
        .unwrap_err();
        assert_eq!(e.path, "colour", "{e}");
        let e = RunConfig::from_value(json!({
            "command": "gaussian-advantage", "random": {"count": 3, "seed": 1, "sead": 2}
        }))
        .unwrap_err();
        assert_eq!(e.path, "random.sead", "{e}");
    }

    #[test]
    fn value_checks_name_the_key() {
        let e = RunConfig::from_value(json!({
            "command": "spectrum", "model": "rabi", "Omega": 1.0, "g_grid": [], "cutoff": 20
        }))
        .unwrap_err();
        assert_eq!(e.path, "g_grid");
        let e = RunConfig::from_value(json!({
            "command": "adiabatic", "v0": -0.1, "eta": 100, "lambda_end": 0.9
        }))
        .unwrap_err();
        assert_eq!(e.path, "v0");
        let e = RunConfig::from_value(json!({"command": "launch"})).unwrap_err();
        assert_eq!(e.path, "command");
    }

    #[test]
    fn dotted_keys_nest() {
        let mut m = Map::new();
        set_key(&mut m, "random.seed", json!(7)).unwrap();
        set_key(&mut m, "random.count", json!(3)).unwrap();
        assert_eq!(Value::Object(m), json!({"random": {"seed": 7, "count": 3}}));
    }

    #[test]
    fn protocol_specific_keys() {
        let e = RunConfig::from_value(json!({
            "command": "qfi-sweep", "protocol": "critical", "lambda_grid": [0.5]
        }))
        .unwrap_err();
        assert_eq!(e.path, "eta");
        let ok = RunConfig::from_value(json!({
            "command": "qfi-sweep", "protocol": "critical", "eta": 100, "lambda_grid": "0.5:0.999:0.005"
        }));
        assert!(ok.is_ok());
    }
}
