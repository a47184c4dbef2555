//! Run configuration: JSON input, validation with JSON-pointer diagnostics.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use hopfield_core::{MediumParams, SampledProfile, SwitchingProfile};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("schema violation at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn violation(pointer: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::SchemaViolation { pointer: pointer.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Dispersion,
    Bands,
    Spectrum,
    YieldSweep,
    ExactVsPerturbative,
    CorrelationMap,
    SuddenSwitch,
    OracleCompare,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Dispersion,
        Scenario::Bands,
        Scenario::Spectrum,
        Scenario::YieldSweep,
        Scenario::ExactVsPerturbative,
        Scenario::CorrelationMap,
        Scenario::SuddenSwitch,
        Scenario::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dispersion => "dispersion",
            Scenario::Bands => "bands",
            Scenario::Spectrum => "spectrum",
            Scenario::YieldSweep => "yield-sweep",
            Scenario::ExactVsPerturbative => "exact-vs-perturbative",
            Scenario::CorrelationMap => "correlation-map",
            Scenario::SuddenSwitch => "sudden-switch",
            Scenario::OracleCompare => "oracle-compare",
        }
    }

    fn needs_profile(self) -> bool {
        !matches!(self, Scenario::Dispersion | Scenario::Bands)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediumConfig {
    pub omega: f64,
    pub g: f64,
}

/// Flat profile description; which fields are required depends on `kind`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub kind: String,
    #[serde(alias = "G0", skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_on: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_off: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// CSV file with (t, G) rows, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// Numerical settings. Each scenario reads the fields it understands and
/// falls back to defaults derived from the medium and profile.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Numerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_panel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linearize_lower_band: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_soft: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dy: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_extent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_span: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(alias = "G0", skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

/// The JSON document as written by the user.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub medium: MediumConfig,
    #[serde(rename = "G0", alias = "g0", skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub g0: f64,
    pub tau: Option<f64>,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub medium: MediumParams,
    pub g0: Option<f64>,
    pub profile: Option<SwitchingProfile>,
    pub sweep: Vec<SweepPoint>,
    pub raw: RawConfig,
    /// Unknown keys found in lax mode, as JSON pointers.
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// Normalized echo of the configuration.
    pub fn echo(&self) -> Value {
        let mut raw = self.raw.clone();
        raw.scenario = Some(self.scenario);
        serde_json::to_value(raw).expect("config is plain data")
    }

    pub fn profile(&self) -> &SwitchingProfile {
        self.profile.as_ref().expect("validated scenarios with a profile")
    }
}

fn pointer_from_ignored(path: &serde_ignored::Path) -> String {
    use serde_ignored::Path as P;
    match path {
        P::Root => String::new(),
        P::Seq { parent, index } => format!("{}/{index}", pointer_from_ignored(parent)),
        P::Map { parent, key } => format!("{}/{}", pointer_from_ignored(parent), escape(key)),
        P::Some { parent } | P::NewtypeStruct { parent } | P::NewtypeVariant { parent } => pointer_from_ignored(parent),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Parse a configuration document. `forced` is the scenario of the
/// subcommand, if any; unknown keys are errors when `strict` is set and
/// warnings otherwise.
pub fn parse_config_str(text: &str, base_dir: &Path, forced: Option<Scenario>, strict: bool) -> Result<RunConfig, ConfigError> {
    let mut unknown = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut track = |path: serde_ignored::Path| unknown.push(pointer_from_ignored(&path));
    let ignoring = serde_ignored::Deserializer::new(de, &mut track);
    let raw: RawConfig = serde_path_to_error::deserialize(ignoring).map_err(|e| {
        let pointer = pointer_from_path(e.path());
        let inner = e.into_inner();
        let pointer = if pointer.is_empty() { String::from("") } else { pointer };
        violation(&pointer, inner.to_string())
    })?;
    if strict {
        if let Some(first) = unknown.first() {
            return Err(violation(first, "unknown key"));
        }
    }
    let warnings = unknown.into_iter().map(|p| format!("unknown key {p} ignored")).collect();
    validate(raw, base_dir, forced, warnings)
}

pub fn parse_config(path: &Path, forced: Option<Scenario>, strict: bool) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    parse_config_str(&text, &base, forced, strict)
}

fn positive(pointer: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(violation(pointer, format!("must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

fn required<T: Copy>(pointer: &str, v: Option<T>) -> Result<T, ConfigError> {
    v.ok_or_else(|| violation(pointer, "required field missing"))
}

fn build_profile(pc: &ProfileConfig, base_dir: &Path) -> Result<SwitchingProfile, ConfigError> {
    let g0 = || required("/profile/g0", pc.g0);
    let tau = || required("/profile/tau", pc.tau);
    let profile = match pc.kind.as_str() {
        "lorentzian" => SwitchingProfile::Lorentzian { g0: g0()?, tau: tau()? },
        "gaussian" => SwitchingProfile::Gaussian { g0: g0()?, tau: tau()? },
        "step" => SwitchingProfile::Step { g0: g0()? },
        "constant-on-window" => SwitchingProfile::ConstantOnWindow {
            g0: g0()?,
            t_on: required("/profile/t_on", pc.t_on)?,
            t_off: required("/profile/t_off", pc.t_off)?,
            ramp: pc.ramp.unwrap_or(0.0),
        },
        "sampled" => {
            let s = match (&pc.times, &pc.values, &pc.csv) {
                (Some(t), Some(v), None) => SampledProfile::new(t.clone(), v.clone()),
                (None, None, Some(file)) => SampledProfile::from_csv(base_dir.join(file)),
                _ => return Err(violation("/profile", "sampled profile needs either times and values, or csv")),
            };
            SwitchingProfile::Sampled(s.map_err(|e| violation("/profile", e.to_string()))?)
        }
        other => {
            return Err(violation(
                "/profile/kind",
                format!("unknown kind {other:?}; expected lorentzian, gaussian, step, constant-on-window or sampled"),
            ))
        }
    };
    profile.validate().map_err(|e| violation("/profile", e.to_string()))?;
    Ok(profile)
}

fn validate(raw: RawConfig, base_dir: &Path, forced: Option<Scenario>, warnings: Vec<String>) -> Result<RunConfig, ConfigError> {
    let scenario = match (raw.scenario, forced) {
        (Some(a), Some(b)) if a != b => {
            return Err(violation("/scenario", format!("config is for {a} but the {b} subcommand was used")))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(violation("/scenario", "required field missing")),
    };
    let medium = MediumParams::new(raw.medium.omega, raw.medium.g).map_err(|e| violation("/medium", e.to_string()))?;

    if let Some(g0) = raw.g0 {
        if !(g0 >= 0.0 && g0.is_finite()) {
            return Err(violation("/G0", format!("must be non-negative, got {g0}")));
        }
    }
    let profile = match &raw.profile {
        Some(pc) => Some(build_profile(pc, base_dir)?),
        None if scenario.needs_profile() => return Err(violation("/profile", "required for this scenario")),
        None => None,
    };

    let n = &raw.numerics;
    for (ptr, v) in [
        ("/numerics/omega_max", n.omega_max),
        ("/numerics/k", n.k),
        ("/numerics/k_min", n.k_min),
        ("/numerics/k_max", n.k_max),
        ("/numerics/kappa_cutoff", n.kappa_cutoff),
        ("/numerics/kappa_panel", n.kappa_panel),
        ("/numerics/rel_tol", n.rel_tol),
        ("/numerics/tol", n.tol),
        ("/numerics/k_cutoff", n.k_cutoff),
        ("/numerics/t", n.t),
        ("/numerics/t2", n.t2),
        ("/numerics/spacing", n.spacing),
        ("/numerics/k_soft", n.k_soft),
        ("/numerics/lambda_min", n.lambda_min),
        ("/numerics/lambda_max", n.lambda_max),
        ("/numerics/reference_tau", n.reference_tau),
        ("/numerics/cfl", n.cfl),
        ("/numerics/y_extent", n.y_extent),
    ] {
        positive(ptr, v)?;
    }
    if n.points == Some(0) {
        return Err(violation("/numerics/points", "must be at least 1"));
    }
    if let Some(dys) = &n.dy {
        if dys.is_empty() {
            return Err(violation("/numerics/dy", "needs at least one spacing"));
        }
        for (i, &d) in dys.iter().enumerate() {
            positive(&format!("/numerics/dy/{i}"), Some(d))?;
        }
    }
    if let Some(band) = &n.band {
        if band != "minus" && band != "plus" {
            return Err(violation("/numerics/band", format!("expected minus or plus, got {band:?}")));
        }
    }
    if let Some(b) = &n.boundary {
        if b != "large-domain" && b != "outgoing-absorbing" {
            return Err(violation("/numerics/boundary", format!("expected large-domain or outgoing-absorbing, got {b:?}")));
        }
    }
    if let Some([a, b]) = n.t_span {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(violation("/numerics/t_span", "needs finite start < end"));
        }
    }
    if let (Some(a), Some(b)) = (n.lambda_min, n.lambda_max) {
        if b <= a {
            return Err(violation("/numerics/lambda_max", "must exceed lambda_min"));
        }
    }
    for (i, f) in raw.output.formats.iter().enumerate() {
        if f != "csv" && f != "json" {
            return Err(violation(&format!("/output/formats/{i}"), format!("unknown format {f:?}")));
        }
    }

    // Scenario-specific requirements.
    match scenario {
        Scenario::Dispersion => {
            required("/G0", raw.g0)?;
        }
        Scenario::CorrelationMap => {
            let t = required("/numerics/t", n.t)?;
            if let Some(t2) = n.t2 {
                if t2 <= t {
                    return Err(violation("/numerics/t2", "must exceed t"));
                }
            }
        }
        Scenario::SuddenSwitch => {
            if !matches!(profile, Some(SwitchingProfile::Step { .. })) {
                return Err(violation("/profile/kind", "sudden-switch needs a step profile"));
            }
        }
        Scenario::YieldSweep | Scenario::OracleCompare | Scenario::ExactVsPerturbative | Scenario::Spectrum => {
            if matches!(profile, Some(SwitchingProfile::Step { .. })) && scenario != Scenario::Spectrum {
                return Err(violation("/profile/kind", format!("{scenario} needs a pulse with a finite time scale")));
            }
        }
        Scenario::Bands => {}
    }

    let sweep = sweep_points(&raw, profile.as_ref())?;
    Ok(RunConfig { scenario, medium, g0: raw.g0, profile, sweep, raw, warnings })
}

/// Cartesian product of the sweep axes; missing axes take the profile's value.
fn sweep_points(raw: &RawConfig, profile: Option<&SwitchingProfile>) -> Result<Vec<SweepPoint>, ConfigError> {
    let (base_g0, base_tau) = match profile {
        Some(SwitchingProfile::Lorentzian { g0, tau }) | Some(SwitchingProfile::Gaussian { g0, tau }) => (*g0, Some(*tau)),
        Some(p) => (p.peak(), None),
        None => (raw.g0.unwrap_or(0.0), None),
    };
    let sweep = raw.sweep.clone().unwrap_or_default();
    if sweep.tau.is_some() && base_tau.is_none() {
        return Err(violation("/sweep/tau", "only lorentzian and gaussian profiles have a width to sweep"));
    }
    let g0s = sweep.g0.unwrap_or_else(|| vec![base_g0]);
    let taus: Vec<Option<f64>> = sweep.tau.map(|v| v.into_iter().map(Some).collect()).unwrap_or_else(|| vec![base_tau]);
    if g0s.is_empty() {
        return Err(violation("/sweep/g0", "empty sweep axis"));
    }
    if taus.is_empty() {
        return Err(violation("/sweep/tau", "empty sweep axis"));
    }
    for (i, &g) in g0s.iter().enumerate() {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(violation(&format!("/sweep/g0/{i}"), "must be non-negative"));
        }
    }
    for (i, t) in taus.iter().enumerate() {
        positive(&format!("/sweep/tau/{i}"), *t)?;
    }
    Ok(taus.iter().flat_map(|&tau| g0s.iter().map(move |&g0| SweepPoint { g0, tau })).collect())
}

impl SweepPoint {
    /// The base profile with this point's amplitude and width.
    pub fn apply(&self, base: &SwitchingProfile) -> SwitchingProfile {
        match (base, self.tau) {
            (SwitchingProfile::Lorentzian { .. }, Some(tau)) => SwitchingProfile::Lorentzian { g0: self.g0, tau },
            (SwitchingProfile::Gaussian { .. }, Some(tau)) => SwitchingProfile::Gaussian { g0: self.g0, tau },
            (p, _) => {
                let peak = p.peak();
                if peak > 0.0 {
                    p.scaled(self.g0 / peak)
                } else {
                    p.clone()
                }
            }
        }
    }
}

/// JSON Schema of the configuration document.
pub fn schema() -> Value {
    let num = serde_json::json!({"type": "number"});
    let pos = serde_json::json!({"type": "number", "exclusiveMinimum": 0});
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "hopfield run configuration",
        "type": "object",
        "required": ["medium"],
        "properties": {
            "scenario": {"enum": Scenario::ALL.iter().map(|s| s.name()).collect::<Vec<_>>()},
            "medium": {
                "type": "object",
                "required": ["omega", "g"],
                "properties": {"omega": pos, "g": {"type": "number", "minimum": 0}}
            },
            "G0": {"type": "number", "minimum": 0, "description": "constant coupling for the dispersion scenario"},
            "profile": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["lorentzian", "gaussian", "step", "constant-on-window", "sampled"]},
                    "g0": {"type": "number", "minimum": 0},
                    "tau": pos,
                    "t_on": num, "t_off": num, "ramp": {"type": "number", "minimum": 0},
                    "times": {"type": "array", "items": num},
                    "values": {"type": "array", "items": num},
                    "csv": {"type": "string"}
                }
            },
            "numerics": {
                "type": "object",
                "properties": {
                    "omega_max": pos, "points": {"type": "integer", "minimum": 1},
                    "k": pos, "k_min": pos, "k_max": pos, "band": {"enum": ["minus", "plus"]},
                    "kappa_cutoff": pos, "kappa_panel": pos, "rel_tol": pos, "tol": pos,
                    "k_cutoff": pos, "linearize_lower_band": {"type": "boolean"},
                    "t": pos, "t2": pos, "spacing": pos, "k_soft": pos,
                    "lambda_min": pos, "lambda_max": pos, "reference_tau": pos,
                    "dy": {"type": "array", "items": pos, "minItems": 1},
                    "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.9},
                    "boundary": {"enum": ["large-domain", "outgoing-absorbing"]},
                    "y_extent": pos,
                    "t_span": {"type": "array", "items": num, "minItems": 2, "maxItems": 2}
                }
            },
            "sweep": {
                "type": "object",
                "properties": {"g0": {"type": "array", "items": num}, "tau": {"type": "array", "items": pos}}
            },
            "output": {
                "type": "object",
                "properties": {
                    "dir": {"type": "string"},
                    "formats": {"type": "array", "items": {"enum": ["csv", "json"]}}
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, strict: bool) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("."), None, strict)
    }

    fn pointer(e: ConfigError) -> String {
        match e {
            ConfigError::SchemaViolation { pointer, .. } => pointer,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn minimal_dispersion_config() {
        let c = parse(r#"{"scenario": "dispersion", "medium": {"omega": 1, "g": 1.5}, "G0": 0.5}"#, true).unwrap();
        assert_eq!(c.scenario, Scenario::Dispersion);
        assert_eq!(c.g0, Some(0.5));
    }

    #[test]
    fn spectrum_without_profile() {
        let e = parse(r#"{"scenario": "spectrum", "medium": {"omega": 1, "g": 1.5}}"#, true).unwrap_err();
        assert_eq!(pointer(e), "/profile");
    }

    #[test]
    fn yield_sweep_points() {
        let c = parse(
            r#"{"scenario": "yield-sweep", "medium": {"omega": 1, "g": 1.5},
                "profile": {"kind": "lorentzian", "g0": 0.5, "tau": 10}, "sweep": {"tau": [10, 20, 40]}}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.sweep.len(), 3);
        assert_eq!(c.sweep[2], SweepPoint { g0: 0.5, tau: Some(40.0) });
    }

    #[test]
    fn sweep_is_a_cartesian_product() {
        let c = parse(
            r#"{"scenario": "yield-sweep", "medium": {"omega": 1, "g": 1.5},
                "profile": {"kind": "lorentzian", "g0": 0.5, "tau": 10}, "sweep": {"tau": [10, 20], "g0": [0.1, 0.2, 0.4]}}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.sweep.len(), 6);
    }

    #[test]
    fn unknown_keys_strict_and_lax() {
        let text = r#"{"scenario": "bands", "medium": {"omega": 1, "g": 1.5, "colour": 3}, "extra": true}"#;
        assert_eq!(pointer(parse(text, true).unwrap_err()), "/medium/colour");
        let lax = parse(text, false).unwrap();
        assert_eq!(lax.warnings.len(), 2);
    }

    #[test]
    fn type_errors_carry_pointers() {
        let e = parse(r#"{"scenario": "bands", "medium": {"omega": "one", "g": 1.5}}"#, true).unwrap_err();
        assert_eq!(pointer(e), "/medium/omega");
        let e = parse(r#"{"scenario": "bands", "medium": {"omega": 1, "g": 1.5}, "numerics": {"dy": [0.1, -1]}}"#, true)
            .unwrap_err();
        assert_eq!(pointer(e), "/numerics/dy/1");
        let e = parse(r#"{"scenario": "bands", "medium": {"omega": 0, "g": 1.5}}"#, true).unwrap_err();
        assert_eq!(pointer(e), "/medium");
    }

    #[test]
    fn scenario_specific_requirements() {
        let e = parse(r#"{"scenario": "dispersion", "medium": {"omega": 1, "g": 1.5}}"#, true).unwrap_err();
        assert_eq!(pointer(e), "/G0");
        let e = parse(
            r#"{"scenario": "correlation-map", "medium": {"omega": 1, "g": 1.5}, "profile": {"kind": "lorentzian", "g0": 0.1, "tau": 5}}"#,
            true,
        )
        .unwrap_err();
        assert_eq!(pointer(e), "/numerics/t");
        let e = parse(
            r#"{"scenario": "sudden-switch", "medium": {"omega": 1, "g": 1.5}, "profile": {"kind": "lorentzian", "g0": 0.1, "tau": 5}}"#,
            true,
        )
        .unwrap_err();
        assert_eq!(pointer(e), "/profile/kind");
        let e = parse(r#"{"scenario": "spectrum", "medium": {"omega": 1, "g": 1.5}, "profile": {"kind": "gaussian", "g0": 0.1}}"#, true)
            .unwrap_err();
        assert_eq!(pointer(e), "/profile/tau");
    }

    #[test]
    fn subcommand_must_match_config() {
        let text = r#"{"scenario": "bands", "medium": {"omega": 1, "g": 1.5}}"#;
        let e = parse_config_str(text, Path::new("."), Some(Scenario::Spectrum), true).unwrap_err();
        assert_eq!(pointer(e), "/scenario");
        let text = r#"{"medium": {"omega": 1, "g": 1.5}}"#;
        let c = parse_config_str(text, Path::new("."), Some(Scenario::Bands), true).unwrap();
        assert_eq!(c.echo()["scenario"], "bands");
    }
}
