use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::chains::StabilityParams;
use crate::error::{Error, Result};
use crate::rng::purpose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    ToySdc,
    WignersFriend,
    Interferometer,
    EprBell,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] =
        [ScenarioKind::ToySdc, ScenarioKind::WignersFriend, ScenarioKind::Interferometer, ScenarioKind::EprBell];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ToySdc => "toy-sdc",
            ScenarioKind::WignersFriend => "wigners-friend",
            ScenarioKind::Interferometer => "interferometer",
            ScenarioKind::EprBell => "epr-bell",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "prob")]
    Probabilistic,
    #[serde(rename = "det-chancy")]
    DeterministicChancy,
    #[serde(rename = "det-hv")]
    DeterministicEarlyHV,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Probabilistic, Mode::DeterministicChancy, Mode::DeterministicEarlyHV];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Probabilistic => "prob",
            Mode::DeterministicChancy => "det-chancy",
            Mode::DeterministicEarlyHV => "det-hv",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Real amplitudes for the toy chain. `b` is `(α₁, β₁)` on B's values
/// `s_i, s_j`; `d` is `(α₂, β₂)` on D's values `v_k, v_l`. `histories`
/// optionally overrides the four-term global state `(α, β, γ, δ)` used by
/// the deterministic modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyParams {
    pub b_amplitudes: [f64; 2],
    pub d_amplitudes: [f64; 2],
    pub histories: Option<[f64; 4]>,
}

impl Default for ToyParams {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { b_amplitudes: [h, h], d_amplitudes: [h, h], histories: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BellParams {
    pub alice_angles: [f64; 2],
    pub bob_angles: [f64; 2],
    pub settings_stream: u64,
    pub preparation_stream: u64,
}

impl Default for BellParams {
    fn default() -> Self {
        Self {
            alice_angles: [0.0, FRAC_PI_2],
            bob_angles: [FRAC_PI_4, 3.0 * FRAC_PI_4],
            settings_stream: purpose::SETTINGS,
            preparation_stream: purpose::PREPARATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerParams {
    /// Measurement axis shared by both wings, radians from z.
    pub angle: f64,
}

impl Default for WignerParams {
    fn default() -> Self {
        Self { angle: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerParams {
    /// Phase of the reflection amplitude; π/2 is the `i` convention.
    pub reflection_phase: f64,
}

impl Default for InterferometerParams {
    fn default() -> Self {
        Self { reflection_phase: FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "yes")]
    pub lab_open: bool,
    #[serde(default = "yes")]
    pub d3_present: bool,
    #[serde(default)]
    pub stability: StabilityParams,
    #[serde(default)]
    pub toy: ToyParams,
    #[serde(default)]
    pub bell: BellParams,
    #[serde(default)]
    pub wigner: WignerParams,
    #[serde(default)]
    pub interferometer: InterferometerParams,
}

fn default_trials() -> u64 {
    10_000
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            mode: Mode::default(),
            seed: 0,
            trials: default_trials(),
            lab_open: true,
            d3_present: true,
            stability: StabilityParams::default(),
            toy: ToyParams::default(),
            bell: BellParams::default(),
            wigner: WignerParams::default(),
            interferometer: InterferometerParams::default(),
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Parses TOML text; syntax errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses TOML text, then applies dotted `key=value` overrides where
    /// each value is read as a TOML value (bare words fall back to strings).
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
        for (key, raw) in overrides {
            set_dotted(&mut table, key, parse_value(raw))?;
        }
        let config: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        StabilityParams::new(self.stability.window_length, self.stability.min_ticks)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let angles = self.bell.alice_angles.iter().chain(&self.bell.bob_angles).chain([&self.wigner.angle]);
        if angles.chain([&self.interferometer.reflection_phase]).any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("angles must be finite radians".into()));
        }
        if self.bell.settings_stream == self.bell.preparation_stream {
            return Err(Error::InvalidConfig(format!(
                "settings and preparation share stream {}",
                self.bell.settings_stream
            )));
        }
        let reserved = [purpose::OUTCOMES, purpose::CHANCE, purpose::HIDDEN_VARIABLE, purpose::BATH];
        for s in [self.bell.settings_stream, self.bell.preparation_stream] {
            if reserved.contains(&s) {
                return Err(Error::InvalidConfig(format!("stream {s} is reserved")));
            }
        }
        check_norm("toy.b_amplitudes", &self.toy.b_amplitudes)?;
        check_norm("toy.d_amplitudes", &self.toy.d_amplitudes)?;
        if let Some(h) = &self.toy.histories {
            check_norm("toy.histories", h)?;
        }
        Ok(())
    }
}

fn check_norm(name: &str, amps: &[f64]) -> Result<()> {
    let n: f64 = amps.iter().map(|a| a * a).sum();
    if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("{name} is not normalized (Σ|a|² = {n})")));
    }
    Ok(())
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let msg = e.message().to_string();
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            Error::InvalidConfig(format!("line {line}, column {col}: {msg}"))
        }
        None => Error::InvalidConfig(msg),
    }
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidConfig(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ScenarioConfig::from_toml("scenario = \"interferometer\"\n").unwrap();
        assert_eq!(c.scenario, ScenarioKind::Interferometer);
        assert_eq!(c.mode, Mode::Probabilistic);
        assert!(c.d3_present && c.lab_open);
        assert_eq!(c.trials, 10_000);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = ScenarioConfig::from_toml("scenario = \"toy-sdc\"\ntrials = = 3\n").unwrap_err();
        let Error::InvalidConfig(msg) = err else { panic!() };
        assert!(msg.starts_with("line 2, column"), "{msg}");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = vec![
            ("mode".to_string(), "det-hv".to_string()),
            ("toy.b_amplitudes".to_string(), "[0.6, 0.8]".to_string()),
            ("trials".to_string(), "5".to_string()),
        ];
        let c = ScenarioConfig::from_toml_with_overrides("scenario = \"toy-sdc\"", &o).unwrap();
        assert_eq!(c.mode, Mode::DeterministicEarlyHV);
        assert_eq!(c.toy.b_amplitudes, [0.6, 0.8]);
        assert_eq!(c.trials, 5);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "scenario = \"toy-sdc\"\ntrials = 0",
            "scenario = \"toy-sdc\"\n[toy]\nb_amplitudes = [1.0, 1.0]",
            "scenario = \"epr-bell\"\n[bell]\nsettings_stream = 4\npreparation_stream = 4",
            "scenario = \"epr-bell\"\nunknown = 1",
            "scenario = \"nope\"",
        ] {
            assert!(matches!(ScenarioConfig::from_toml(text), Err(Error::InvalidConfig(_))), "{text}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::new(ScenarioKind::EprBell).with_seed(9);
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
