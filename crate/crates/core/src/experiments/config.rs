use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::adiabatic::{Convergence, StepOrder};
use crate::chain::Model;
use crate::error::{Error, Result};
use crate::filter::FilterKind;
use crate::gluing::{Alpha, StepPolicy};
use crate::locality::LrConstants;

/// How entries of `gamma_grid` are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaUnits {
    /// The value is `γ`.
    #[default]
    Absolute,
    /// The value is `c` in `γ = c/(|x|·ΔE)` with `x` and `ΔE` of the first seam.
    GapScaled,
}

/// `alpha_grid` entry: a radius or the string `"full"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlphaSpec(pub Alpha);

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Alpha::Full => f.write_str("full"),
            Alpha::Radius(a) => write!(f, "{a}"),
        }
    }
}

impl Serialize for AlphaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Alpha::Full => s.serialize_str("full"),
            Alpha::Radius(a) => s.serialize_u64(a as u64),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("alpha must be at least 1")),
            Raw::Int(a) => Ok(AlphaSpec(Alpha::Radius(a as usize))),
            Raw::Text(t) if t == "full" => Ok(AlphaSpec(Alpha::Full)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("alpha must be a positive integer or \"full\", got \"{t}\""))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Fixed,
    Converge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsConfig {
    #[serde(default = "default_step_kind")]
    pub policy: StepKind,
    /// Step count for `fixed`, starting count for `converge`.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_order")]
    pub order: StepOrder,
}

fn default_step_kind() -> StepKind {
    StepKind::Converge
}
fn default_steps() -> usize {
    4
}
fn default_max_steps() -> usize {
    256
}
fn default_tol() -> f64 {
    1e-9
}
fn default_order() -> StepOrder {
    StepOrder::Richardson
}

impl Default for StepsConfig {
    fn default() -> Self {
        Self {
            policy: default_step_kind(),
            steps: default_steps(),
            max_steps: default_max_steps(),
            tol: default_tol(),
            order: default_order(),
        }
    }
}

impl StepsConfig {
    pub fn policy(&self) -> StepPolicy {
        match self.policy {
            StepKind::Fixed => StepPolicy::Fixed(self.steps),
            StepKind::Converge => StepPolicy::Converge(self.convergence()),
        }
    }

    pub fn convergence(&self) -> Convergence {
        Convergence {
            start_steps: self.steps,
            max_steps: self.max_steps,
            tol: self.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    /// Chain length of the field ramp.
    #[serde(default = "default_certify_n")]
    pub n: usize,
    pub field_start: f64,
    pub field_end: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Richardson steps of the exact-generator reference.
    #[serde(default = "default_reference_steps")]
    pub reference_steps: usize,
}

fn default_certify_n() -> usize {
    3
}
fn default_grid_points() -> usize {
    33
}
fn default_reference_steps() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub s_grid: Vec<f64>,
    /// Midpoint steps of the unitary comparison; 0 skips it.
    #[serde(default)]
    pub unitary_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrConfig {
    /// Chain length of the scan; defaults to `n`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub a_site: usize,
    pub t_grid: Vec<f64>,
    pub d_grid: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrConstantsConfig {
    pub v: f64,
    pub kappa_lr: f64,
}

/// Parsed experiment document. Unknown keys are rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub m: usize,
    pub n: usize,
    pub gamma_grid: Vec<f64>,
    #[serde(default)]
    pub gamma_units: GammaUnits,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<AlphaSpec>,
    #[serde(default)]
    pub filter_kind: FilterKind,
    #[serde(default)]
    pub steps: StepsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Constants for the error budget of `glue`; `v = κ = 1` if absent.
    #[serde(default)]
    pub lr_constants: Option<LrConstantsConfig>,
    #[serde(default)]
    pub certify: Option<CertifyConfig>,
    #[serde(default)]
    pub truncation: Option<TruncationConfig>,
    #[serde(default)]
    pub lr: Option<LrConfig>,
}

fn default_alpha_grid() -> Vec<AlphaSpec> {
    vec![AlphaSpec(Alpha::Full)]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|message| Error::Config {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.m < 2 {
            return Err(format!("field `m`: block size {} must be at least 2", self.m));
        }
        if self.n <= self.m || !self.n.is_multiple_of(self.m) || !(self.n / self.m).is_power_of_two() {
            return Err(format!("field `n`: {} is not m·2^k with k ≥ 1 for m = {}", self.n, self.m));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err("field `gamma_grid`: must be a nonempty list of positive numbers".into());
        }
        if self.alpha_grid.is_empty() {
            return Err("field `alpha_grid`: must be nonempty".into());
        }
        if self.steps.steps == 0 || self.steps.max_steps < self.steps.steps || !(self.steps.tol > 0.0) {
            return Err("section `steps`: need steps ≥ 1, max_steps ≥ steps and tol > 0".into());
        }
        if let Some(c) = &self.lr_constants {
            if !(c.v > 0.0 && c.kappa_lr > 0.0) {
                return Err("section `lr_constants`: v and kappa_lr must be positive".into());
            }
        }
        if let Some(c) = &self.certify {
            if c.n < 2 || c.grid_points < 2 || c.reference_steps == 0 {
                return Err("section `certify`: need n ≥ 2, grid_points ≥ 2 and reference_steps ≥ 1".into());
            }
        }
        if let Some(t) = &self.truncation {
            if t.s_grid.is_empty() || t.s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err("section `truncation`: s_grid must be a nonempty list in [0, 1]".into());
            }
        }
        if let Some(l) = &self.lr {
            if l.t_grid.is_empty() || l.d_grid.is_empty() || l.t_grid.iter().any(|t| !t.is_finite()) {
                return Err("section `lr`: t_grid and d_grid must be nonempty".into());
            }
        }
        Ok(())
    }

    pub fn lr_constants(&self) -> LrConstants {
        self.lr_constants.map_or(LrConstants { v: 1.0, kappa_lr: 1.0 }, |c| LrConstants { v: c.v, kappa_lr: c.kappa_lr })
    }

    /// Hex SHA-256 of the canonical JSON form of the parsed document and the
    /// effective site cap. Output location does not enter the hash.
    pub fn hash(&self, cap: usize) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&(canonical, cap)).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
m = 2
n = 4
gamma_grid = [10.0]
alpha_grid = [1, "full"]

[model]
kind = "tfim"
coupling = 1.0
field = 1.5
"#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_document() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.alpha_grid, vec![AlphaSpec(Alpha::Radius(1)), AlphaSpec(Alpha::Full)]);
        assert_eq!(c.steps, StepsConfig::default());
        assert_eq!(c.filter_kind, FilterKind::Gaussian);
        assert_eq!(c.hash(16).len(), 64);
        assert_ne!(c.hash(16), c.hash(12));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = MINIMAL.replace("gamma_grid", "gama_grid");
        assert!(matches!(parse(&typo), Err(Error::Config { message, .. }) if message.contains("gama_grid")));
        let nested = format!("{MINIMAL}\nfeild = 2.0\n");
        assert!(parse(&nested).is_err());
        let step = format!("{MINIMAL}\n[steps]\nstep = 3\n");
        assert!(parse(&step).is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(parse(&MINIMAL.replace("n = 4", "n = 6")).is_err());
        assert!(parse(&MINIMAL.replace("[1, \"full\"]", "[\"half\"]")).is_err());
        assert!(parse(&MINIMAL.replace("[1, \"full\"]", "[0]")).is_err());
        assert!(parse(&MINIMAL.replace("[10.0]", "[]")).is_err());
        assert!(parse(&MINIMAL.replace("\"tfim\"", "\"potts\"")).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output_dir = Some(PathBuf::from("elsewhere"));
        assert_eq!(a.hash(16), b.hash(16));
    }
}
