//! Experiment manifests: a JSON document naming the experiment, its config
//! payload, the RNG seed, the output directory and the unit conventions.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinext::{Conventions, CouplingModel, Solver};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Extract,
    ScatterVerify,
    Teleclone,
    Ghzw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: Experiment,
    pub config: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub conventions: Conventions,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Deserializes with the failing field path in the error message.
pub fn from_json<T: DeserializeOwned>(text: &str, prefix: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let at = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        CliError::Schema(format!("{at}: {}", e.inner()))
    })
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Schema("manifest is empty".into()));
        }
        from_json(text, "")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Typed view of the config payload.
    pub fn config<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        from_json(&self.config.to_string(), "config")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Center positions: explicit, or built from resonance integers with the first center at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    Resonant { q: Vec<u32> },
    Positions { positions: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// `|u...u>|d...d>` on qubit centers.
    Split,
    Product { twice_m: Vec<i32> },
    MaximallyMixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    SingletGeneral,
    SingletFour,
    Aharonov,
    FiveCenterSinglet,
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> usize {
    100
}

fn default_coupling() -> f64 {
    2.0
}

fn default_launches() -> usize {
    64
}

fn default_rc_tolerance() -> f64 {
    1e-9
}

fn default_five_center_initial() -> Vec<i32> {
    spinext::applications::FIVE_CENTER_DEFAULT_INITIAL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    /// `2s` for each center.
    pub twice_s: Vec<u32>,
    pub geometry: Geometry,
    pub coupling: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "heisenberg")]
    pub model: CouplingModel,
    #[serde(default)]
    pub solver: Solver,
    pub initial: InitialState,
    pub target: TargetKind,
    pub max_launches: usize,
    /// Bloch vector of the injected spins; zero means unpolarized.
    #[serde(default)]
    pub mobile_bloch: [f64; 3],
    #[serde(default)]
    pub monte_carlo_trials: u64,
    #[serde(default)]
    pub require_unique: bool,
}

fn heisenberg() -> CouplingModel {
    CouplingModel::Heisenberg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub ks: Vec<f64>,
    pub couplings: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterVerifyConfig {
    pub twice_s: Vec<u32>,
    pub geometry: Geometry,
    pub coupling: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "heisenberg")]
    pub model: CouplingModel,
    /// Resonance integers to solve for a common wavenumber.
    #[serde(default)]
    pub expected_q: Option<Vec<u32>>,
    #[serde(default = "default_rc_tolerance")]
    pub rc_tolerance: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputQubit {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

impl Default for InputQubit {
    fn default() -> Self {
        Self {
            alpha: [1.0, 0.0],
            beta: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelecloneConfig {
    pub n: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub input: InputQubit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzwConfig {
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "default_launches")]
    pub max_launches: usize,
    #[serde(default = "default_five_center_initial")]
    pub initial_twice_m: Vec<i32>,
}

impl Default for GhzwConfig {
    fn default() -> Self {
        Self {
            coupling: default_coupling(),
            k: 1.0,
            max_launches: default_launches(),
            initial_twice_m: default_five_center_initial(),
        }
    }
}
