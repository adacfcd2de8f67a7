use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sosroa_engine::RoaConfig;

use crate::{CliError, Scenario};

pub const TOOL_VERSION: &str = concat!("sosroa ", env!("CARGO_PKG_VERSION"));

/// TOML run configuration. `[roa]` overrides individual estimation settings
/// on top of the scenario defaults; the other tables tune the commands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub roa: toml::Table,
    pub slice: SliceConfig,
    pub sweep: SweepConfig,
    pub validate: ValidateConfig,
    pub trajectories: TrajectoryConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceConfig {
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
    /// Seconds; defaults to 30 for the oscillator and 10 for the vehicle.
    pub horizon: Option<f64>,
    /// Integrate the polynomial field instead of the exact one.
    pub polynomial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub samples: usize,
    /// Sublevel `{V ≤ level}` that is sampled.
    pub level: f64,
    pub horizon: Option<f64>,
    /// Required fraction of safe, convergent samples on the exact field.
    pub full_threshold: Option<f64>,
    /// Number of counterexample trajectories written out.
    pub counterexample_trajectories: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            level: 0.99,
            horizon: None,
            full_threshold: None,
            counterexample_trajectories: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Certified points drawn when no points file is given.
    pub count: usize,
    pub horizon: f64,
    pub sample_rate: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            count: 20,
            horizon: 5.0,
            sample_rate: 100.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }

    /// Scenario defaults with the `[roa]` table applied on top.
    pub fn roa_config(&self, scenario: &Scenario) -> Result<RoaConfig, CliError> {
        let base = scenario.default_roa_config()?;
        let mut cfg = if self.roa.is_empty() {
            base
        } else {
            let mut table = toml::Table::try_from(&base).map_err(|e| CliError::Pipeline(e.to_string()))?;
            for (k, v) in &self.roa {
                table.insert(k.clone(), v.clone());
            }
            table
                .try_into::<RoaConfig>()
                .map_err(|e| CliError::Input(format!("config [roa]: {}", e.message())))?
        };
        scenario.complete_config(&mut cfg);
        cfg.validate(scenario.dim())?;
        Ok(cfg)
    }
}

/// Everything a command needs, resolved once.
pub struct Context {
    pub scenario: Scenario,
    pub run: RunConfig,
    pub roa: RoaConfig,
    pub seed: u64,
    /// SHA-256 of the scenario text and the resolved configuration.
    pub config_hash: String,
}

impl Context {
    pub fn new(scenario: Scenario, run: RunConfig, seed: u64) -> Result<Self, CliError> {
        let roa = run.roa_config(&scenario)?;
        let mut h = Sha256::new();
        h.update(scenario.text.as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_string(&roa).expect("config serializes").as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_string(&run).expect("config serializes").as_bytes());
        let config_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            scenario,
            run,
            roa,
            seed,
            config_hash,
        })
    }

    /// Comment lines heading every CSV file.
    pub fn header(&self) -> Vec<String> {
        vec![
            format!("tool {TOOL_VERSION}"),
            format!("config_hash {}", self.config_hash),
            format!("scenario {} ({})", self.scenario.name, self.scenario.path.display()),
            format!("seed {}", self.seed),
        ]
    }

    pub fn is_vehicle(&self) -> bool {
        self.scenario.vehicle().is_some()
    }
}
