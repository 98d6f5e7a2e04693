//! One configuration type over the four models.
//!
//! Configs travel as JSON-like trees so that a sweep can override any field,
//! nested ones included, by a dotted path:
//!
//! ```
//! use marketlab::model::ModelConfig;
//! use marketlab::output::ModelKind;
//!
//! let base = ModelConfig::default_for(ModelKind::Leverage);
//! let cfg = base.with_overrides(&[("noise.limit_rate", 12.into())]).unwrap();
//! let ModelConfig::Leverage(c) = cfg else { unreachable!() };
//! assert_eq!(c.noise.limit_rate, 12.0);
//! assert!(base.with_overrides(&[("noise.limit_rat", 12.into())]).is_err());
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cont::{run_cont, ContConfig};
use crate::error::{Error, Result};
use crate::hybrid::{run_hybrid, HybridConfig};
use crate::leverage::{run_leverage, FundTelemetry, LeverageConfig};
use crate::output::{ModelKind, SimOutput};
use crate::zim::{run_zim, ZimConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "config", rename_all = "lowercase")]
pub enum ModelConfig {
    Zim(ZimConfig),
    Cont(ContConfig),
    Hybrid(HybridConfig),
    Leverage(LeverageConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Zim => ModelConfig::Zim(ZimConfig::default()),
            ModelKind::Cont => ModelConfig::Cont(ContConfig::default()),
            ModelKind::Hybrid => ModelConfig::Hybrid(HybridConfig::default()),
            ModelKind::Leverage => ModelConfig::Leverage(LeverageConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Zim(_) => ModelKind::Zim,
            ModelConfig::Cont(_) => ModelKind::Cont,
            ModelConfig::Hybrid(_) => ModelKind::Hybrid,
            ModelConfig::Leverage(_) => ModelKind::Leverage,
        }
    }

    /// Parses a config tree for `kind`; missing fields take their defaults and
    /// unknown fields are rejected.
    pub fn from_value(kind: ModelKind, value: Value) -> Result<Self> {
        let parsed = match kind {
            ModelKind::Zim => serde_json::from_value(value).map(ModelConfig::Zim),
            ModelKind::Cont => serde_json::from_value(value).map(ModelConfig::Cont),
            ModelKind::Hybrid => serde_json::from_value(value).map(ModelConfig::Hybrid),
            ModelKind::Leverage => serde_json::from_value(value).map(ModelConfig::Leverage),
        };
        parsed.map_err(|e| Error::config(kind.as_str(), e.to_string()))
    }

    /// Strict TOML config file contents for `kind`.
    pub fn from_toml(kind: ModelKind, text: &str) -> Result<Self> {
        let value: Value = toml::from_str(text)?;
        Self::from_value(kind, value)
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            ModelConfig::Zim(c) => serde_json::to_value(c),
            ModelConfig::Cont(c) => serde_json::to_value(c),
            ModelConfig::Hybrid(c) => serde_json::to_value(c),
            ModelConfig::Leverage(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }

    /// Copy with each dotted-path field replaced.
    pub fn with_overrides(&self, overrides: &[(&str, Value)]) -> Result<Self> {
        let mut tree = self.to_value();
        for (path, value) in overrides {
            let mut node = &mut tree;
            for key in path.split('.') {
                node = node
                    .as_object_mut()
                    .and_then(|m| m.get_mut(key))
                    .ok_or_else(|| Error::config(path, "no such field"))?;
            }
            *node = value.clone();
        }
        Self::from_value(self.kind(), tree)
    }

    fn run_fields(&mut self) -> (&mut u64, &mut usize, &mut f64) {
        match self {
            ModelConfig::Zim(c) => (&mut c.seed, &mut c.steps, &mut c.burn_in_fraction),
            ModelConfig::Cont(c) => (&mut c.seed, &mut c.steps, &mut c.burn_in_fraction),
            ModelConfig::Hybrid(c) => (&mut c.seed, &mut c.steps, &mut c.burn_in_fraction),
            ModelConfig::Leverage(c) => (&mut c.noise.seed, &mut c.noise.steps, &mut c.noise.burn_in_fraction),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Zim(c) => c.seed,
            ModelConfig::Cont(c) => c.seed,
            ModelConfig::Hybrid(c) => c.seed,
            ModelConfig::Leverage(c) => c.noise.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        *self.run_fields().0 = seed;
    }

    pub fn set_steps(&mut self, steps: usize) {
        *self.run_fields().1 = steps;
    }

    pub fn set_burn_in_fraction(&mut self, fraction: f64) {
        *self.run_fields().2 = fraction;
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Zim(c) => c.validate(),
            ModelConfig::Cont(c) => c.validate(),
            ModelConfig::Hybrid(c) => c.validate(),
            ModelConfig::Leverage(c) => c.validate(),
        }
    }

    /// Runs the model. Fund telemetry is present for leverage runs only.
    pub fn run(&self) -> Result<(SimOutput, Option<FundTelemetry>)> {
        match self {
            ModelConfig::Zim(c) => Ok((run_zim(c)?, None)),
            ModelConfig::Cont(c) => Ok((run_cont(c)?, None)),
            ModelConfig::Hybrid(c) => Ok((run_hybrid(c)?, None)),
            ModelConfig::Leverage(c) => run_leverage(c).map(|(o, t)| (o, Some(t))),
        }
    }
}
