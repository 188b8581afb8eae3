use std::path::{Path, PathBuf};

use hyperadapt_core::ils::{load_instrument, Instrument};
use hyperadapt_core::EngineConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable consulted when no `--config` path is given.
pub const CONFIG_ENV: &str = "ADAPT_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("no config file: pass --config or set {CONFIG_ENV}")]
    Missing,
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_ttl() -> u64 {
    3600
}

/// Service settings, read from TOML. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub store_dir: PathBuf,
    /// Questionnaire definition; the bundled stand-in when absent.
    #[serde(default)]
    pub instrument_path: Option<PathBuf>,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_ttl")]
    pub token_ttl_secs: u64,
    /// When set, `PUT /courses` requires this bearer token.
    #[serde(default)]
    pub author_token: Option<String>,
    #[serde(default)]
    pub engine: EngineConfig,
}

impl ServiceConfig {
    pub fn new(store_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            store_dir: store_dir.into(),
            instrument_path: None,
            listen: default_listen(),
            token_ttl_secs: default_ttl(),
            author_token: None,
            engine: EngineConfig::default(),
        }
    }

    pub fn from_toml(document: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ServiceConfig = toml::from_str(document).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.engine.validate().map_err(ConfigError::Invalid)?;
        if cfg.store_dir.is_relative() {
            cfg.store_dir = base.join(&cfg.store_dir);
        }
        if let Some(p) = cfg.instrument_path.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Explicit path first, then `ADAPT_CONFIG`.
    pub fn locate(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => {
                let p = std::env::var_os(CONFIG_ENV).ok_or(ConfigError::Missing)?;
                Self::load(Path::new(&p))
            }
        }
    }

    pub fn instrument(&self) -> Result<Instrument, ConfigError> {
        match &self.instrument_path {
            None => Ok(Instrument::stand_in()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_instrument(&text).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }
}
