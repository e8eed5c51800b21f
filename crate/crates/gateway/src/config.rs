use std::net::SocketAddr;
use std::path::PathBuf;

use socialdao_core::agents::Rubric;
use socialdao_core::EngineConfig;

pub const DEFAULT_PORT: u16 = 8740;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// Service configuration. Every field has an environment fallback:
/// `SOCIALDAO_PORT`, `SOCIALDAO_DATA_DIR`, `SOCIALDAO_RUBRIC`.
#[derive(Debug, Clone, Default)]
pub struct GatewayConfig {
    pub host: Option<String>,
    pub port: Option<u16>,
    pub data_dir: Option<PathBuf>,
    pub rubric: Option<PathBuf>,
}

impl GatewayConfig {
    pub fn addr(&self) -> Result<SocketAddr, ConfigError> {
        let host = self.host.as_deref().unwrap_or("127.0.0.1");
        let port = self.port.unwrap_or(DEFAULT_PORT);
        format!("{host}:{port}").parse().map_err(|e| ConfigError::BadConfig(format!("address {host}:{port}: {e}")))
    }

    pub fn engine_config(&self) -> Result<EngineConfig, ConfigError> {
        Ok(EngineConfig { rubric: load_rubric(self.rubric.as_ref())?, data_dir: self.data_dir.clone(), ..Default::default() })
    }
}

/// The rubric at `path`, or the bundled default.
pub fn load_rubric(path: Option<&PathBuf>) -> Result<Rubric, ConfigError> {
    match path {
        None => Ok(Rubric::bundled().clone()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::BadConfig(format!("rubric {}: {e}", p.display())))?;
            Rubric::from_json(&text).map_err(|e| ConfigError::BadConfig(format!("rubric {}: {e}", p.display())))
        }
    }
}
