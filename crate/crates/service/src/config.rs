//! Service settings and engine assembly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use mealprint_core::catalog::{CatalogManifest, ProductStore};
use mealprint_core::embedding::{Embedder, LexicalEmbedder, RemoteEmbedder, RemoteEmbedderConfig};
use mealprint_core::llm::{LlmGateway, RemoteConfig};
use mealprint_core::pipeline::PipelineError;
use mealprint_core::recipe::ExtractionMode;
use mealprint_core::{Engine, EngineConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("config needs exactly one of `store` or `catalogs`")]
    NoData,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Provider(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Lexical,
    /// Settings from `MEALPRINT_EMBEDDING_*`.
    Remote,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmKind {
    None,
    #[default]
    Stub,
    /// Settings from `MEALPRINT_LLM_*`.
    Remote,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

/// Data locations and providers. Relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Normalized store written by `mealprint ingest`.
    #[serde(default)]
    pub store: Option<PathBuf>,
    /// Catalog manifest, ingested at startup.
    #[serde(default)]
    pub catalogs: Option<PathBuf>,
    /// Directory of prebuilt `{source}.mpix` files; built in memory when absent.
    #[serde(default)]
    pub index_dir: Option<PathBuf>,
    #[serde(default)]
    pub embedder: EmbedderKind,
    #[serde(default)]
    pub llm: LlmKind,
    #[serde(default)]
    pub engine: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub data: DataConfig,
    /// Append-only session journal; sessions live in memory only when unset.
    #[serde(default)]
    pub journal: Option<PathBuf>,
    /// Allowed browser origins; `"*"` allows any.
    #[serde(default)]
    pub cors_origins: Vec<String>,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read_err = |reason: String| ConfigError::Read { path: path.to_path_buf(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let mut config: ServiceConfig = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data.resolve(base);
        if let Some(j) = config.journal.take() {
            config.journal = Some(resolve(base, j));
        }
        Ok(config)
    }
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl DataConfig {
    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.store, &mut self.catalogs, &mut self.index_dir] {
            if let Some(v) = p.take() {
                *p = Some(resolve(base, v));
            }
        }
    }

    pub fn embedder(&self) -> Result<Arc<dyn Embedder>, ConfigError> {
        Ok(match self.embedder {
            EmbedderKind::Lexical => Arc::new(LexicalEmbedder),
            EmbedderKind::Remote => {
                let config = RemoteEmbedderConfig::from_env().map_err(|e| ConfigError::Provider(e.to_string()))?;
                Arc::new(RemoteEmbedder::new(config).map_err(|e| ConfigError::Provider(e.to_string()))?)
            }
        })
    }

    pub fn gateway(&self) -> Result<Option<LlmGateway>, ConfigError> {
        Ok(match self.llm {
            LlmKind::None => None,
            LlmKind::Stub => Some(LlmGateway::stub()),
            LlmKind::Remote => {
                let config = RemoteConfig::from_env().map_err(|e| ConfigError::Provider(e.to_string()))?;
                Some(LlmGateway::remote(config).map_err(|e| ConfigError::Provider(e.to_string()))?)
            }
        })
    }

    /// Extraction runs through the gateway whenever one is configured.
    pub fn extraction_mode(&self) -> ExtractionMode {
        match self.llm {
            LlmKind::None => ExtractionMode::Deterministic,
            _ => ExtractionMode::Llm,
        }
    }

    pub fn load_store(&self) -> Result<ProductStore, ConfigError> {
        match (&self.store, &self.catalogs) {
            (Some(path), None) => ProductStore::load(path).map_err(|e| ConfigError::Provider(e.to_string())),
            (None, Some(path)) => {
                let manifest = CatalogManifest::load(path).map_err(|e| ConfigError::Provider(e.to_string()))?;
                Ok(manifest.ingest().map_err(|e| ConfigError::Provider(e.to_string()))?.store)
            }
            _ => Err(ConfigError::NoData),
        }
    }

    pub fn build_engine(&self) -> Result<Engine, ConfigError> {
        let store = self.load_store()?;
        let embedder = self.embedder()?;
        let engine = match &self.index_dir {
            Some(dir) => Engine::from_index_dir(store, dir, embedder, self.engine.clone())?,
            None => Engine::build(store, embedder, self.engine.clone())?,
        };
        Ok(match self.gateway()? {
            Some(g) => engine.with_gateway(g),
            None => engine,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("service.json");
        std::fs::write(&path, r#"{"data":{"catalogs":"data/catalogs.json"},"journal":"sessions.jsonl"}"#).unwrap();
        let c = ServiceConfig::load(&path).unwrap();
        assert_eq!(c.bind, "127.0.0.1:8080");
        assert_eq!(c.data.catalogs, Some(dir.path().join("data/catalogs.json")));
        assert_eq!(c.journal, Some(dir.path().join("sessions.jsonl")));
        assert_eq!(c.data.llm, LlmKind::Stub);
        assert_eq!(c.data.extraction_mode(), ExtractionMode::Llm);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("service.json");
        std::fs::write(&path, r#"{"data":{"catalogs":"c.json"},"port":1}"#).unwrap();
        assert!(ServiceConfig::load(&path).is_err());
    }

    #[test]
    fn store_or_catalogs_required() {
        let data: DataConfig = serde_json::from_str("{}").unwrap();
        assert!(matches!(data.load_store(), Err(ConfigError::NoData)));
    }
}
