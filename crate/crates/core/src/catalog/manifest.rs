//! A list of catalog exports to ingest together.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::{load_catalog, ColumnMapping, IngestError, RejectionReport};
use super::{DatabaseSource, ProductStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub source: DatabaseSource,
    /// Relative paths resolve against the manifest's directory.
    pub input: PathBuf,
    pub mapping: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogManifest {
    pub catalogs: Vec<CatalogEntry>,
    #[serde(skip)]
    base: PathBuf,
}

pub struct IngestedCatalogs {
    pub store: ProductStore,
    pub reports: Vec<RejectionReport>,
}

impl CatalogManifest {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        if !path.exists() {
            return Err(IngestError::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
        let mut manifest: CatalogManifest = serde_json::from_str(&text)
            .map_err(|e| IngestError::InvalidMapping(format!("{}: {e}", path.display())))?;
        manifest.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Loads every listed export into one store.
    pub fn ingest(&self) -> Result<IngestedCatalogs, IngestError> {
        let mut records = Vec::new();
        let mut reports = Vec::new();
        for entry in &self.catalogs {
            let mapping = ColumnMapping::load(&self.resolve(&entry.mapping))?;
            let outcome = load_catalog(entry.source, &self.resolve(&entry.input), &mapping)?;
            tracing::info!(
                source = %entry.source,
                accepted = outcome.report.accepted,
                rejected = outcome.report.rejections.len(),
                "catalog loaded"
            );
            records.extend(outcome.records);
            reports.push(outcome.report);
        }
        Ok(IngestedCatalogs { store: ProductStore::new(records), reports })
    }
}
