use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use super::{DatabaseSource, ProductKey, ProductRecord};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read store {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write store {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("store line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

/// Immutable set of normalized records, indexed by product key.
///
/// Records are kept ordered by `(source, product_id)` so that the
/// newline-delimited serialization is canonical.
#[derive(Debug, Clone, Default)]
pub struct ProductStore {
    records: Vec<ProductRecord>,
    by_key: BTreeMap<ProductKey, Vec<usize>>,
}

impl ProductStore {
    pub fn new(mut records: Vec<ProductRecord>) -> Self {
        records.sort_by(|a, b| (a.source, &a.product_id).cmp(&(b.source, &b.product_id)));
        let mut by_key: BTreeMap<ProductKey, Vec<usize>> = BTreeMap::new();
        for (i, rec) in records.iter().enumerate() {
            by_key.entry(rec.key()).or_default().push(i);
        }
        ProductStore { records, by_key }
    }

    pub fn records(&self) -> &[ProductRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn of_source(&self, source: DatabaseSource) -> impl Iterator<Item = &ProductRecord> {
        self.records.iter().filter(move |r| r.source == source)
    }

    pub fn sources(&self) -> BTreeSet<DatabaseSource> {
        self.records.iter().map(|r| r.source).collect()
    }

    /// All regional records of one product.
    pub fn lookup(&self, key: &ProductKey) -> Vec<&ProductRecord> {
        self.by_key
            .get(key)
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, key: &ProductKey) -> bool {
        self.by_key.contains_key(key)
    }

    /// Whether the product has a record for `region`.
    pub fn has_region(&self, key: &ProductKey, region: &str) -> bool {
        self.lookup(key).iter().any(|r| r.region.eq_ignore_ascii_case(region))
    }

    /// Distinct region codes present for `source`.
    pub fn list_regions(&self, source: DatabaseSource) -> BTreeSet<String> {
        list_regions(&self.records, source)
    }

    /// Region codes across all sources.
    pub fn all_regions(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.region.clone()).collect()
    }

    /// Replaces every record of `source` with `records`.
    pub fn with_source_replaced(&self, source: DatabaseSource, records: Vec<ProductRecord>) -> Self {
        let mut all: Vec<ProductRecord> =
            self.records.iter().filter(|r| r.source != source).cloned().collect();
        all.extend(records);
        Self::new(all)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            // ProductRecord holds only strings, numbers and plain enums.
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, StoreError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(line).map_err(|source| StoreError::Parse { line: i + 1, source })?;
            records.push(rec);
        }
        Ok(Self::new(records))
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path)
            .map_err(|source| StoreError::Read { path: path.display().to_string(), source })?;
        Self::from_ndjson(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        fs::write(path, self.to_ndjson())
            .map_err(|source| StoreError::Write { path: path.display().to_string(), source })
    }
}

/// Distinct region codes of `source` among `records`.
pub fn list_regions(records: &[ProductRecord], source: DatabaseSource) -> BTreeSet<String> {
    records.iter().filter(|r| r.source == source).map(|r| r.region.clone()).collect()
}
