//! Normalized product catalog shared by every later stage.
//!
//! Each source database is parsed by [`ingest`] into [`ProductRecord`]s whose
//! impacts are expressed per 100 g. Records for the same product in
//! different regions share a [`ProductKey`].

pub mod ingest;
mod manifest;
mod store;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ingest::{load_catalog, ColumnMapping, IngestError, LoadOutcome, Rejection, RejectionReport};
pub use manifest::{CatalogEntry, CatalogManifest, IngestedCatalogs};
pub use store::{ProductStore, StoreError};
pub use validate::{validate_store, ValidationReport, Violation, ViolationKind};

/// Reference quantity every stored impact is expressed against.
pub const REFERENCE_GRAMS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DatabaseSource {
    Bonsai,
    Agribalyse,
    BigClimate,
}

impl DatabaseSource {
    pub const ALL: [DatabaseSource; 3] = [Self::Bonsai, Self::Agribalyse, Self::BigClimate];

    /// Short lowercase identifier used in product ids and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Self::Bonsai => "bonsai",
            Self::Agribalyse => "agribalyse",
            Self::BigClimate => "bigclimate",
        }
    }

    /// Name used in the results text headers.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Bonsai => "BONSAI",
            Self::Agribalyse => "Agribalyse",
            Self::BigClimate => "BigClimateDatabase",
        }
    }
}

impl fmt::Display for DatabaseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bonsai => "BONSAI",
            Self::Agribalyse => "AGRIBALYSE",
            Self::BigClimate => "BIG_CLIMATE",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown database source `{0}` (expected bonsai, agribalyse or big_climate)")]
pub struct UnknownSource(pub String);

impl FromStr for DatabaseSource {
    type Err = UnknownSource;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match folded.as_str() {
            "bonsai" => Ok(Self::Bonsai),
            "agribalyse" => Ok(Self::Agribalyse),
            "bigclimate" | "bigclimatedatabase" | "bigclimatedb" => Ok(Self::BigClimate),
            _ => Err(UnknownSource(s.to_string())),
        }
    }
}

/// Lifecycle stage of a breakdown entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Agriculture,
    Iluc,
    Processing,
    Packaging,
    Transport,
    Retail,
    Consumption,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Self::Agriculture,
        Self::Iluc,
        Self::Processing,
        Self::Packaging,
        Self::Transport,
        Self::Retail,
        Self::Consumption,
    ];

    /// iLUC is only reported by Big Climate, consumption only by Agribalyse.
    pub fn allowed_for(self, source: DatabaseSource) -> bool {
        match self {
            Self::Iluc => source == DatabaseSource::BigClimate,
            Self::Consumption => source == DatabaseSource::Agribalyse,
            _ => true,
        }
    }

    /// The stage label each database uses.
    pub fn label(self, source: DatabaseSource) -> &'static str {
        match (self, source) {
            (Self::Agriculture, _) => "Agriculture",
            (Self::Iluc, _) => "Indirect Land Use Change",
            (Self::Processing, DatabaseSource::BigClimate) => "Food processing",
            (Self::Processing, _) => "Processing",
            (Self::Packaging, _) => "Packaging",
            (Self::Transport, DatabaseSource::Agribalyse) => "Transportation",
            (Self::Transport, _) => "Transport",
            (Self::Retail, _) => "Retail",
            (Self::Consumption, _) => "Consumption",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageShare {
    pub stage: Stage,
    /// kg CO2-eq per reference quantity.
    pub impact: f64,
    /// 0-100, stored as reported by the source.
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketShare {
    pub region: String,
    pub share_pct: f64,
    /// kg CO2-eq per reference quantity for product supplied from `region`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emissions: Option<f64>,
}

/// Region-independent identity of a product within one source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductKey(String);

impl ProductKey {
    pub fn new(source: DatabaseSource, name: &str) -> Self {
        ProductKey(format!("{}:{}", source.slug(), slug(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Source encoded in the key prefix.
    pub fn source(&self) -> Option<DatabaseSource> {
        self.0.split_once(':').and_then(|(s, _)| s.parse().ok())
    }
}

impl fmt::Display for ProductKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProductKey {
    fn from(s: &str) -> Self {
        ProductKey(s.to_string())
    }
}

impl From<String> for ProductKey {
    fn from(s: String) -> Self {
        ProductKey(s)
    }
}

/// One normalized product from one source in one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_id: String,
    pub source: DatabaseSource,
    pub name: String,
    pub region: String,
    pub reference_quantity_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_impact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_breakdown: Vec<StageShare>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub market_shares: Vec<MarketShare>,
}

impl ProductRecord {
    /// A record with only a total, expressed per 100 g.
    pub fn new(source: DatabaseSource, name: &str, region: &str, total_per_100g: Option<f64>) -> Self {
        let region = crate::region::normalize(region);
        ProductRecord {
            product_id: product_id(source, name, &region),
            source,
            name: name.trim().to_string(),
            region,
            reference_quantity_g: REFERENCE_GRAMS,
            total_impact: total_per_100g,
            quality_rating: None,
            stage_breakdown: Vec::new(),
            market_shares: Vec::new(),
        }
    }

    pub fn key(&self) -> ProductKey {
        ProductKey::new(self.source, &self.name)
    }

    /// Rescales every impact from `reference_quantity_g` to the 100 g basis.
    pub(crate) fn normalize_reference(&mut self) {
        let factor = REFERENCE_GRAMS / self.reference_quantity_g;
        if factor == 1.0 {
            return;
        }
        if let Some(total) = self.total_impact.as_mut() {
            *total *= factor;
        }
        for stage in &mut self.stage_breakdown {
            stage.impact *= factor;
        }
        for share in &mut self.market_shares {
            if let Some(e) = share.emissions.as_mut() {
                *e *= factor;
            }
        }
        self.reference_quantity_g = REFERENCE_GRAMS;
    }
}

pub fn product_id(source: DatabaseSource, name: &str, region: &str) -> String {
    format!("{}:{}", ProductKey::new(source, name), crate::region::normalize(region))
}

/// Lowercase, alphanumeric runs joined by `-`.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_dash = false;
    for c in name.chars() {
        if c.is_alphanumeric() {
            if pending_dash && !out.is_empty() {
                out.push('-');
            }
            pending_dash = false;
            out.extend(c.to_lowercase());
        } else {
            pending_dash = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_parsing() {
        assert_eq!("big_climate".parse::<DatabaseSource>().unwrap(), DatabaseSource::BigClimate);
        assert_eq!("BigClimateDatabase".parse::<DatabaseSource>().unwrap(), DatabaseSource::BigClimate);
        assert_eq!("AGRIBALYSE".parse::<DatabaseSource>().unwrap(), DatabaseSource::Agribalyse);
        assert!("ecoinvent".parse::<DatabaseSource>().is_err());
    }

    #[test]
    fn ids() {
        assert_eq!(slug("Cheese, semihard, mozzarella, 30 % fidm."), "cheese-semihard-mozzarella-30-fidm");
        assert_eq!(
            product_id(DatabaseSource::Agribalyse, "Pizza base, raw", "fr"),
            "agribalyse:pizza-base-raw:FR"
        );
        let key = ProductKey::new(DatabaseSource::BigClimate, "Red onion");
        assert_eq!(key.as_str(), "bigclimate:red-onion");
        assert_eq!(key.source(), Some(DatabaseSource::BigClimate));
    }

    #[test]
    fn stage_rules() {
        assert!(Stage::Iluc.allowed_for(DatabaseSource::BigClimate));
        assert!(!Stage::Iluc.allowed_for(DatabaseSource::Agribalyse));
        assert!(Stage::Consumption.allowed_for(DatabaseSource::Agribalyse));
        assert!(!Stage::Consumption.allowed_for(DatabaseSource::Bonsai));
    }

    #[test]
    fn normalization_scales_linearly() {
        let mut rec = ProductRecord::new(DatabaseSource::Agribalyse, "Pizza base, raw", "FR", Some(0.0391));
        rec.reference_quantity_g = 200.0;
        rec.stage_breakdown.push(StageShare { stage: Stage::Agriculture, impact: 0.00267, percentage: 6.8 });
        rec.normalize_reference();
        assert!((rec.total_impact.unwrap() - 0.01955).abs() < 1e-12);
        assert!((rec.stage_breakdown[0].impact - 0.001335).abs() < 1e-12);
        assert_eq!(rec.stage_breakdown[0].percentage, 6.8);
        assert_eq!(rec.reference_quantity_g, 100.0);
    }
}
