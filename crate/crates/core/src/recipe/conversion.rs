//! Unit-to-gram conversion table.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Provenance, RecipeError};

const DEFAULT_TABLE: &str = include_str!("../../config/conversions.json");

/// Units every table must define.
pub const REQUIRED_UNITS: [&str; 9] =
    ["tablespoon", "teaspoon", "cup", "piece", "handful", "sprinkle", "half", "few", "ml"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitEntry {
    pub unit: String,
    pub aliases: Vec<String>,
    pub grams: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientClass {
    pub class: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassOverride {
    pub unit: String,
    pub class: String,
    pub grams: f64,
}

/// Grams per unit, with ingredient-class specific overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionTable {
    pub units: Vec<UnitEntry>,
    #[serde(default)]
    pub classes: Vec<IngredientClass>,
    #[serde(default)]
    pub overrides: Vec<ClassOverride>,
}

/// A unit token resolved against the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitRef<'a> {
    pub entry: &'a UnitEntry,
    /// Number of whitespace-separated words the matched alias spans.
    pub words: usize,
}

impl Default for ConversionTable {
    fn default() -> Self {
        Self::from_json(DEFAULT_TABLE).expect("bundled conversion table is valid")
    }
}

impl ConversionTable {
    pub fn from_json(text: &str) -> Result<Self, RecipeError> {
        let table: ConversionTable =
            serde_json::from_str(text).map_err(|e| RecipeError::InvalidTable(e.to_string()))?;
        table.check()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, RecipeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RecipeError::InvalidTable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), RecipeError> {
        let units: BTreeSet<&str> = self.units.iter().map(|u| u.unit.as_str()).collect();
        if let Some(missing) = REQUIRED_UNITS.iter().find(|u| !units.contains(*u)) {
            return Err(RecipeError::InvalidTable(format!("missing required unit `{missing}`")));
        }
        let bad_unit = self.units.iter().find(|u| !(u.grams > 0.0)).map(|u| u.unit.clone());
        let bad_override = self.overrides.iter().find(|o| !(o.grams > 0.0)).map(|o| o.unit.clone());
        if let Some(unit) = bad_unit.or(bad_override) {
            return Err(RecipeError::InvalidTable(format!("non-positive grams for `{unit}`")));
        }
        if let Some(o) = self.overrides.iter().find(|o| !units.contains(o.unit.as_str())) {
            return Err(RecipeError::InvalidTable(format!("override for unknown unit `{}`", o.unit)));
        }
        Ok(())
    }

    /// Finds the unit for a token, matching canonical names and aliases.
    pub fn unit(&self, token: &str) -> Option<&UnitEntry> {
        let token = token.trim().to_lowercase();
        self.units.iter().find(|u| u.unit == token || u.aliases.contains(&token))
    }

    /// Longest alias matching a prefix of `words`.
    pub fn match_unit(&self, words: &[&str]) -> Option<UnitRef<'_>> {
        let mut best: Option<(usize, usize, &UnitEntry)> = None;
        for entry in &self.units {
            for alias in std::iter::once(&entry.unit).chain(&entry.aliases) {
                let parts: Vec<&str> = alias.split_whitespace().collect();
                if parts.is_empty() || parts.len() > words.len() {
                    continue;
                }
                if parts.iter().zip(words).all(|(a, w)| a == w) {
                    let score = (parts.len(), alias.len());
                    if best.is_none_or(|(n, l, _)| score > (n, l)) {
                        best = Some((score.0, score.1, entry));
                    }
                }
            }
        }
        best.map(|(words, _, entry)| UnitRef { entry, words })
    }

    /// First class whose keyword occurs as whole words in `name`.
    pub fn classify(&self, name: &str) -> Option<&str> {
        let padded = format!(" {} ", name.to_lowercase());
        self.classes
            .iter()
            .find(|c| c.keywords.iter().any(|k| padded.contains(&format!(" {} ", k.to_lowercase()))))
            .map(|c| c.class.as_str())
    }

    /// Grams per one `unit`, preferring an entry for `class`.
    pub fn grams_per_unit(&self, unit: &str, class: Option<&str>) -> Result<f64, RecipeError> {
        let entry = self.unit(unit).ok_or_else(|| RecipeError::UnknownUnit(unit.to_string()))?;
        let overridden = class.and_then(|class| {
            self.overrides.iter().find(|o| o.unit == entry.unit && o.class == class).map(|o| o.grams)
        });
        Ok(overridden.unwrap_or(entry.grams))
    }

    /// `amount` of `unit` in grams; millilitres convert one to one.
    pub fn convert_quantity(&self, amount: f64, unit: &str, class: Option<&str>) -> Result<f64, RecipeError> {
        Ok(amount * self.grams_per_unit(unit, class)?)
    }
}
