//! Free-text recipe to gram-quantified ingredients.
//!
//! Two extractors share one output type: the LLM gateway with a
//! structured-output contract, and a deterministic grammar backed by an
//! editable [`ConversionTable`]. Gateway failures fall back to the grammar.

pub mod conversion;
mod grammar;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::llm::{GatewayError, LlmGateway};

pub use conversion::ConversionTable;
pub use grammar::GrammarOutput;

#[derive(Debug, thiserror::Error)]
pub enum RecipeError {
    #[error("recipe text is empty")]
    EmptyText,
    #[error("unsupported target country `{0}`")]
    UnsupportedCountry(String),
    #[error("no ingredients found in recipe")]
    NoIngredients,
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("invalid conversion table: {0}")]
    InvalidTable(String),
    #[error("LLM extraction requested but no gateway is configured")]
    NoGateway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    /// Stated in grams.
    Explicit,
    /// Converted from a measurable unit.
    Converted,
    /// Estimated from a vague quantity or a count.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedIngredient {
    pub name: String,
    pub grams: f64,
    pub provenance: Provenance,
}

impl ParsedIngredient {
    /// The `"Xg of NAME"` form, which parses back to the same ingredient.
    pub fn to_recipe_line(&self) -> String {
        format!("{}g of {}", self.grams, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecipe {
    pub text: String,
    pub target_country: String,
}

impl RawRecipe {
    pub fn new(text: impl Into<String>, target_country: &str) -> Result<Self, RecipeError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(RecipeError::EmptyText);
        }
        let country = crate::region::normalize(target_country);
        if country.len() != 2 || !country.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(RecipeError::UnsupportedCountry(target_country.to_string()));
        }
        Ok(RawRecipe { text, target_country: country })
    }

    /// Rejects countries outside `supported` (when the set is non-empty).
    pub fn check_country(&self, supported: &BTreeSet<String>) -> Result<(), RecipeError> {
        if supported.is_empty() || supported.contains(&self.target_country) {
            Ok(())
        } else {
            Err(RecipeError::UnsupportedCountry(self.target_country.clone()))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExtractionMode {
    Llm,
    #[default]
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub ingredients: Vec<ParsedIngredient>,
    /// Mode that produced `ingredients`.
    pub mode: ExtractionMode,
    /// Set when LLM mode failed over to the grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

/// Lowercase, punctuation stripped, single spaces. No stemming.
pub fn normalize_name(raw: &str) -> String {
    raw.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Grammar-only extraction. Pure in `(text, table)`.
pub fn parse_deterministic(text: &str, table: &ConversionTable) -> GrammarOutput {
    grammar::parse(text, table)
}

pub fn extract_ingredients(
    recipe: &RawRecipe,
    mode: ExtractionMode,
    table: &ConversionTable,
    gateway: Option<&LlmGateway>,
) -> Result<ExtractionReport, RecipeError> {
    let grammar = grammar::parse(&recipe.text, table);
    let report = match mode {
        ExtractionMode::Deterministic => ExtractionReport {
            ingredients: grammar.ingredients,
            mode,
            fallback_reason: None,
            skipped: grammar.skipped,
        },
        ExtractionMode::Llm => {
            let gateway = gateway.ok_or(RecipeError::NoGateway)?;
            match extract_with_gateway(&recipe.text, gateway, &grammar) {
                Ok(ingredients) => ExtractionReport { ingredients, mode, fallback_reason: None, skipped: Vec::new() },
                Err(e) => {
                    tracing::warn!(error = %e, "LLM extraction failed, using the grammar");
                    ExtractionReport {
                        ingredients: grammar.ingredients,
                        mode: ExtractionMode::Deterministic,
                        fallback_reason: Some(e.to_string()),
                        skipped: grammar.skipped,
                    }
                }
            }
        }
    };
    if report.ingredients.is_empty() {
        return Err(RecipeError::NoIngredients);
    }
    Ok(report)
}

fn extract_with_gateway(
    text: &str,
    gateway: &LlmGateway,
    grammar: &GrammarOutput,
) -> Result<Vec<ParsedIngredient>, GatewayError> {
    let extracted = gateway.extract_ingredients(text)?;
    Ok(extracted
        .into_iter()
        .filter_map(|item| {
            let name = normalize_name(&item.name);
            if name.is_empty() || !(item.quantity > 0.0) {
                return None;
            }
            let provenance = grammar
                .ingredients
                .iter()
                .find(|g| g.name == name && g.grams == item.quantity)
                .map_or(Provenance::Estimated, |g| g.provenance);
            Some(ParsedIngredient { name, grams: item.quantity, provenance })
        })
        .collect())
}
