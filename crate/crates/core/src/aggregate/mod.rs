//! Per-ingredient ranges, cooking and recipe totals.
//!
//! Every number in an assessment is computed here; nothing is taken from
//! model output.

mod cooking;

use serde::{Deserialize, Serialize};

use crate::catalog::DatabaseSource;
use crate::query::IngredientQueryResult;
use crate::report::{self, Equivalence, ReferenceActivity, VisualizationData};

pub use cooking::{
    cooking_energy, detect_cooking, CookingConfig, CookingImpact, CookingMethod, CookingSpec, DetectedBy, DishTable,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AggregateError {
    #[error("cooking duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("no appliance power configured for {0:?}")]
    NoPower(CookingMethod),
    #[error("invalid dish table: {0}")]
    InvalidDishTable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub source: DatabaseSource,
    pub name: String,
    pub regions: Vec<String>,
    pub country_fallback: bool,
    pub impact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientImpact {
    pub index: usize,
    pub ingredient: String,
    pub grams: f64,
    pub matched: bool,
    pub min: f64,
    pub max: f64,
    pub midpoint: f64,
    pub contributions: Vec<Contribution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl IngredientImpact {
    /// Region codes behind the contributions, sorted and unique.
    pub fn regions(&self) -> Vec<&str> {
        let mut r: Vec<&str> = self.contributions.iter().flat_map(|c| c.regions.iter().map(String::as_str)).collect();
        r.sort();
        r.dedup();
        r
    }

    pub fn has_fallback(&self) -> bool {
        self.contributions.iter().any(|c| c.country_fallback)
    }
}

/// Min and max over the scaled totals; midpoint is `(min + max) / 2`.
pub fn aggregate_ingredient(result: &IngredientQueryResult) -> IngredientImpact {
    let contributions: Vec<Contribution> = result
        .entries
        .iter()
        .map(|e| Contribution {
            source: e.source,
            name: e.name.clone(),
            regions: e.regions.clone(),
            country_fallback: e.country_fallback,
            impact: e.total,
        })
        .collect();
    let mut notes = Vec::new();
    let (min, max) = if contributions.is_empty() {
        notes.push("unmatched: no results are provided for this ingredient; excluded from totals".to_string());
        (0.0, 0.0)
    } else {
        let values = contributions.iter().map(|c| c.impact);
        (values.clone().fold(f64::INFINITY, f64::min), values.fold(f64::NEG_INFINITY, f64::max))
    };
    for c in contributions.iter().filter(|c| c.country_fallback) {
        notes.push(format!(
            "{} ({}): no target-country record, data from {}",
            c.name,
            c.source.display_name(),
            crate::region::join_names(c.regions.iter().map(String::as_str))
        ));
    }
    IngredientImpact {
        index: result.index,
        ingredient: result.ingredient.clone(),
        grams: result.grams,
        matched: !contributions.is_empty(),
        min,
        max,
        midpoint: (min + max) / 2.0,
        contributions,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub total_min: f64,
    pub total_max: f64,
    pub total_avg: f64,
}

/// Exact sums of ingredient and cooking ranges.
pub fn total(ingredients: &[IngredientImpact], cooking: &CookingImpact) -> Totals {
    let sum = |f: fn(&IngredientImpact) -> f64| ingredients.iter().map(f).sum::<f64>();
    Totals {
        total_min: sum(|i| i.min) + cooking.min,
        total_max: sum(|i| i.max) + cooking.max,
        total_avg: sum(|i| i.midpoint) + cooking.midpoint,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeAssessment {
    pub target_country: String,
    pub ingredients: Vec<IngredientImpact>,
    pub cooking: CookingImpact,
    pub total_min: f64,
    pub total_max: f64,
    pub total_avg: f64,
    pub equivalences: Vec<Equivalence>,
    pub visualization: VisualizationData,
    pub unmatched: Vec<String>,
    pub notes: Vec<String>,
}

/// Builds the full assessment from query results and the cooking estimate.
pub fn assess(
    target_country: &str,
    results: &[IngredientQueryResult],
    cooking: CookingImpact,
    activities: &[ReferenceActivity],
) -> RecipeAssessment {
    let ingredients: Vec<IngredientImpact> = results.iter().map(aggregate_ingredient).collect();
    let totals = total(&ingredients, &cooking);
    let unmatched = ingredients.iter().filter(|i| !i.matched).map(|i| i.ingredient.clone()).collect();
    let notes = ingredients.iter().flat_map(|i| i.notes.iter().map(move |n| format!("{}: {n}", i.ingredient))).collect();
    let mut assessment = RecipeAssessment {
        target_country: target_country.to_string(),
        ingredients,
        cooking,
        total_min: totals.total_min,
        total_max: totals.total_max,
        total_avg: totals.total_avg,
        equivalences: report::equivalences(totals.total_avg, activities, report::DEFAULT_EQUIVALENCES),
        visualization: VisualizationData::default(),
        unmatched,
        notes,
    };
    assessment.visualization = report::visualization_data(&assessment);
    assessment
}
