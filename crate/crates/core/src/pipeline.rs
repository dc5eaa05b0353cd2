//! The four steps wired together over one store and its indices.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aggregate::{self, cooking_energy, detect_cooking, AggregateError, CookingConfig, DishTable, RecipeAssessment};
use crate::catalog::{DatabaseSource, ProductStore};
use crate::embedding::{build_index, Embedder, IndexError, IndexFileError, ProductIndex};
use crate::llm::LlmGateway;
use crate::matching::{self, ConfirmedMatches, MatchError, Proposal, SelectionMode, SelectionSet};
use crate::query::{self, IngredientQueryResult};
use crate::recipe::{self, ConversionTable, ExtractionMode, ExtractionReport, RawRecipe, RecipeError};
use crate::report::{self, REFERENCE_ACTIVITIES};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Recipe(#[from] RecipeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    IndexFile(#[from] IndexFileError),
    #[error("invalid engine configuration: {0}")]
    Config(String),
}

fn default_k() -> usize {
    matching::DEFAULT_K
}

fn default_floor() -> f64 {
    matching::DEFAULT_AUTO_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Candidates per source.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_floor")]
    pub auto_floor: f64,
    /// Accepted target countries; empty accepts any two-letter code.
    #[serde(default)]
    pub supported_countries: BTreeSet<String>,
    #[serde(default)]
    pub cooking: CookingConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k: default_k(),
            auto_floor: default_floor(),
            supported_countries: BTreeSet::new(),
            cooking: CookingConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }
}

/// Everything one assessment produced; serialized identically by every front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentBundle {
    pub recipe_text: String,
    pub target_country: String,
    pub selection_mode: SelectionMode,
    pub matches: ConfirmedMatches,
    pub query_results: Vec<IngredientQueryResult>,
    pub assessment: RecipeAssessment,
    pub results_text: String,
    pub report: String,
    pub follow_up_questions: Vec<String>,
}

impl AssessmentBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }
}

pub struct Engine {
    store: Arc<ProductStore>,
    indices: Vec<ProductIndex>,
    embedder: Arc<dyn Embedder>,
    gateway: Option<LlmGateway>,
    table: ConversionTable,
    dishes: DishTable,
    config: EngineConfig,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("records", &self.store.len())
            .field("indices", &self.indices.iter().map(|i| (i.source(), i.len())).collect::<Vec<_>>())
            .field("embedder", &self.embedder.fingerprint())
            .finish()
    }
}

impl Engine {
    /// Builds one index per source present in `store`.
    pub fn build(store: ProductStore, embedder: Arc<dyn Embedder>, config: EngineConfig) -> Result<Self, PipelineError> {
        let mut indices = Vec::new();
        for source in DatabaseSource::ALL {
            let records: Vec<_> = store.of_source(source).cloned().collect();
            if !records.is_empty() {
                indices.push(build_index(&records, embedder.as_ref())?);
            }
        }
        Self::with_indices(store, indices, embedder, config)
    }

    pub fn with_indices(
        store: ProductStore,
        mut indices: Vec<ProductIndex>,
        embedder: Arc<dyn Embedder>,
        config: EngineConfig,
    ) -> Result<Self, PipelineError> {
        if let Some(idx) = indices.iter().find(|i| i.fingerprint() != embedder.fingerprint()) {
            return Err(IndexError::FingerprintMismatch { query: embedder.fingerprint(), index: idx.fingerprint().to_string() }.into());
        }
        indices.sort_by_key(|i| i.source());
        if indices.windows(2).any(|w| w[0].source() == w[1].source()) {
            return Err(PipelineError::Config("two indices for one source".into()));
        }
        Ok(Engine {
            store: Arc::new(store),
            indices,
            embedder,
            gateway: None,
            table: ConversionTable::default(),
            dishes: DishTable::default(),
            config,
        })
    }

    /// Loads `{source}.mpix` files from `dir` for every source in the store.
    pub fn from_index_dir(
        store: ProductStore,
        dir: &Path,
        embedder: Arc<dyn Embedder>,
        config: EngineConfig,
    ) -> Result<Self, PipelineError> {
        let mut indices = Vec::new();
        for source in store.sources() {
            indices.push(ProductIndex::load(&dir.join(ProductIndex::file_name(source)))?);
        }
        Self::with_indices(store, indices, embedder, config)
    }

    pub fn with_gateway(mut self, gateway: LlmGateway) -> Self {
        self.gateway = Some(gateway);
        self
    }

    pub fn with_table(mut self, table: ConversionTable) -> Self {
        self.table = table;
        self
    }

    pub fn with_dishes(mut self, dishes: DishTable) -> Self {
        self.dishes = dishes;
        self
    }

    pub fn store(&self) -> &ProductStore {
        &self.store
    }

    pub fn indices(&self) -> &[ProductIndex] {
        &self.indices
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn gateway(&self) -> Option<&LlmGateway> {
        self.gateway.as_ref()
    }

    pub fn conversion_table(&self) -> &ConversionTable {
        &self.table
    }

    pub fn recipe(&self, text: &str, country: &str) -> Result<RawRecipe, PipelineError> {
        let recipe = RawRecipe::new(text, country)?;
        recipe.check_country(&self.config.supported_countries)?;
        Ok(recipe)
    }

    pub fn parse(&self, recipe: &RawRecipe, mode: ExtractionMode) -> Result<ExtractionReport, PipelineError> {
        Ok(recipe::extract_ingredients(recipe, mode, &self.table, self.gateway.as_ref())?)
    }

    pub fn propose(&self, ingredients: &[recipe::ParsedIngredient], target_country: &str) -> Result<Proposal, PipelineError> {
        Ok(matching::propose(ingredients, &self.indices, self.embedder.as_ref(), &self.store, target_country, self.config.k)?)
    }

    pub fn auto_select(&self, proposal: &Proposal) -> SelectionSet {
        matching::auto_select(proposal, self.config.auto_floor)
    }

    pub fn confirm(&self, proposal: &Proposal, selection: &SelectionSet) -> Result<ConfirmedMatches, PipelineError> {
        Ok(matching::confirm(proposal, selection)?)
    }

    /// Query, aggregation and report for confirmed matches.
    pub fn assess(&self, recipe_text: &str, matches: &ConfirmedMatches) -> Result<AssessmentBundle, PipelineError> {
        let (query_results, mut query_notes) = query::query_matches(&self.store, matches);
        let names = matches.ingredients.iter().map(|c| c.ingredient.name.as_str());
        let spec = detect_cooking(recipe_text, names, &self.dishes);
        let cooking = cooking_energy(&spec, &self.config.cooking, &matches.target_country)?;
        let mut assessment = aggregate::assess(&matches.target_country, &query_results, cooking, &REFERENCE_ACTIVITIES);
        assessment.notes.append(&mut query_notes);
        let follow_up_questions = report::follow_up_questions(&assessment, &query_results);
        let report = report::build_report(&assessment, &follow_up_questions);
        let results_text = query::assemble_results_text(&query_results);
        Ok(AssessmentBundle {
            recipe_text: recipe_text.to_string(),
            target_country: matches.target_country.clone(),
            selection_mode: matches.mode,
            matches: matches.clone(),
            query_results,
            assessment,
            results_text,
            report,
            follow_up_questions,
        })
    }

    /// Parse, propose, rank-1 selection and assessment in one call.
    pub fn run_auto(&self, recipe: &RawRecipe, mode: ExtractionMode) -> Result<AssessmentBundle, PipelineError> {
        let parsed = self.parse(recipe, mode)?;
        let proposal = self.propose(&parsed.ingredients, &recipe.target_country)?;
        let selection = self.auto_select(&proposal);
        let matches = self.confirm(&proposal, &selection)?;
        self.assess(&recipe.text, &matches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ProductRecord;
    use crate::embedding::LexicalEmbedder;

    fn engine() -> Engine {
        let store = ProductStore::new(vec![
            ProductRecord::new(DatabaseSource::BigClimate, "Rice", "NL", Some(0.4)),
            ProductRecord::new(DatabaseSource::Agribalyse, "Rice, cooked", "FR", Some(0.1)),
            ProductRecord::new(DatabaseSource::BigClimate, "Apple", "NL", Some(0.03)),
        ]);
        Engine::build(store, Arc::new(LexicalEmbedder), EngineConfig::default()).unwrap()
    }

    #[test]
    fn auto_run() {
        let e = engine();
        let recipe = e.recipe("Ingredients: 150g of rice, 100g of apple", "NL").unwrap();
        let bundle = e.run_auto(&recipe, ExtractionMode::Deterministic).unwrap();
        let a = &bundle.assessment;
        assert_eq!(a.ingredients.len(), 2);
        assert!(a.cooking.required);
        assert!(a.total_min <= a.total_avg && a.total_avg <= a.total_max);
        let viz_sum: f64 = a.visualization.impacts.iter().sum();
        assert!((viz_sum - a.total_avg).abs() < 1e-12);
        assert!(bundle.report.starts_with("Main ingredients by impact:\n"));
    }

    #[test]
    fn fingerprint_checked() {
        struct Other;
        impl Embedder for Other {
            fn fingerprint(&self) -> String {
                "other".into()
            }
            fn dim(&self) -> usize {
                256
            }
            fn embed_batch(&self, t: &[&str]) -> Result<Vec<crate::embedding::EmbeddingVector>, crate::embedding::EmbedError> {
                LexicalEmbedder.embed_batch(t)
            }
        }
        let e = engine();
        let store = e.store().clone();
        let err = Engine::with_indices(store, e.indices().to_vec(), Arc::new(Other), EngineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Index(IndexError::FingerprintMismatch { .. })));
    }

    #[test]
    fn supported_countries() {
        let mut config = EngineConfig::default();
        config.supported_countries.insert("NL".into());
        let e = Engine::build(engine().store().clone(), Arc::new(LexicalEmbedder), config).unwrap();
        assert!(e.recipe("rice", "FR").is_err());
        assert!(e.recipe("rice", "nl").is_ok());
    }
}
