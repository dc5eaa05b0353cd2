#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::sync::Arc;

use mealprint_core::catalog::{CatalogManifest, ProductStore};
use mealprint_core::embedding::LexicalEmbedder;
use mealprint_core::{Engine, EngineConfig};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn store() -> ProductStore {
    CatalogManifest::load(&fixtures().join("catalogs/catalogs.json")).unwrap().ingest().unwrap().store
}

pub fn engine() -> Engine {
    Engine::build(store(), Arc::new(LexicalEmbedder), EngineConfig::default()).unwrap()
}

pub fn pizza_text() -> String {
    std::fs::read_to_string(fixtures().join("recipes/veggie_pizza.txt")).unwrap().trim().to_string()
}

use std::collections::BTreeMap;

use mealprint_core::catalog::ProductKey;
use mealprint_core::matching::{SelectionMode, SelectionSet};
use mealprint_core::pipeline::AssessmentBundle;
use mealprint_core::recipe::ExtractionMode;

pub fn user_choices() -> BTreeMap<String, Vec<ProductKey>> {
    let text = std::fs::read_to_string(fixtures().join("selections/veggie_pizza_user.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// The pizza recipe assessed with the recorded user choices.
pub fn user_bundle(engine: &Engine) -> AssessmentBundle {
    let recipe = engine.recipe(&pizza_text(), "NL").unwrap();
    let parsed = engine.parse(&recipe, ExtractionMode::Deterministic).unwrap();
    let proposal = engine.propose(&parsed.ingredients, "NL").unwrap();
    let selection = SelectionSet::from_keyed(&proposal, &user_choices(), SelectionMode::User).unwrap();
    let matches = engine.confirm(&proposal, &selection).unwrap();
    engine.assess(&recipe.text, &matches).unwrap()
}

/// Compares against a stored file; `MEALPRINT_BLESS=1` rewrites it.
pub fn golden(name: &str, actual: &str) {
    let path = fixtures().join("golden").join(name);
    if std::env::var("MEALPRINT_BLESS").as_deref() == Ok("1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}
