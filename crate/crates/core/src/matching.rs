//! Candidate proposal and the human-in-the-loop selection step.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{DatabaseSource, ProductKey, ProductStore};
use crate::embedding::{Embedder, ProductIndex, SearchTextError};
use crate::recipe::{normalize_name, ParsedIngredient};

pub const DEFAULT_K: usize = 3;
/// Lexical similarity floor for automatic selection.
pub const DEFAULT_AUTO_FLOOR: f64 = 0.35;
/// Similarity at or above which a candidate counts as the same name.
pub const EXACT_MATCH: f64 = 0.999;

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error("ingredient {0} does not exist in the proposal")]
    UnknownIngredient(String),
    #[error("product `{product_id}` was not proposed for ingredient {ingredient}")]
    NotProposed { ingredient: usize, product_id: String },
    #[error(transparent)]
    Search(#[from] SearchTextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub product_id: ProductKey,
    pub source: DatabaseSource,
    pub name: String,
    pub similarity: f64,
    pub has_target_country_data: bool,
}

impl MatchCandidate {
    /// Name with the asterisk used for products lacking target-country data.
    pub fn display_name(&self) -> String {
        if self.has_target_country_data {
            self.name.clone()
        } else {
            format!("{} *", self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub source: DatabaseSource,
    pub candidates: Vec<MatchCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientCandidates {
    pub index: usize,
    pub ingredient: ParsedIngredient,
    pub groups: Vec<CandidateGroup>,
}

impl IngredientCandidates {
    pub fn all(&self) -> impl Iterator<Item = &MatchCandidate> {
        self.groups.iter().flat_map(|g| &g.candidates)
    }

    pub fn find(&self, key: &ProductKey) -> Option<&MatchCandidate> {
        self.all().find(|c| &c.product_id == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub target_country: String,
    pub ingredients: Vec<IngredientCandidates>,
}

/// Top `k` products per index for every ingredient.
pub fn propose(
    ingredients: &[ParsedIngredient],
    indices: &[ProductIndex],
    embedder: &dyn Embedder,
    store: &ProductStore,
    target_country: &str,
    k: usize,
) -> Result<Proposal, MatchError> {
    let mut out = Vec::with_capacity(ingredients.len());
    for (index, ingredient) in ingredients.iter().enumerate() {
        let mut groups = Vec::with_capacity(indices.len());
        for idx in indices {
            let hits = idx.search_text(&ingredient.name, embedder, k)?;
            let candidates = hits
                .into_iter()
                .map(|h| MatchCandidate {
                    has_target_country_data: store.has_region(&h.key, target_country),
                    product_id: h.key,
                    source: idx.source(),
                    name: h.name,
                    similarity: h.similarity,
                })
                .collect();
            groups.push(CandidateGroup { source: idx.source(), candidates });
        }
        out.push(IngredientCandidates { index, ingredient: ingredient.clone(), groups });
    }
    Ok(Proposal { target_country: target_country.to_string(), ingredients: out })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SelectionMode {
    #[default]
    User,
    AutoTop1,
}

/// Chosen product ids per ingredient index. Absent indices select nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionSet {
    #[serde(default)]
    pub mode: SelectionMode,
    #[serde(default)]
    pub selections: BTreeMap<usize, Vec<ProductKey>>,
}

impl SelectionSet {
    /// Resolves keys that are either ingredient indices or ingredient names.
    pub fn from_keyed(
        proposal: &Proposal,
        keyed: &BTreeMap<String, Vec<ProductKey>>,
        mode: SelectionMode,
    ) -> Result<Self, MatchError> {
        let mut selections = BTreeMap::new();
        for (key, ids) in keyed {
            let index = match key.trim().parse::<usize>() {
                Ok(i) if i < proposal.ingredients.len() => i,
                Ok(_) => return Err(MatchError::UnknownIngredient(key.clone())),
                Err(_) => {
                    let wanted = normalize_name(key);
                    proposal
                        .ingredients
                        .iter()
                        .find(|c| c.ingredient.name == wanted)
                        .map(|c| c.index)
                        .ok_or_else(|| MatchError::UnknownIngredient(key.clone()))?
                }
            };
            selections.entry(index).or_insert_with(Vec::new).extend(ids.iter().cloned());
        }
        Ok(SelectionSet { mode, selections })
    }
}

/// Rank-1 candidate per source at or above `floor`.
pub fn auto_select(proposal: &Proposal, floor: f64) -> SelectionSet {
    let selections = proposal
        .ingredients
        .iter()
        .map(|ic| {
            let picks = ic
                .groups
                .iter()
                .filter_map(|g| g.candidates.first())
                .filter(|c| c.similarity >= floor)
                .map(|c| c.product_id.clone())
                .collect();
            (ic.index, picks)
        })
        .collect();
    SelectionSet { mode: SelectionMode::AutoTop1, selections }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchStatus {
    Matched,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmedProduct {
    pub product_id: ProductKey,
    pub source: DatabaseSource,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmedIngredient {
    pub index: usize,
    pub ingredient: ParsedIngredient,
    pub status: MatchStatus,
    pub products: Vec<ConfirmedProduct>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmedMatches {
    pub target_country: String,
    pub mode: SelectionMode,
    pub ingredients: Vec<ConfirmedIngredient>,
}

impl ConfirmedMatches {
    pub fn unmatched(&self) -> impl Iterator<Item = &ConfirmedIngredient> {
        self.ingredients.iter().filter(|c| c.status == MatchStatus::Unmatched)
    }
}

/// Checks every id against the proposal; empty selections become unmatched.
pub fn confirm(proposal: &Proposal, selection: &SelectionSet) -> Result<ConfirmedMatches, MatchError> {
    if let Some(bad) = selection.selections.keys().find(|i| **i >= proposal.ingredients.len()) {
        return Err(MatchError::UnknownIngredient(bad.to_string()));
    }
    let mut ingredients = Vec::with_capacity(proposal.ingredients.len());
    for ic in &proposal.ingredients {
        let chosen = selection.selections.get(&ic.index).map(Vec::as_slice).unwrap_or(&[]);
        let mut seen = BTreeSet::new();
        let mut products = Vec::new();
        for key in chosen {
            let candidate = ic.find(key).ok_or_else(|| MatchError::NotProposed {
                ingredient: ic.index,
                product_id: key.to_string(),
            })?;
            if seen.insert(key.clone()) {
                products.push(ConfirmedProduct {
                    product_id: candidate.product_id.clone(),
                    source: candidate.source,
                    name: candidate.name.clone(),
                });
            }
        }
        products.sort_by(|a, b| (a.source, &a.name).cmp(&(b.source, &b.name)));
        let (status, note) = if products.is_empty() {
            (MatchStatus::Unmatched, Some("no products selected; excluded from totals".to_string()))
        } else {
            (MatchStatus::Matched, None)
        };
        ingredients.push(ConfirmedIngredient { index: ic.index, ingredient: ic.ingredient.clone(), status, products, note });
    }
    Ok(ConfirmedMatches { target_country: proposal.target_country.clone(), mode: selection.mode, ingredients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ProductRecord;
    use crate::embedding::{build_index, LexicalEmbedder};
    use crate::recipe::Provenance;

    fn fixture() -> (ProductStore, Vec<ProductIndex>) {
        let store = ProductStore::new(vec![
            ProductRecord::new(DatabaseSource::BigClimate, "Red onion", "NL", Some(0.07)),
            ProductRecord::new(DatabaseSource::BigClimate, "Olives", "NL", Some(0.19)),
            ProductRecord::new(DatabaseSource::BigClimate, "Garlic", "NL", Some(0.1)),
            ProductRecord::new(DatabaseSource::BigClimate, "Onions, dry", "DK", Some(0.05)),
            ProductRecord::new(DatabaseSource::Agribalyse, "Onion, raw", "FR", Some(0.03)),
        ]);
        let indices = [DatabaseSource::Agribalyse, DatabaseSource::BigClimate]
            .iter()
            .map(|s| {
                let recs: Vec<_> = store.of_source(*s).cloned().collect();
                build_index(&recs, &LexicalEmbedder).unwrap()
            })
            .collect();
        (store, indices)
    }

    fn ing(name: &str) -> ParsedIngredient {
        ParsedIngredient { name: name.into(), grams: 70.0, provenance: Provenance::Estimated }
    }

    #[test]
    fn exact_name_first_with_flags() {
        let (store, indices) = fixture();
        let p = propose(&[ing("red onion")], &indices, &LexicalEmbedder, &store, "NL", 3).unwrap();
        let group = &p.ingredients[0].groups[1];
        assert_eq!(group.source, DatabaseSource::BigClimate);
        assert_eq!(group.candidates[0].name, "Red onion");
        assert!(group.candidates[0].similarity >= EXACT_MATCH);
        let agri = &p.ingredients[0].groups[0].candidates[0];
        assert!(!agri.has_target_country_data);
        assert_eq!(agri.display_name(), "Onion, raw *");
        assert!(p.ingredients[0].groups.iter().all(|g| g.candidates.len() <= 3));
    }

    #[test]
    fn empty_ingredients_empty_proposal() {
        let (store, indices) = fixture();
        assert!(propose(&[], &indices, &LexicalEmbedder, &store, "NL", 3).unwrap().ingredients.is_empty());
    }

    #[test]
    fn confirm_rejects_unproposed() {
        let (store, indices) = fixture();
        let p = propose(&[ing("red onion")], &indices, &LexicalEmbedder, &store, "NL", 1).unwrap();
        let sel = SelectionSet {
            mode: SelectionMode::User,
            selections: BTreeMap::from([(0, vec![ProductKey::from("bigclimate:olives")])]),
        };
        assert!(matches!(confirm(&p, &sel), Err(MatchError::NotProposed { ingredient: 0, .. })));
    }

    #[test]
    fn empty_selection_unmatched() {
        let (store, indices) = fixture();
        let p = propose(&[ing("red onion"), ing("olives")], &indices, &LexicalEmbedder, &store, "NL", 3).unwrap();
        let sel = SelectionSet {
            mode: SelectionMode::User,
            selections: BTreeMap::from([(0, vec![ProductKey::new(DatabaseSource::BigClimate, "Red onion")])]),
        };
        let c = confirm(&p, &sel).unwrap();
        assert_eq!(c.ingredients[0].status, MatchStatus::Matched);
        assert_eq!(c.ingredients[0].products.len(), 1);
        assert_eq!(c.ingredients[1].status, MatchStatus::Unmatched);
        assert!(c.ingredients[1].note.is_some());
    }

    #[test]
    fn auto_floor() {
        let (store, indices) = fixture();
        let p = propose(&[ing("red onion"), ing("unobtainium")], &indices, &LexicalEmbedder, &store, "NL", 3).unwrap();
        let sel = auto_select(&p, DEFAULT_AUTO_FLOOR);
        assert!(sel.selections[&0].contains(&ProductKey::new(DatabaseSource::BigClimate, "Red onion")));
        assert!(sel.selections[&1].is_empty());
        assert!(p.ingredients[1].all().all(|c| c.similarity < EXACT_MATCH));
        let c = confirm(&p, &sel).unwrap();
        assert_eq!(c.unmatched().count(), 1);
    }

    #[test]
    fn keyed_selection() {
        let (store, indices) = fixture();
        let p = propose(&[ing("red onion"), ing("olives")], &indices, &LexicalEmbedder, &store, "NL", 3).unwrap();
        let keyed = BTreeMap::from([
            ("Olives".to_string(), vec![ProductKey::from("bigclimate:olives")]),
            ("0".to_string(), vec![]),
        ]);
        let sel = SelectionSet::from_keyed(&p, &keyed, SelectionMode::User).unwrap();
        assert_eq!(sel.selections[&1].len(), 1);
        let bad = BTreeMap::from([("7".to_string(), vec![])]);
        assert!(SelectionSet::from_keyed(&p, &bad, SelectionMode::User).is_err());
    }
}
