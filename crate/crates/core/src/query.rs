//! Impact lookup for confirmed products and the results-text serialization.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::{DatabaseSource, MarketShare, ProductKey, ProductRecord, ProductStore, Stage, StageShare, REFERENCE_GRAMS};
use crate::matching::{ConfirmedMatches, MatchStatus};
use crate::num::format_sig;
use crate::region;

/// Significant digits for impacts in the results text.
const TEXT_DIGITS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("product `{0}` is not in the store")]
    UnknownProduct(String),
    #[error("product `{0}` has no impact data in any region")]
    NoData(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledMarketShare {
    pub region: String,
    pub share_pct: f64,
    /// kg CO2-eq for the queried grams, supplied entirely from `region`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emissions: Option<f64>,
}

/// One product's data scaled to the ingredient quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub product_id: ProductKey,
    pub source: DatabaseSource,
    pub name: String,
    pub grams: f64,
    /// Regions whose records were used, sorted.
    pub regions: Vec<String>,
    pub country_fallback: bool,
    /// The value used for aggregation, kg CO2-eq.
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub production_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageShare>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub market_shares: Vec<ScaledMarketShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientQueryResult {
    pub index: usize,
    pub ingredient: String,
    pub grams: f64,
    pub entries: Vec<SourceEntry>,
}

fn scale(per_100g: f64, grams: f64) -> f64 {
    per_100g * grams / REFERENCE_GRAMS
}

/// Share-weighted mean of regional emissions, weights renormalized over
/// shares that report emissions, scaled to `grams`.
pub fn bonsai_market_total(shares: &[MarketShare], grams: f64) -> Option<f64> {
    let (weighted, weight) = shares
        .iter()
        .filter_map(|s| s.emissions.map(|e| (s.share_pct, e)))
        .fold((0.0, 0.0), |(acc, w), (share, e)| (acc + share * e, w + share));
    (weight > 0.0).then(|| scale(weighted / weight, grams))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-100 g value used for totals: market total when computable for BONSAI, else the record total.
fn effective_per_100g(rec: &ProductRecord) -> Option<f64> {
    if rec.source == DatabaseSource::Bonsai {
        if let Some(market) = bonsai_market_total(&rec.market_shares, REFERENCE_GRAMS) {
            return Some(market);
        }
    }
    rec.total_impact
}

/// Looks `key` up for `target_country`, averaging over the other regions when
/// the target has no record with data.
pub fn query_product(store: &ProductStore, key: &ProductKey, grams: f64, target_country: &str) -> Result<SourceEntry, QueryError> {
    let all = store.lookup(key);
    let first = all.first().ok_or_else(|| QueryError::UnknownProduct(key.to_string()))?;
    let with_data: Vec<&ProductRecord> = all.iter().copied().filter(|r| effective_per_100g(r).is_some()).collect();
    let target: Vec<&ProductRecord> =
        with_data.iter().copied().filter(|r| r.region.eq_ignore_ascii_case(target_country)).collect();
    let (used, fallback) = if target.is_empty() { (with_data, true) } else { (target, false) };
    if used.is_empty() {
        return Err(QueryError::NoData(key.to_string()));
    }

    let total = mean(used.iter().filter_map(|r| effective_per_100g(r))).expect("records with data");
    let production = mean(used.iter().filter_map(|r| r.total_impact));
    let market = if first.source == DatabaseSource::Bonsai {
        mean(used.iter().filter_map(|r| bonsai_market_total(&r.market_shares, REFERENCE_GRAMS)))
    } else {
        None
    };
    let quality = mean(used.iter().filter_map(|r| r.quality_rating));

    let stages = Stage::ALL
        .iter()
        .filter_map(|stage| {
            let reported: Vec<&StageShare> =
                used.iter().flat_map(|r| &r.stage_breakdown).filter(|s| s.stage == *stage).collect();
            let impact = mean(reported.iter().map(|s| s.impact))?;
            let percentage = mean(reported.iter().map(|s| s.percentage))?;
            Some(StageShare { stage: *stage, impact: scale(impact, grams), percentage })
        })
        .collect();

    // Shares are averaged per supplying region across the used records.
    let mut share_acc: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in &used {
        for share in &rec.market_shares {
            let slot = share_acc.entry(share.region.as_str()).or_default();
            slot.0.push(share.share_pct);
            if let Some(e) = share.emissions {
                slot.1.push(e);
            }
        }
    }
    let mut market_shares: Vec<ScaledMarketShare> = share_acc
        .into_iter()
        .map(|(region, (pcts, ems))| ScaledMarketShare {
            region: region.to_string(),
            share_pct: mean(pcts).expect("non-empty"),
            emissions: mean(ems).map(|e| scale(e, grams)),
        })
        .collect();
    market_shares.sort_by(|a, b| b.share_pct.total_cmp(&a.share_pct).then_with(|| a.region.cmp(&b.region)));

    let mut regions: Vec<String> = used.iter().map(|r| r.region.clone()).collect();
    regions.sort();
    regions.dedup();

    Ok(SourceEntry {
        product_id: key.clone(),
        source: first.source,
        name: first.name.clone(),
        grams,
        regions,
        country_fallback: fallback,
        total: scale(total, grams),
        production_total: production.map(|p| scale(p, grams)),
        market_total: market.map(|m| scale(m, grams)),
        quality_rating: quality,
        stages,
        market_shares,
    })
}

/// Queries every confirmed product. Products without data are skipped with a note.
pub fn query_matches(store: &ProductStore, matches: &ConfirmedMatches) -> (Vec<IngredientQueryResult>, Vec<String>) {
    let mut notes = Vec::new();
    let results = matches
        .ingredients
        .iter()
        .map(|ci| {
            let mut entries = Vec::new();
            if ci.status == MatchStatus::Matched {
                for product in &ci.products {
                    match query_product(store, &product.product_id, ci.ingredient.grams, &matches.target_country) {
                        Ok(e) => entries.push(e),
                        Err(e) => notes.push(format!("{}: {e}", ci.ingredient.name)),
                    }
                }
            }
            entries.sort_by(|a, b| (a.source, &a.name).cmp(&(b.source, &b.name)));
            IngredientQueryResult { index: ci.index, ingredient: ci.ingredient.name.clone(), grams: ci.ingredient.grams, entries }
        })
        .collect();
    (results, notes)
}

fn fmt_grams(grams: f64) -> String {
    if grams.fract() == 0.0 && grams.abs() < 1e15 {
        format!("{}", grams as i64)
    } else {
        format_sig(grams, 4)
    }
}

fn kg(v: f64) -> String {
    format!("{} kg CO2-eq", format_sig(v, TEXT_DIGITS))
}

fn block_header(entry: &SourceEntry) -> String {
    let label = match entry.source {
        DatabaseSource::Bonsai => "BONSAI database",
        DatabaseSource::Agribalyse => "Agribalyse database",
        DatabaseSource::BigClimate => "BigClimateDatabase",
    };
    let names = region::join_names(entry.regions.iter().map(String::as_str));
    if entry.country_fallback {
        format!("{label} results for '{}' (DATA FROM {}):", entry.name, names.to_uppercase())
    } else {
        format!("{label} results for '{}' in {names}:", entry.name)
    }
}

fn write_entry(out: &mut String, e: &SourceEntry) {
    let g = fmt_grams(e.grams);
    let _ = writeln!(out, "{}", block_header(e));
    if e.source == DatabaseSource::Bonsai {
        if let Some(p) = e.production_total {
            let _ = writeln!(out, "- Production impact for {g} grams: {}", kg(p));
        }
        if let Some(m) = e.market_total {
            let _ = writeln!(out, "- Market impact for {g} grams: {}", kg(m));
        }
        for s in &e.market_shares {
            let name = region::display_name(&s.region);
            match s.emissions {
                Some(em) => {
                    let _ = writeln!(out, "- Market share from {name}: {:.1}%, impact for {g} grams: {}", s.share_pct, kg(em));
                }
                None => {
                    let _ = writeln!(out, "- Market share from {name}: {:.1}%, impact not available", s.share_pct);
                }
            }
        }
    } else {
        let _ = writeln!(out, "- Impact for {g} grams: {}", kg(e.total));
    }
    if let Some(q) = e.quality_rating {
        let _ = writeln!(out, "- Data quality rating: {q}");
    }
    for s in &e.stages {
        let _ = writeln!(
            out,
            "- {} impact for {g} grams: {}, Percentage: {:.1}%",
            Stage::label(s.stage, e.source),
            kg(s.impact),
            s.percentage
        );
    }
}

/// One section per ingredient, one block per product.
pub fn assemble_results_text(results: &[IngredientQueryResult]) -> String {
    let mut sections = Vec::with_capacity(results.len());
    for r in results {
        let mut s = String::new();
        let _ = writeln!(s, "Results for selected most similar items to '{}':", r.ingredient);
        s.push('\n');
        if r.entries.is_empty() {
            s.push_str("No results are provided for this ingredient.\n");
        }
        let blocks: Vec<String> = r
            .entries
            .iter()
            .map(|e| {
                let mut b = String::new();
                write_entry(&mut b, e);
                b
            })
            .collect();
        s.push_str(&blocks.join("\n"));
        sections.push(s);
    }
    sections.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn share(region: &str, pct: f64, e: Option<f64>) -> MarketShare {
        MarketShare { region: region.into(), share_pct: pct, emissions: e }
    }

    #[test]
    fn market_total_cases() {
        assert_eq!(bonsai_market_total(&[share("IT", 100.0, Some(0.5))], 100.0), Some(0.5));
        let two = bonsai_market_total(&[share("IT", 50.0, Some(0.4)), share("DE", 50.0, Some(0.6))], 100.0).unwrap();
        assert!((two - 0.5).abs() < 1e-12);
        assert_eq!(bonsai_market_total(&[share("IT", 100.0, None)], 100.0), None);
        assert_eq!(bonsai_market_total(&[], 100.0), None);
    }

    #[test]
    fn olives_weighted_sum() {
        // per 100 g emissions; Spain carries no emissions and drops out of the weights
        let shares = [
            share("IT", 39.0, Some(0.18)),
            share("DE", 34.0, Some(0.20)),
            share("PT", 25.0, Some(0.176)),
            share("ES", 2.0, None),
        ];
        let got = bonsai_market_total(&shares, 30.0).unwrap();
        let oracle = (39.0 * 0.18 + 34.0 * 0.20 + 25.0 * 0.176) / 98.0 * 0.3;
        assert!((got - oracle).abs() < 1e-12);
    }

    fn store() -> ProductStore {
        let mut fr = ProductRecord::new(DatabaseSource::Agribalyse, "Pizza base, raw", "FR", Some(0.01955));
        fr.quality_rating = Some(2.3277205962237506);
        fr.stage_breakdown = vec![StageShare { stage: Stage::Agriculture, impact: 0.001335, percentage: 6.8 }];
        let a = ProductRecord::new(DatabaseSource::BigClimate, "Red onion", "DK", Some(0.1));
        let mut b = ProductRecord::new(DatabaseSource::BigClimate, "Red onion", "GB", Some(0.2));
        b.stage_breakdown = vec![StageShare { stage: Stage::Agriculture, impact: 0.1, percentage: 50.0 }];
        let empty = ProductRecord::new(DatabaseSource::BigClimate, "Mystery", "NL", None);
        ProductStore::new(vec![fr, a, b, empty])
    }

    #[test]
    fn fallback_averages_regions() {
        let s = store();
        let e = query_product(&s, &ProductKey::new(DatabaseSource::BigClimate, "Red onion"), 100.0, "NL").unwrap();
        assert!(e.country_fallback);
        assert!((e.total - 0.15).abs() < 1e-12);
        assert_eq!(e.regions, ["DK", "GB"]);
        // only GB reports the stage
        assert_eq!(e.stages[0].impact, 0.1);
        let pizza = query_product(&s, &ProductKey::new(DatabaseSource::Agribalyse, "Pizza base, raw"), 200.0, "NL").unwrap();
        assert!((pizza.total - 0.0391).abs() < 1e-12);
        assert!(pizza.country_fallback);
        let fr = query_product(&s, &ProductKey::new(DatabaseSource::Agribalyse, "Pizza base, raw"), 0.0, "FR").unwrap();
        assert!(!fr.country_fallback);
        assert_eq!(fr.total, 0.0);
    }

    #[test]
    fn errors() {
        let s = store();
        let err = query_product(&s, &ProductKey::from("bigclimate:nope"), 1.0, "NL").unwrap_err();
        assert!(matches!(err, QueryError::UnknownProduct(_)));
        let err = query_product(&s, &ProductKey::new(DatabaseSource::BigClimate, "Mystery"), 1.0, "NL").unwrap_err();
        assert!(matches!(err, QueryError::NoData(_)));
    }

    #[test]
    fn text_layout() {
        let s = store();
        let e = query_product(&s, &ProductKey::new(DatabaseSource::Agribalyse, "Pizza base, raw"), 200.0, "NL").unwrap();
        let text = assemble_results_text(&[IngredientQueryResult { index: 0, ingredient: "pizza dough".into(), grams: 200.0, entries: vec![e] }]);
        let expected = "Results for selected most similar items to 'pizza dough':\n\n\
Agribalyse database results for 'Pizza base, raw' (DATA FROM FRANCE):\n\
- Impact for 200 grams: 0.0391 kg CO2-eq\n\
- Data quality rating: 2.3277205962237506\n\
- Agriculture impact for 200 grams: 0.00267 kg CO2-eq, Percentage: 6.8%\n";
        assert_eq!(text, expected);
        assert_eq!(assemble_results_text(&[]), "");
    }
}
