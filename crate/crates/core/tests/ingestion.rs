mod common;

use std::collections::BTreeSet;

use mealprint_core::catalog::{load_catalog, validate_store, ColumnMapping, DatabaseSource, ProductKey, ProductStore};

fn agribalyse_mapping() -> ColumnMapping {
    ColumnMapping::load(&common::fixtures().join("catalogs/agribalyse.mapping.json")).unwrap()
}

#[test]
fn fixture_catalogs_load_without_rejections() {
    let manifest = mealprint_core::catalog::CatalogManifest::load(&common::fixtures().join("catalogs/catalogs.json")).unwrap();
    let got = manifest.ingest().unwrap();
    for report in &got.reports {
        assert!(report.rejections.is_empty(), "{report:?}");
        assert_eq!(report.rows, report.accepted);
    }
    let counts: Vec<usize> = got.reports.iter().map(|r| r.accepted).collect();
    assert_eq!(counts, vec![16, 22, 27]);
}

#[test]
fn validator_finds_nothing_in_fixtures() {
    let store = common::store();
    let report = validate_store(store.records());
    assert!(report.accepted(), "{:?}", report.violations);
    assert_eq!(report.records, store.len());
}

#[test]
fn pizza_base_is_per_100g() {
    let store = common::store();
    let recs = store.lookup(&ProductKey::new(DatabaseSource::Agribalyse, "Pizza base, raw"));
    assert_eq!(recs.len(), 1);
    let rec = recs[0];
    assert_eq!(rec.region, "FR");
    assert!((rec.total_impact.unwrap() - 0.01955).abs() < 1e-12);
    assert_eq!(rec.quality_rating, Some(2.3277205962237506));
    assert_eq!(rec.stage_breakdown.len(), 6);
}

#[test]
fn one_corrupt_cell_rejects_one_row() {
    let out = load_catalog(
        DatabaseSource::Agribalyse,
        &common::fixtures().join("bad/agribalyse_corrupt.csv"),
        &agribalyse_mapping(),
    )
    .unwrap();
    assert_eq!(out.records.len(), 9);
    assert_eq!(out.report.rows, 10);
    assert_eq!(out.report.rejections.len(), 1);
    let r = &out.report.rejections[0];
    assert_eq!(r.row, 4);
    assert_eq!(r.name.as_deref(), Some("Oregano, dried"));
}

#[test]
fn regions_per_source() {
    let store = common::store();
    let bc: BTreeSet<String> = ["DK", "ES", "FR", "GB", "NL"].map(String::from).into();
    assert_eq!(store.list_regions(DatabaseSource::BigClimate), bc);
    assert!(store.list_regions(DatabaseSource::Bonsai).contains("GLOBAL"));
    assert_eq!(store.list_regions(DatabaseSource::Agribalyse), BTreeSet::from(["FR".to_string()]));
}

#[test]
fn decimal_commas_parsed() {
    let store = common::store();
    let recs = store.lookup(&ProductKey::new(DatabaseSource::BigClimate, "Pizza dough"));
    let nl = recs.iter().find(|r| r.region == "NL").unwrap();
    assert!((nl.total_impact.unwrap() - 0.1205).abs() < 1e-12);
}

#[test]
fn store_round_trips_through_ndjson() {
    let store = common::store();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.ndjson");
    store.save(&path).unwrap();
    assert_eq!(ProductStore::load(&path).unwrap().records(), store.records());
}

#[test]
fn missing_file_is_an_error() {
    let err = load_catalog(DatabaseSource::Agribalyse, &common::fixtures().join("nope.csv"), &agribalyse_mapping());
    assert!(err.is_err());
}
