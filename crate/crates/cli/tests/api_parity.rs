use std::path::PathBuf;
use std::process::Command;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use mealprint_service::config::LlmKind;
use mealprint_service::{app, AppState, DataConfig, SessionStore};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

async fn call(router: &axum::Router, method: &str, uri: &str, body: Value) -> String {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = if method == "GET" { req.body(Body::empty()) } else { req.body(Body::from(body.to_string())) }.unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    assert!(resp.status().is_success(), "{uri}: {}", resp.status());
    String::from_utf8(resp.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap()
}

async fn api_assessment(llm: LlmKind, text: &str) -> String {
    let data = DataConfig { catalogs: Some(fixtures().join("catalogs/catalogs.json")), llm, ..DataConfig::default() };
    let state = AppState::new(data.build_engine().unwrap(), SessionStore::in_memory(), data.extraction_mode());
    let router = app(state, &[]).unwrap();
    let created: Value = serde_json::from_str(&call(&router, "POST", "/api/sessions", json!({ "text": text, "target_country": "NL" })).await).unwrap();
    let id = created["session_id"].as_str().unwrap();
    call(&router, "GET", &format!("/api/sessions/{id}/candidates"), Value::Null).await;
    call(&router, "POST", &format!("/api/sessions/{id}/selection"), json!({ "mode": "AUTO_TOP1" })).await
}

fn cli_assessment(mode: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let recipe = fixtures().join("recipes/veggie_pizza.txt");
    let catalogs = fixtures().join("catalogs/catalogs.json");
    let out = Command::new(env!("CARGO_BIN_EXE_mealprint"))
        .args(["assess", "--mode", mode, "--country", "NL", "--recipe-file"])
        .arg(&recipe)
        .arg("--catalogs")
        .arg(&catalogs)
        .arg("--out-dir")
        .arg(dir.path())
        .env_remove("MEALPRINT_CONFIG")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read_to_string(dir.path().join("assessment.json")).unwrap()
}

#[tokio::test]
async fn cli_and_api_auto_assessments_are_identical() {
    let text = std::fs::read_to_string(fixtures().join("recipes/veggie_pizza.txt")).unwrap();
    assert_eq!(cli_assessment("auto"), api_assessment(LlmKind::None, &text).await);
    assert_eq!(cli_assessment("stub-llm"), api_assessment(LlmKind::Stub, &text).await);
}
