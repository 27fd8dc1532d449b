mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use dfs_service::http::router;
use dfs_service::session::{SessionManager, DEFAULT_IDLE_TIMEOUT};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> axum::Router {
    router(Arc::new(SessionManager::new(Arc::new(common::d2_bundle().clone()), DEFAULT_IDLE_TIMEOUT)))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[tokio::test]
async fn full_session_over_http() {
    let app = app();
    let (status, created) = call(&app, "POST", "/sessions", Some(r#"{"budget": 2}"#)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(keys(&created), ["class_names", "feature_names", "k", "session_id"]);
    assert_eq!(created["k"], 2);
    let id = created["session_id"].as_str().unwrap().to_string();

    let (status, next) = call(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(keys(&next), ["group_index", "group_name", "members"]);
    assert_eq!(next["group_name"], "x1");

    for _ in 0..2 {
        let (_, next) = call(&app, "GET", &format!("/sessions/{id}/next"), None).await;
        let body = json!({"group_index": next["group_index"], "values": [1.0]}).to_string();
        let (status, ans) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(&body)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(keys(&ans), ["accepted", "prediction", "step"]);
        assert_eq!(ans["accepted"], true);
        assert_eq!(ans["prediction"].as_array().unwrap().len(), 2);
    }
    let (_, done) = call(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(done, json!({"done": true}));

    let (status, snap) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["session_id"], id.as_str());
    assert_eq!(snap["predictions"].as_array().unwrap().len(), 2);

    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, err) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(err["error"].as_str().unwrap().contains("unknown session"));
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (status, created) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED, "empty body uses the model budget");
    let id = created["session_id"].as_str().unwrap().to_string();
    let answer = format!("/sessions/{id}/answer");

    let (status, err) = call(&app, "POST", &answer, Some(r#"{"group_index": 0, "values": [1, 2]}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err["error"].as_str().unwrap().contains("expects 1 value"));

    let (status, _) = call(&app, "POST", &answer, Some(r#"{"group_index": 2, "values": [1]}"#)).await;
    assert_eq!(status, StatusCode::CONFLICT);

    for bad in ["{oops", r#"{"values": [1]}"#, r#"{"group_index": "x", "values": [1]}"#] {
        let (status, err) = call(&app, "POST", &answer, Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(err["error"].is_string());
    }
    let (status, _) = call(&app, "POST", "/sessions", Some(r#"{"budget": 9}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", "/sessions", Some(r#"{"budget": "two"}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "GET", "/sessions/missing/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn bind_address_resolution() {
    use dfs_service::http::{resolve_bind, BIND_ENV};
    // only this test touches the variable
    std::env::remove_var(BIND_ENV);
    assert_eq!(resolve_bind(None).unwrap().to_string(), "127.0.0.1:8080");
    assert_eq!(resolve_bind(Some("0.0.0.0:9000")).unwrap().port(), 9000);
    std::env::set_var(BIND_ENV, "127.0.0.1:7777");
    assert_eq!(resolve_bind(Some("0.0.0.0:9000")).unwrap().port(), 7777);
    std::env::remove_var(BIND_ENV);
    assert!(resolve_bind(Some("not an address")).is_err());
}
