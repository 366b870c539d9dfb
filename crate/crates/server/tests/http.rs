use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use ethervote_core::ManualClock;
use ethervote_server::{router, ApiService, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, request: Request<Body>) -> (StatusCode, Value) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    assert_eq!(
        response.headers().get(header::CONTENT_TYPE).unwrap(),
        "application/json"
    );
    let bytes = to_bytes(response.into_body(), 1 << 20).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn post(path: &str, token: Option<&str>, body: Value) -> Request<Body> {
    let mut builder = Request::post(path).header(header::CONTENT_TYPE, "application/json");
    if let Some(token) = token {
        builder = builder.header(header::AUTHORIZATION, format!("Bearer {token}"));
    }
    builder.body(Body::from(body.to_string())).unwrap()
}

#[tokio::test]
async fn requests_flow_through_the_router() {
    let config = ServiceConfig {
        seed: Some(3),
        ..ServiceConfig::default()
    };
    let (service, boot) = ApiService::new(config, Arc::new(ManualClock::new(1_000))).unwrap();
    let app = router(Arc::new(service));

    let (status, body) = call(
        &app,
        post("/session", None, json!({ "address": boot.authority, "password": boot.password })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let token = body["token"].as_str().unwrap().to_owned();

    let (status, body) = call(&app, post("/authority/init", Some(&token), json!({ "candidates": ["A", "B"] }))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["tx_hash"].as_str().unwrap().starts_with("0x"));

    let (status, body) = call(&app, post("/authority/init", None, json!({ "candidates": ["A"] }))).await;
    assert_eq!((status, body), (StatusCode::UNAUTHORIZED, json!({ "error": "SessionRequired" })));

    let request = Request::post("/authority/init")
        .header(header::AUTHORIZATION, "Basic abc")
        .body(Body::from("{}"))
        .unwrap();
    assert_eq!(call(&app, request).await.0, StatusCode::UNAUTHORIZED);

    let (status, body) = call(&app, Request::get("/chain/verify").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], json!(true));
    assert_eq!(body["length"], json!(2));

    let (status, _) = call(&app, Request::get("/results?viewer=me").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = call(&app, Request::delete("/results").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test]
async fn serves_over_tcp() {
    let (service, _) = ApiService::new(ServiceConfig::default(), Arc::new(ManualClock::new(5))).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(service))).await });

    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(b"GET /chain/verify HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).await.unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"valid\":true"));
}
