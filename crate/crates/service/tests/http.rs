use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, Response, StatusCode};
use http_body_util::BodyExt;
use mfa_dvv_core::dataset::encode_dataset;
use mfa_dvv_core::field::{generate_marschner_lobb, MarschnerLobb};
use mfa_dvv_core::mfa::EncodeConfig;
use mfa_dvv_core::render::{presets, RgbImage};
use mfa_dvv_service::api::PresetBody;
use mfa_dvv_service::registry::Registry;
use mfa_dvv_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn write_ml_dataset(dir: &Path, name: &str, n: usize, levels: u32) {
    let grid = generate_marschner_lobb::<f64>([n; 3], [0.0; 3], [7.0; 3], MarschnerLobb::default())
        .unwrap();
    let ds = encode_dataset(&grid, name, levels, &EncodeConfig::fixed(2, [6; 3]), 1).unwrap();
    ds.write(dir).unwrap();
}

/// A dataset root with one 8-block ML dataset and one broken directory.
fn fixture() -> (tempfile::TempDir, AppState) {
    let root = tempfile::tempdir().unwrap();
    write_ml_dataset(&root.path().join("ml"), "ml", 17, 3);
    let broken = root.path().join("broken");
    std::fs::create_dir_all(&broken).unwrap();
    std::fs::write(broken.join("manifest.json"), "{ not json").unwrap();
    let state = AppState::new(
        Registry::scan(&[root.path().to_path_buf()]),
        ServiceConfig::default(),
    );
    (root, state)
}

async fn send(state: &AppState, req: Request<Body>) -> Response<Body> {
    router(state.clone()).oneshot(req).await.unwrap()
}

async fn get(state: &AppState, uri: &str) -> (StatusCode, Value) {
    let resp = send(state, Request::get(uri).body(Body::empty()).unwrap()).await;
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn post_render(
    state: &AppState,
    body: &Value,
) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let req = Request::post("/api/render")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = send(state, req).await;
    let (parts, body) = resp.into_parts();
    (
        parts.status,
        parts.headers,
        body.collect().await.unwrap().to_bytes().to_vec(),
    )
}

fn render_body(quality: &str) -> Value {
    json!({
        "dataset": "ml",
        "camera": { "position": [16.0, 12.0, 10.0], "look_at": [3.5, 3.5, 3.5], "up": [0, 0, 1], "fov": 35 },
        "preset": "warm",
        "width": 48,
        "height": 40,
        "quality": quality,
        "step": 0.05,
        "request_id": "r1"
    })
}

fn header_f64(h: &axum::http::HeaderMap, name: &str) -> f64 {
    h.get(name).unwrap().to_str().unwrap().parse().unwrap()
}

#[tokio::test]
async fn health_reports_ok() {
    let (_root, state) = fixture();
    let (status, body) = get(&state, "/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["datasets"], 1);
}

#[tokio::test]
async fn empty_registry_lists_nothing() {
    let state = AppState::new(Registry::default(), ServiceConfig::default());
    let (status, body) = get(&state, "/api/datasets").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn registered_dataset_is_described_from_its_manifest() {
    let (root, state) = fixture();
    let (_, body) = get(&state, "/api/datasets").await;
    let arr = body.as_array().unwrap();
    assert_eq!(arr.len(), 1, "broken dataset must be skipped");
    let manifest = mfa_dvv_core::dataset::DatasetManifest::read(&root.path().join("ml")).unwrap();
    assert_eq!(arr[0]["id"], "ml");
    assert_eq!(arr[0]["block_count"], 8);
    assert_eq!(arr[0]["dims"], json!([17, 17, 17]));
    assert_eq!(arr[0]["value_range"], json!(manifest.value_range));
}

#[tokio::test]
async fn presets_match_the_core_list() {
    let state = AppState::new(Registry::default(), ServiceConfig::default());
    let (_, body) = get(&state, "/api/presets").await;
    let served: Vec<PresetBody> = serde_json::from_value(body).unwrap();
    let core = presets();
    assert!(served.len() >= 3);
    assert_eq!(served.len(), core.len());
    for (s, (name, nodes)) in served.iter().zip(core) {
        assert_eq!(s.name, name);
        assert_eq!(s.nodes, nodes);
        assert!(s.nodes.windows(2).all(|w| w[0].value <= w[1].value));
    }
}

#[tokio::test]
async fn render_returns_png_with_timings() {
    let (_root, state) = fixture();
    assert_eq!(state.is_loaded("ml"), Some(false));
    let (status, h1, png1) = post_render(&state, &render_body("full")).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&png1));
    assert_eq!(h1["content-type"], "image/png");
    assert_eq!(h1["x-request-id"], "r1");
    let img = RgbImage::from_png_bytes(&png1).unwrap();
    assert_eq!((img.width, img.height), (48, 40));

    let stages = [
        "x-fetch-seconds",
        "x-render-seconds",
        "x-composite-seconds",
        "x-merge-seconds",
    ];
    let sum: f64 = stages.iter().map(|s| header_f64(&h1, s)).sum();
    let total = header_f64(&h1, "x-total-seconds");
    assert!((total - sum).abs() <= 0.05 * total);
    assert!(header_f64(&h1, "x-fetch-seconds") > 0.0);
    let timing: Value = serde_json::from_str(h1["x-timings"].to_str().unwrap()).unwrap();
    assert_eq!(timing["quality"], "full");
    assert_eq!(timing["total"].as_f64().unwrap(), total);

    // Models are resident now: fetch is zero and the image is unchanged.
    let (_, h2, png2) = post_render(&state, &render_body("full")).await;
    assert_eq!(header_f64(&h2, "x-fetch-seconds"), 0.0);
    assert_eq!(png1, png2);
    assert_eq!(state.is_loaded("ml"), Some(true));
}

#[tokio::test]
async fn transparent_transfer_function_yields_background() {
    let (_root, state) = fixture();
    let mut body = render_body("full");
    body["transfer"] = json!([{ "value": 0.0, "color": [1.0, 0.0, 0.0], "opacity": 0.0 }]);
    body["background"] = json!([0.2, 0.4, 0.6, 1.0]);
    let (status, _, png) = post_render(&state, &body).await;
    assert_eq!(status, StatusCode::OK);
    let img = RgbImage::from_png_bytes(&png).unwrap();
    assert!(img.data.chunks_exact(3).all(|p| p == [51, 102, 153]));
}

#[tokio::test]
async fn preview_is_smaller_and_faster_than_full() {
    let (_root, state) = fixture();
    let mut full = render_body("full");
    full["width"] = json!(160);
    full["height"] = json!(160);
    let mut preview = full.clone();
    preview["quality"] = json!("preview");
    // Warm up so neither measurement includes the model fetch.
    post_render(&state, &full).await;
    let (_, hf, _) = post_render(&state, &full).await;
    let (status, hp, png) = post_render(&state, &preview).await;
    assert_eq!(status, StatusCode::OK);
    let img = RgbImage::from_png_bytes(&png).unwrap();
    assert_eq!((img.width, img.height), (80, 80));
    assert!(header_f64(&hp, "x-total-seconds") < header_f64(&hf, "x-total-seconds"));
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let (_root, state) = fixture();
    let mut unknown = render_body("full");
    unknown["dataset"] = json!("nope");
    let (status, _, body) = post_render(&state, &unknown).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(String::from_utf8(body).unwrap().contains("unknown dataset"));

    let req = Request::post("/api/render")
        .body(Body::from("{ nope"))
        .unwrap();
    assert_eq!(send(&state, req).await.status(), StatusCode::BAD_REQUEST);

    for (key, value) in [
        ("width", json!(0)),
        ("step", json!(-1.0)),
        ("preset", json!("missing")),
        ("quality", json!("ultra")),
    ] {
        let mut body = render_body("full");
        body[key] = value;
        let (status, _, _) = post_render(&state, &body).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{key}");
    }
    let mut body = render_body("full");
    body["camera"]["look_at"] = body["camera"]["position"].clone();
    assert_eq!(post_render(&state, &body).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn cors_allows_any_origin() {
    let state = AppState::new(Registry::default(), ServiceConfig::default());
    let req = Request::get("/api/health")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = send(&state, req).await;
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
    assert!(resp.headers().contains_key("access-control-expose-headers"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn burst_is_coalesced() {
    let (_root, state) = fixture();
    // Load the models first so the timed render is rendering only.
    post_render(&state, &render_body("preview")).await;
    let before = state.renders_executed("ml").unwrap();

    let mut slow = render_body("full");
    slow["width"] = json!(400);
    slow["height"] = json!(400);
    slow["step"] = json!(0.004);
    let first = tokio::spawn({
        let state = state.clone();
        let slow = slow.clone();
        async move { post_render(&state, &slow).await.0 }
    });
    while state.renders_executed("ml").unwrap() == before {
        tokio::time::sleep(Duration::from_millis(1)).await;
    }
    let mut burst = Vec::new();
    for i in 0..6 {
        let state = state.clone();
        let mut body = render_body("preview");
        body["request_id"] = json!(format!("b{i}"));
        burst.push(tokio::spawn(
            async move { post_render(&state, &body).await },
        ));
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    assert_eq!(first.await.unwrap(), StatusCode::OK);
    let mut statuses = Vec::new();
    for (i, h) in burst.into_iter().enumerate() {
        let (status, _, body) = h.await.unwrap();
        if status == StatusCode::CONFLICT {
            let v: Value = serde_json::from_slice(&body).unwrap();
            assert_eq!(v["status"], "superseded");
            assert_eq!(v["request_id"], format!("b{i}"));
        }
        statuses.push(status);
    }
    assert_eq!(*statuses.last().unwrap(), StatusCode::OK);
    assert!(
        statuses[..5].iter().all(|s| *s == StatusCode::CONFLICT),
        "{statuses:?}"
    );
    assert_eq!(state.renders_executed("ml").unwrap() - before, 2);
}
