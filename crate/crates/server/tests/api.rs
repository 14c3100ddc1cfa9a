use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use matkb_core::index::build_index;
use matkb_core::ingest::{ArticleMeta, Paragraph};
use matkb_core::kb::{compute_stats, DEFAULT_TOP_EXAMPLES, Provenance};
use matkb_core::tagger::{tag_corpus, TaggerConfig};
use matkb_core::KnowledgeBase;
use matkb_server::{router, AppState};

const TEXTS: &[&str] = &[
    "Co3O4 powder from Sigma-Aldrich was sintered at 700 °C for 24 h.",
    "Li2Co3 and Co3O4 were heated at 1000 °C in a tube furnace.",
    "The pellets were sintered at 700°C for 12 h under ambient pressure.",
    "Magnetization was measured with a commercial magnetometer.",
    "Co3O4 was ground in an agate mortar and annealed at 1000 °C.",
];

fn fixture_kb() -> KnowledgeBase {
    let paragraphs: Vec<Paragraph> = TEXTS
        .iter()
        .enumerate()
        .map(|(i, t)| Paragraph::new(format!("A{}#{}", i % 2, i), format!("A{}", i % 2), t.to_string()))
        .collect();
    let mentions = tag_corpus(&paragraphs, &TaggerConfig::builtin());
    let articles = [0, 1].map(|i| ArticleMeta {
        article_id: format!("A{i}"),
        title: format!("Article {i}"),
        venue: "J. Test".into(),
        year: Some(2020 + i),
    });
    KnowledgeBase::new(paragraphs, articles, mentions, Provenance::default()).unwrap()
}

fn app_for(kb: KnowledgeBase, max_page: usize) -> axum::Router {
    let index = build_index(&kb);
    router(AppState::new(index, kb, max_page).unwrap(), &["http://localhost:5173".to_string()])
}

async fn get(app: &axum::Router, uri: &str) -> (StatusCode, Value, String) {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let json = serde_json::from_str(&text).unwrap_or(Value::Null);
    (status, json, text)
}

fn enc(q: &str) -> String {
    let mut out = String::new();
    for b in q.bytes() {
        if b.is_ascii_alphanumeric() || b"-_.~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

#[tokio::test]
async fn slots_match_stats() {
    let kb = fixture_kb();
    let stats = compute_stats(&kb, DEFAULT_TOP_EXAMPLES);
    let app = app_for(kb, 100);
    let (status, body, _) = get(&app, "/api/slots").await;
    assert_eq!(status, StatusCode::OK);
    let slots = body.as_array().unwrap();
    assert_eq!(slots.len(), 13);
    for (slot, row) in slots.iter().zip(&stats.rows) {
        assert_eq!(slot["name"], row.category.as_str());
        assert_eq!(slot["count"], row.count);
        assert_eq!(slot["distinct_values"], row.unique_count);
        assert_eq!(slot["top_values"].as_array().unwrap().len(), row.top_examples.len());
    }
    let recipe = slots.iter().find(|s| s["name"] == "Material-recipe").unwrap();
    assert!(recipe["aliases"].as_array().unwrap().iter().any(|a| a == "Material_recipe"));
}

#[tokio::test]
async fn empty_kb_has_thirteen_zero_slots() {
    let app = app_for(KnowledgeBase::default(), 100);
    let (_, body, _) = get(&app, "/api/slots").await;
    let slots = body.as_array().unwrap();
    assert_eq!(slots.len(), 13);
    assert!(slots.iter().all(|s| s["count"] == 0 && s["distinct_values"] == 0));
    let (_, stats, _) = get(&app, "/api/stats").await;
    assert_eq!(stats["totals"]["count"], 0);
}

#[tokio::test]
async fn search_agrees_with_index() {
    let kb = fixture_kb();
    let index = build_index(&kb);
    let app = app_for(kb, 100);
    for q in ["Material_recipe:Co3O4", "Material_temperature:700°C", "Property-temperature:\"1000 °C\" Material_recipe:Co3O4", "sintered pellets"] {
        let expected = index.matching_ids(&matkb_core::index::parse_query(q).unwrap()).unwrap();
        let (status, body, _) = get(&app, &format!("/api/search?q={}", enc(q))).await;
        assert_eq!(status, StatusCode::OK, "{q}: {body}");
        let ids: Vec<&str> = body["results"].as_array().unwrap().iter().map(|r| r["paragraph_id"].as_str().unwrap()).collect();
        assert_eq!(ids, expected, "{q}");
        assert_eq!(body["total"], expected.len());
        assert!(!ids.is_empty(), "{q}");
    }
    let (_, a, _) = get(&app, "/api/search?q=Material_recipe%3ACo3O4").await;
    let (_, b, _) = get(&app, "/api/search?q=Material_recipe%3ACo3O4").await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn search_errors() {
    let app = app_for(fixture_kb(), 100);
    let (status, body, _) = get(&app, "/api/search?q=").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "empty_query");
    let (status, _, _) = get(&app, "/api/search").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body, _) = get(&app, &format!("/api/search?q={}", enc("Device:\"tube"))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "parse_error");
    assert_eq!(body["error"]["column"], 8);

    let (status, body, _) = get(&app, "/api/search?q=Colour%3Ared").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "unknown_slot");
    assert_eq!(body["error"]["valid_slots"].as_array().unwrap().len(), 13);
    assert!(body["error"]["message"].as_str().unwrap().contains("Colour"));

    let (status, body, _) = get(&app, "/api/search?q=x&limit=abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "bad_parameter");
    let (status, body, _) = get(&app, "/api/search?q=x&limit=0").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid_limit");
}

#[tokio::test]
async fn pagination_and_clamping() {
    let app = app_for(fixture_kb(), 2);
    let (_, body, _) = get(&app, "/api/search?q=Material_recipe%3ACo3O4&limit=50").await;
    assert_eq!(body["clamped"], true);
    assert_eq!(body["limit"], 2);
    assert_eq!(body["results"].as_array().unwrap().len(), 2);
    assert_eq!(body["total"], 3);

    let (_, body, _) = get(&app, "/api/search?q=Material_recipe%3ACo3O4&offset=99").await;
    assert_eq!(body["clamped"], false);
    assert_eq!(body["total"], 3);
    assert!(body["results"].as_array().unwrap().is_empty());

    let (_, page2, _) = get(&app, "/api/search?q=Material_recipe%3ACo3O4&limit=2&offset=2").await;
    assert_eq!(page2["results"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn paragraphs() {
    let app = app_for(fixture_kb(), 100);
    let (status, body, _) = get(&app, "/api/paragraphs/A0%230").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["article"]["title"], "Article 0");
    let text = body["paragraph"]["text"].as_str().unwrap();
    let chars: Vec<char> = text.chars().collect();
    let mentions = body["mentions"].as_array().unwrap();
    assert!(!mentions.is_empty());
    for m in mentions {
        let (s, e) = (m["start"].as_u64().unwrap() as usize, m["end"].as_u64().unwrap() as usize);
        let surface: String = chars[s..e].iter().collect();
        assert_eq!(m["surface"], surface.as_str());
    }

    let (status, body, _) = get(&app, "/api/paragraphs/A1%233").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["mentions"].as_array().unwrap().is_empty());

    let (status, body, _) = get(&app, "/api/paragraphs/nope%230").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
}

#[tokio::test]
async fn stats_are_the_report_bytes() {
    let kb = fixture_kb();
    let expected = compute_stats(&kb, DEFAULT_TOP_EXAMPLES).to_json();
    let app = app_for(kb, 100);
    let (status, _, text) = get(&app, "/api/stats").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, expected);
    let (_, _, again) = get(&app, "/api/stats").await;
    assert_eq!(again, text);
}

#[tokio::test]
async fn cors_allowlist() {
    let app = app_for(fixture_kb(), 100);
    let req = |origin: &str| {
        Request::get("/api/stats")
            .header("origin", origin)
            .body(Body::empty())
            .unwrap()
    };
    let ok = app.clone().oneshot(req("http://localhost:5173")).await.unwrap();
    assert_eq!(ok.headers()["access-control-allow-origin"], "http://localhost:5173");
    let other = app.clone().oneshot(req("http://evil.example")).await.unwrap();
    assert!(other.headers().get("access-control-allow-origin").is_none());
}

#[test]
fn state_rejects_mismatched_index_and_zero_page_size() {
    let kb = fixture_kb();
    let index = build_index(&kb);
    assert!(AppState::new(index.clone(), KnowledgeBase::default(), 10).is_err());
    assert!(AppState::new(index, kb, 0).is_err());
}

#[tokio::test]
async fn graceful_shutdown_completes_in_flight() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let app = app_for(fixture_kb(), 100);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(matkb_server::serve(listener, app, async {
        let _ = rx.await;
    }));
    let mut conn = tokio::net::TcpStream::connect(addr).await.unwrap();
    // Half a request, so the connection is accepted and mid-read when shutdown starts.
    conn.write_all(b"GET /api/search?q=Material_recipe%3ACo3O4 HTTP/1.1\r\n").await.unwrap();
    tokio::time::sleep(std::time::Duration::from_millis(100)).await;
    tx.send(()).unwrap();
    tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    conn.write_all(b"Host: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut resp = String::new();
    conn.read_to_string(&mut resp).await.unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"total\":3"));
    server.await.unwrap().unwrap();
}
