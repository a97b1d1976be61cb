use std::path::Path;

use futures::StreamExt;
use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use verdant_core::scenarios::builtin;
use verdant_core::sim::Scenario;
use verdant_core::{default_profile, SATURATION_ALERT_TEXT};
use verdant_service::{start, ServiceConfig, ServiceError, ServiceHandle, StreamMessage};

fn scenario(name: &str) -> Scenario {
    builtin(name).unwrap().unwrap()
}

async fn manual(scenario: Scenario, data_dir: Option<&Path>) -> ServiceHandle {
    let mut config = ServiceConfig::new(scenario, default_profile());
    config.speed = None;
    config.data_dir = data_dir.map(Path::to_path_buf);
    start(config).await.unwrap()
}

fn url(h: &ServiceHandle, path: &str) -> String {
    format!("http://{}{}", h.local_addr(), path)
}

async fn post(client: &reqwest::Client, url: String, body: &str) -> (StatusCode, String) {
    let resp = client
        .post(url)
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .await
        .unwrap();
    (resp.status(), resp.text().await.unwrap())
}

#[tokio::test]
async fn state_and_health_endpoints() {
    let h = manual(scenario("dry-start"), None).await;
    let client = reqwest::Client::new();

    let resp = client.get(url(&h, "/api/state")).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    let view: Value = resp.json().await.unwrap();
    assert_eq!(view["last_seq"], 0);

    let resp = client.get(url(&h, "/api/health")).send().await.unwrap();
    assert_eq!(resp.status(), 503);
    let err: Value = resp.json().await.unwrap();
    assert_eq!(err["http_status"], 503);

    h.step(1).await.unwrap();
    let resp = client.get(url(&h, "/api/health")).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    let health: Value = resp.json().await.unwrap();
    assert!(health["score"].is_number());
    let view: Value = client
        .get(url(&h, "/api/state"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(view["valve_open"], true);
    h.shutdown().await;
}

#[tokio::test]
async fn water_rejected_when_saturated() {
    let mut s = scenario("saturated");
    s.commands.clear();
    let h = manual(s, None).await;
    let client = reqwest::Client::new();
    h.step(1).await.unwrap();

    let (status, body) = post(&client, url(&h, "/api/water"), r#"{"action":"start"}"#).await;
    assert_eq!(status, 409);
    let err: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(err["http_status"], 409);
    assert_eq!(err["code"], "saturated");
    assert_eq!(err["message"], SATURATION_ALERT_TEXT);
    assert_eq!(err["outcome"], "rejected");

    let (status, _) = post(&client, url(&h, "/api/water"), r#"{"action":"stop"}"#).await;
    assert_eq!(status, 202);
    let (status, _) = post(&client, url(&h, "/api/water"), r#"{"action":"flood"}"#).await;
    assert_eq!(status, 400);
    let (status, _) = post(&client, url(&h, "/api/water"), "not json").await;
    assert_eq!(status, 400);
    h.shutdown().await;
}

#[tokio::test]
async fn water_accepted_when_adequate() {
    let mut s = scenario("hot-dry-ambient");
    s.initial.soil_moisture = 50.0;
    let h = manual(s, None).await;
    let client = reqwest::Client::new();
    h.step(1).await.unwrap();
    let (status, body) = post(&client, url(&h, "/api/water"), r#"{"action":"start"}"#).await;
    assert_eq!(status, 202, "{body}");
    let outcome: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(outcome["outcome"], "started");
    let view = h.step(1).await.unwrap();
    assert!(view.valve_open);
    h.shutdown().await;
}

#[tokio::test]
async fn security_toggles() {
    let h = manual(scenario("dry-start"), None).await;
    let client = reqwest::Client::new();
    let (status, body) = post(&client, url(&h, "/api/security"), r#"{"armed":true}"#).await;
    assert_eq!(status, 200);
    let state: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(state["armed"], true);
    let (status, body) = post(&client, url(&h, "/api/security"), r#"{"armed":false}"#).await;
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["armed"], false);
    let (status, _) = post(&client, url(&h, "/api/security"), r#"{"armed":"yes"}"#).await;
    assert_eq!(status, 400);
    h.shutdown().await;
}

#[tokio::test]
async fn schedule_crud() {
    let h = manual(scenario("dry-start"), None).await;
    let client = reqwest::Client::new();

    let (status, body) = post(&client, url(&h, "/api/schedules"), r#"{"time":"06:30"}"#).await;
    assert_eq!(status, 201);
    let slot: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(slot["time_of_day"], "06:30");
    let id = slot["id"].as_u64().unwrap();

    for bad in [r#"{"time":"25:00"}"#, r#"{"time":"6:30"}"#, r#"{"when":"06:00"}"#, "{"] {
        let (status, body) = post(&client, url(&h, "/api/schedules"), bad).await;
        assert_eq!(status, 400, "{bad}: {body}");
    }
    let (status, _) = post(&client, url(&h, "/api/schedules"), r#"{"time":"06:30"}"#).await;
    assert_eq!(status, 409);

    let slots: Value = client
        .get(url(&h, "/api/schedules"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(slots.as_array().unwrap().len(), 1);

    let resp = client.delete(url(&h, "/api/schedules/999")).send().await.unwrap();
    assert_eq!(resp.status(), 404);
    let resp = client.delete(url(&h, "/api/schedules/abc")).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    let resp = client
        .delete(url(&h, &format!("/api/schedules/{id}")))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 204);
    let slots: Value = client
        .get(url(&h, "/api/schedules"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(slots, json!([]));
    h.shutdown().await;
}

#[tokio::test]
async fn schedule_and_events_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let client = reqwest::Client::new();

    let h = manual(scenario("dry-start"), Some(dir.path())).await;
    for t in ["06:30", "18:00", "12:15"] {
        let (status, _) = post(&client, url(&h, "/api/schedules"), &format!(r#"{{"time":"{t}"}}"#)).await;
        assert_eq!(status, 201);
    }
    h.step(30).await.unwrap();
    post(&client, url(&h, "/api/security"), r#"{"armed":true}"#).await;
    let listing = client
        .get(url(&h, "/api/schedules"))
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    let events_before = client
        .get(url(&h, "/api/events"))
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    h.shutdown().await;
    let file_before = std::fs::read(dir.path().join("schedules.json")).unwrap();
    let ndjson_before = std::fs::read(dir.path().join("events.ndjson")).unwrap();

    let h = manual(scenario("dry-start"), Some(dir.path())).await;
    let listing_after = client
        .get(url(&h, "/api/schedules"))
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    let events_after = client
        .get(url(&h, "/api/events"))
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    assert_eq!(listing, listing_after);
    assert_eq!(events_before, events_after);
    assert_eq!(std::fs::read(dir.path().join("schedules.json")).unwrap(), file_before);

    let n = serde_json::from_slice::<Vec<Value>>(&events_before).unwrap().len() as u64;
    let view = h.step(1).await.unwrap();
    assert!(view.last_seq > n);
    h.shutdown().await;
    let ndjson_after = std::fs::read(dir.path().join("events.ndjson")).unwrap();
    assert!(ndjson_after.starts_with(&ndjson_before));
    let seqs: Vec<u64> = String::from_utf8(ndjson_after)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["seq"].as_u64().unwrap())
        .collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
}

#[tokio::test]
async fn corrupt_persistence_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("schedules.json"), "{\"version\":1,\"slots\":[{]}").unwrap();
    let mut config = ServiceConfig::new(scenario("dry-start"), default_profile());
    config.data_dir = Some(dir.path().to_path_buf());
    let err = start(config).await.err().unwrap();
    assert!(matches!(err, ServiceError::CorruptFile { .. }));
    assert!(err.to_string().contains("schedules.json"), "{err}");
}

#[tokio::test]
async fn port_in_use_is_reported() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let mut config = ServiceConfig::new(scenario("dry-start"), default_profile());
    config.addr = taken.local_addr().unwrap();
    assert!(matches!(start(config).await.err().unwrap(), ServiceError::Bind { .. }));
}

#[tokio::test]
async fn events_since_returns_exact_suffix() {
    let h = manual(scenario("dry-start"), None).await;
    let client = reqwest::Client::new();
    h.step(600).await.unwrap();

    let all: Vec<Value> = client
        .get(url(&h, "/api/events?since=0"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let kinds: Vec<&str> = all.iter().map(|e| e["kind"].as_str().unwrap()).collect();
    let opened = kinds.iter().position(|k| *k == "ValveOpened").unwrap();
    let closed = kinds.iter().position(|k| *k == "ValveClosed").unwrap();
    assert!(opened < closed);

    let n = all.len() as u64;
    for k in 0..=n + 2 {
        let part: Vec<Value> = client
            .get(url(&h, &format!("/api/events?since={k}")))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        let seqs: Vec<u64> = part.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
        assert_eq!(seqs, (k + 1..=n).collect::<Vec<_>>());
    }
    let resp = client.get(url(&h, "/api/events?since=-1")).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    h.shutdown().await;
}

#[tokio::test]
async fn concurrent_storm_keeps_log_gap_free() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = scenario("hot-dry-ambient");
    s.initial.soil_moisture = 50.0;
    let mut config = ServiceConfig::new(s, default_profile());
    config.speed = Some(1000.0);
    config.data_dir = Some(dir.path().to_path_buf());
    let h = start(config).await.unwrap();
    let client = reqwest::Client::new();

    let requests = (0..100).map(|i| {
        let client = client.clone();
        let (path, body) = match i % 4 {
            0 => ("/api/water", r#"{"action":"start"}"#),
            1 => ("/api/security", r#"{"armed":true}"#),
            2 => ("/api/water", r#"{"action":"stop"}"#),
            _ => ("/api/security", r#"{"armed":false}"#),
        };
        let target = url(&h, path);
        async move { post(&client, target, body).await.0 }
    });
    let statuses = futures::future::join_all(requests).await;
    assert!(
        statuses.iter().all(|s| [200, 202, 409].contains(&s.as_u16())),
        "{statuses:?}"
    );

    let events: Vec<Value> = client
        .get(url(&h, "/api/events"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
    let security = events
        .iter()
        .filter(|e| e["kind"] == "Armed" || e["kind"] == "Disarmed")
        .count();
    assert_eq!(security, 50);
    let stamps: Vec<u64> = events.iter().map(|e| e["timestamp"].as_u64().unwrap()).collect();
    assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
    h.shutdown().await;

    let persisted = std::fs::read_to_string(dir.path().join("events.ndjson")).unwrap();
    let persisted: Vec<Value> = persisted.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(persisted.len() >= events.len());
    assert_eq!(&persisted[..events.len()], &events[..]);
}

async fn collect_stream(h: &ServiceHandle, query: &str, ticks: u64) -> Vec<StreamMessage> {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/api/stream{query}", h.local_addr()))
        .await
        .unwrap();
    // Give the server a moment to register the subscription.
    tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    let view = h.step(ticks).await.unwrap();
    let mut out = Vec::new();
    let mut states = 0;
    while states < ticks {
        let msg = tokio::time::timeout(std::time::Duration::from_secs(5), ws.next())
            .await
            .expect("stream stalled")
            .unwrap()
            .unwrap();
        if let Message::Text(text) = msg {
            let m: StreamMessage = serde_json::from_str(&text).unwrap();
            if matches!(m, StreamMessage::State(_)) {
                states += 1;
            }
            out.push(m);
        }
    }
    assert!(matches!(out.last(), Some(StreamMessage::State(v)) if *v == view));
    out
}

#[tokio::test]
async fn stream_delivers_events_then_state_in_order() {
    let h = manual(scenario("intruder-night"), None).await;
    let messages = collect_stream(&h, "", 700).await;
    let mut last_seq = 0;
    let mut events_since_state = 0;
    for m in &messages {
        match m {
            StreamMessage::Event(e) => {
                assert_eq!(e.seq, last_seq + 1, "gap or duplicate");
                last_seq = e.seq;
                events_since_state += 1;
            }
            StreamMessage::State(v) => {
                assert_eq!(v.last_seq, last_seq);
                events_since_state = 0;
            }
        }
    }
    assert_eq!(events_since_state, 0);
    assert!(messages
        .iter()
        .any(|m| matches!(m, StreamMessage::Event(e) if e.name() == "MotionDetected")));
    h.shutdown().await;
}

#[tokio::test]
async fn stream_replays_from_since_without_duplicates() {
    let h = manual(scenario("dry-start"), None).await;
    h.step(200).await.unwrap();
    let before = h.step(0).await.unwrap().last_seq;
    assert!(before >= 2);
    let messages = collect_stream(&h, "?since=1", 400).await;
    let seqs: Vec<u64> = messages
        .iter()
        .filter_map(|m| match m {
            StreamMessage::Event(e) => Some(e.seq),
            _ => None,
        })
        .collect();
    let last = h.step(0).await.unwrap().last_seq;
    assert_eq!(seqs, (2..=last).collect::<Vec<_>>());
    h.shutdown().await;
}
