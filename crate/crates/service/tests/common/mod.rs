#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use needminer_core::corpus::Tweet;
use needminer_core::learners::save_model;
use needminer_core::synth::{demo_models, need_tweets, to_raw_tweets, Theme};
use needminer_core::textproc::{Pipeline, PipelineConfig};
use needminer_service::registry::ModelRegistry;
use needminer_service::source::{Backoff, SourceKind, SourceSpec};

pub const KEYWORD: &str = "Elektroauto";

pub fn pipeline() -> Arc<Pipeline> {
    Arc::new(Pipeline::new(PipelineConfig::recommended(), None).unwrap())
}

/// Writes demo models into `dir` and registers them; returns the registry.
pub fn registry(dir: &Path) -> ModelRegistry {
    let (need, cats) = demo_models(400, 7, &Theme::default(), pipeline()).unwrap();
    let mut reg = ModelRegistry::open(dir.join("registry.json")).unwrap();
    save_model(&need, dir.join("need-v1.json")).unwrap();
    reg.register("need", "need-v1.json").unwrap();
    for (c, m) in &cats {
        let file = format!("{c}-v1.json");
        save_model(m, dir.join(&file)).unwrap();
        reg.register(c.as_str(), file).unwrap();
    }
    reg.save().unwrap();
    reg
}

pub struct Fixture {
    pub path: PathBuf,
    /// Ids of the matching tweets that are needs.
    pub need_ids: Vec<String>,
}

/// 100 well-formed records plus 2 malformed lines: 35 distinct matching
/// tweets (7 needs), 5 repeats of matching tweets, 60 without the keyword.
pub fn fixture(dir: &Path) -> Fixture {
    let generated = need_tweets(400, 0.5, 0.0, 99, &Theme::default());
    let start = Utc.with_ymd_and_hms(2016, 6, 1, 9, 0, 0).unwrap();
    let raw = to_raw_tweets(&generated, start, Duration::hours(7));
    let needs = raw
        .iter()
        .zip(&generated)
        .filter(|(_, g)| g.need)
        .map(|(t, _)| t);
    let chats = raw
        .iter()
        .zip(&generated)
        .filter(|(_, g)| !g.need)
        .map(|(t, _)| t);
    let mut matched: Vec<Tweet> = needs
        .take(7)
        .chain(chats.clone().take(28))
        .cloned()
        .collect();
    for (i, t) in matched.iter_mut().enumerate() {
        let kw = if i % 2 == 0 {
            KEYWORD.to_string()
        } else {
            KEYWORD.to_uppercase()
        };
        t.text = format!("{} {kw}", t.text);
    }
    let need_ids = matched[..7].iter().map(|t| t.id.clone()).collect();
    let others: Vec<Tweet> = chats.skip(28).take(60).cloned().collect();

    let mut lines: Vec<String> = Vec::new();
    for t in &matched {
        lines.push(serde_json::to_string(t).unwrap());
    }
    for t in matched.iter().step_by(7) {
        lines.push(serde_json::to_string(t).unwrap());
    }
    for t in &others {
        lines.push(serde_json::to_string(t).unwrap());
    }
    lines.insert(50, "{not json".into());
    lines.push(r#"{"id":"","text":"Elektroauto","created_at":"2016-06-01T00:00:00Z"}"#.into());

    let path = dir.join("tweets.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    Fixture { path, need_ids }
}

pub fn source(location: &str, kind: SourceKind) -> SourceSpec {
    SourceSpec {
        kind,
        location: location.into(),
        keywords: vec![KEYWORD.to_lowercase()],
        interval_secs: 1,
        backoff: Backoff {
            initial_ms: 1,
            max_ms: 4,
            attempts: 3,
        },
    }
}

/// Serves `state` on an ephemeral port; the server lives as long as the
/// returned runtime.
pub fn spawn_api(
    state: Arc<needminer_service::api::AppState>,
) -> (tokio::runtime::Runtime, String) {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    rt.spawn(needminer_service::server::serve_on(
        listener,
        state,
        std::future::pending(),
    ));
    (rt, base)
}

pub fn get(url: &str) -> (u16, String) {
    let r = reqwest::blocking::get(url).unwrap();
    (r.status().as_u16(), r.text().unwrap())
}

pub fn send(method: reqwest::Method, url: &str, body: &str) -> (u16, String) {
    let r = reqwest::blocking::Client::new()
        .request(method, url)
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .unwrap();
    (r.status().as_u16(), r.text().unwrap())
}
