#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, TimeZone, Utc};
use needminer_core::corpus::{write_label_records, LabelRecord, RaterLabel};
use needminer_core::synth::{need_tweets, to_raw_tweets, SynthTweet, Theme};

pub struct Toy {
    pub data: PathBuf,
    pub labels: PathBuf,
    pub categories: PathBuf,
    pub tweets: Vec<SynthTweet>,
    /// Tweets given a single need vote, hence suspended.
    pub suspended: Vec<String>,
}

/// `n` synthetic tweets, 30% needs, one hour apart from 2016-01-01. Every
/// tenth tweet gets split rater votes.
pub fn toy(dir: &Path, name: &str, n: usize, seed: u64, theme: &Theme) -> Toy {
    let tweets = need_tweets(n, 0.3, 0.0, seed, theme);
    let raw = to_raw_tweets(
        &tweets,
        Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap(),
        Duration::hours(1),
    );
    let data = dir.join(format!("{name}.jsonl"));
    let lines: Vec<String> = raw
        .iter()
        .map(|t| serde_json::to_string(t).unwrap())
        .collect();
    std::fs::write(&data, lines.join("\n") + "\n").unwrap();

    let mut records = Vec::new();
    let mut suspended = Vec::new();
    for (i, t) in tweets.iter().enumerate() {
        let votes = if i % 10 == 9 {
            suspended.push(t.id.clone());
            1
        } else if t.need {
            3
        } else {
            0
        };
        for r in 0..3 {
            records.push(LabelRecord {
                tweet_id: t.id.clone(),
                labeler_id: format!("r{r}"),
                label: if r < votes {
                    RaterLabel::Need
                } else {
                    RaterLabel::NoNeed
                },
            });
        }
    }
    let labels = dir.join(format!("{name}-raters.csv"));
    write_label_records(std::fs::File::create(&labels).unwrap(), &records).unwrap();

    let categories = dir.join(format!("{name}-categories.csv"));
    let mut rows = vec!["tweet_id,category".to_string()];
    for t in &tweets {
        for c in &t.categories {
            rows.push(format!("{},{}", t.id, c.as_str()));
        }
    }
    std::fs::write(&categories, rows.join("\n") + "\n").unwrap();
    Toy {
        data,
        labels,
        categories,
        tweets,
        suspended,
    }
}

pub fn needminer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_needminer"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and expects exit 0.
pub fn ok(args: &[&str]) -> String {
    let o = needminer(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}\nstderr: {}", stderr(&o));
    stdout(&o)
}

pub fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
