//! File loading shared by the subcommands.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, NaiveDate, Utc};
use needminer_core::corpus::{
    aggregate_labels, load_label_records, load_tweets, AggregatedLabel, Corpus, RecordError, Tweet,
    TweetFormat, Verdict,
};
use needminer_core::evaluation::{tokenize_corpus, Doc};
use needminer_core::learners::{
    AlgorithmKind, AlgorithmParams, NaiveBayesParams, PegasosParams, RandomForestParams,
};
use needminer_core::sampling::{SamplingSpec, Strategy};
use needminer_core::textproc::{LexicalResource, Pipeline, PipelineConfig};
use serde::Deserialize;

use crate::cli::{
    Algo, AlgoArgs, DataArgs, PipelineArgs, SamplingArg, SamplingArgs, TweetFormatArg,
};
use crate::UsageError;

pub fn tweet_format(path: &Path, explicit: Option<TweetFormatArg>) -> TweetFormat {
    match explicit {
        Some(TweetFormatArg::Csv) => TweetFormat::Csv,
        Some(TweetFormatArg::Jsonl) => TweetFormat::Jsonl,
        None if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")) =>
        {
            TweetFormat::Csv
        }
        None => TweetFormat::Jsonl,
    }
}

fn warn_rejected(what: &Path, rejected: &[RecordError]) {
    for r in rejected.iter().take(5) {
        log::warn!("{}: line {}: {}", what.display(), r.line, r.message);
    }
    if rejected.len() > 5 {
        log::warn!(
            "{}: {} more rejected records",
            what.display(),
            rejected.len() - 5
        );
    }
}

pub fn tweets(path: &Path, format: Option<TweetFormatArg>) -> Result<Corpus> {
    let loaded = load_tweets(path, tweet_format(path, format))?;
    warn_rejected(path, &loaded.rejected);
    Ok(loaded.corpus)
}

#[derive(Debug, Deserialize)]
struct AggregatedRow {
    tweet_id: String,
    verdict: String,
    votes_need: u8,
}

fn verdict_token(v: Verdict) -> &'static str {
    match v {
        Verdict::Need => "need",
        Verdict::NoNeed => "no_need",
        Verdict::Suspended => "suspended",
    }
}

fn read_aggregated(path: &Path) -> Result<Vec<AggregatedLabel>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<AggregatedRow>().enumerate() {
        let row = row.with_context(|| format!("{}: line {}", path.display(), i + 2))?;
        let verdict = match row.verdict.as_str() {
            "need" => Verdict::Need,
            "no_need" => Verdict::NoNeed,
            "suspended" => Verdict::Suspended,
            other => bail!(
                "{}: line {}: unknown verdict {other:?}",
                path.display(),
                i + 2
            ),
        };
        out.push(AggregatedLabel {
            tweet_id: row.tweet_id,
            verdict,
            votes_need: row.votes_need,
        });
    }
    Ok(out)
}

pub fn write_aggregated(path: &Path, labels: &[AggregatedLabel]) -> Result<()> {
    let mut wtr =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    wtr.write_record(["tweet_id", "verdict", "votes_need"])?;
    for l in labels {
        wtr.write_record([
            l.tweet_id.as_str(),
            verdict_token(l.verdict),
            &l.votes_need.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Rater records are aggregated on the fly; a file whose header names a
/// `verdict` column is taken as already aggregated.
pub fn labels(path: &Path) -> Result<Vec<AggregatedLabel>> {
    let mut header = String::new();
    BufReader::new(File::open(path).with_context(|| format!("cannot read {}", path.display()))?)
        .read_line(&mut header)?;
    if header.split(',').any(|c| c.trim() == "verdict") {
        return read_aggregated(path);
    }
    let (records, rejected) = load_label_records(path)?;
    warn_rejected(path, &rejected);
    let agg = aggregate_labels(&records);
    if !agg.unaggregatable.is_empty() {
        log::warn!(
            "{}: {} tweets could not be aggregated",
            path.display(),
            agg.unaggregatable.len()
        );
    }
    Ok(agg.labels)
}

/// Labels restricted to tweets present in `corpus`, so a label file may
/// cover more tweets than survived loading or filtering.
pub fn labeled_corpus(
    data: &Path,
    format: Option<TweetFormatArg>,
    labels_path: &Path,
) -> Result<Corpus> {
    let corpus = tweets(data, format)?;
    let ids: BTreeSet<&str> = corpus.tweets.iter().map(|t| t.id.as_str()).collect();
    let all = labels(labels_path)?;
    let total = all.len();
    let kept: Vec<AggregatedLabel> = all
        .into_iter()
        .filter(|l| ids.contains(l.tweet_id.as_str()))
        .collect();
    if kept.len() < total {
        log::warn!(
            "{} labels reference tweets not in {}",
            total - kept.len(),
            data.display()
        );
    }
    Ok(corpus.with_labels(kept)?)
}

pub fn pipeline(args: &PipelineArgs) -> Result<Arc<Pipeline>> {
    let config = match &args.pipeline {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<PipelineConfig>(&text)
                .with_context(|| format!("{}: bad pipeline config", p.display()))?
        }
        None => PipelineConfig::recommended(),
    };
    let lexicon = args
        .lexicon
        .as_ref()
        .map(LexicalResource::load)
        .transpose()?
        .map(Arc::new);
    Ok(Arc::new(Pipeline::new(config, lexicon)?))
}

pub fn docs(data: &DataArgs, pipe: &Pipeline) -> Result<Vec<Doc>> {
    let corpus = labeled_corpus(&data.data, data.format, &data.labels)?;
    Ok(tokenize_corpus(&corpus, pipe)?)
}

pub fn algo_name(algo: Algo) -> String {
    use clap::ValueEnum;
    algo.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

pub fn kind(algo: Algo) -> AlgorithmKind {
    match algo {
        Algo::NaiveBayes => AlgorithmKind::NaiveBayes,
        Algo::RandomForest => AlgorithmKind::RandomForest,
        Algo::PegasosSvm => AlgorithmKind::PegasosSvm,
    }
}

/// Defaults of the chosen family, overridden by its own flags. Flags of
/// another family are a usage error.
pub fn params(a: &AlgoArgs) -> Result<AlgorithmParams> {
    let foreign: Vec<&str> = match a.algo {
        Algo::NaiveBayes => [
            ("--bag-fraction", a.bag_fraction.is_some()),
            ("--trees", a.trees.is_some()),
            ("--features", a.features.is_some()),
            ("--max-depth", a.max_depth.is_some()),
            ("--lambda", a.lambda.is_some()),
            ("--epochs", a.epochs.is_some()),
        ]
        .iter()
        .filter(|f| f.1)
        .map(|f| f.0)
        .collect(),
        Algo::RandomForest => [
            ("--alpha", a.alpha.is_some()),
            ("--lambda", a.lambda.is_some()),
            ("--epochs", a.epochs.is_some()),
        ]
        .iter()
        .filter(|f| f.1)
        .map(|f| f.0)
        .collect(),
        Algo::PegasosSvm => [
            ("--alpha", a.alpha.is_some()),
            ("--bag-fraction", a.bag_fraction.is_some()),
            ("--trees", a.trees.is_some()),
            ("--features", a.features.is_some()),
            ("--max-depth", a.max_depth.is_some()),
        ]
        .iter()
        .filter(|f| f.1)
        .map(|f| f.0)
        .collect(),
    };
    if let Some(flag) = foreign.first() {
        return Err(UsageError(format!(
            "{flag} does not apply to --algo {}",
            algo_name(a.algo)
        ))
        .into());
    }
    let p = match a.algo {
        Algo::NaiveBayes => {
            let d = NaiveBayesParams::default();
            AlgorithmParams::NaiveBayes(NaiveBayesParams {
                alpha: a.alpha.unwrap_or(d.alpha),
            })
        }
        Algo::RandomForest => {
            let d = RandomForestParams::default();
            AlgorithmParams::RandomForest(RandomForestParams {
                bag_fraction: a.bag_fraction.unwrap_or(d.bag_fraction),
                trees: a.trees.unwrap_or(d.trees),
                features: a.features.unwrap_or(d.features),
                max_depth: match a.max_depth {
                    Some(0) => None,
                    Some(n) => Some(n),
                    None => d.max_depth,
                },
            })
        }
        Algo::PegasosSvm => {
            let d = PegasosParams::default();
            AlgorithmParams::PegasosSvm(PegasosParams {
                lambda: a.lambda.unwrap_or(d.lambda),
                epochs: a.epochs.unwrap_or(d.epochs),
                ..d
            })
        }
    };
    p.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(p)
}

pub fn sampling(a: &SamplingArgs, seed: u64) -> Option<SamplingSpec> {
    let strategy = match a.sampling {
        SamplingArg::None => return None,
        SamplingArg::Oversample => Strategy::Oversample,
        SamplingArg::Undersample => Strategy::Undersample,
        SamplingArg::Smote => Strategy::Smote,
    };
    Some(SamplingSpec {
        smote_k: a.smote_k,
        ..SamplingSpec::new(strategy, seed)
    })
}

/// RFC 3339, or `YYYY-MM-DD` meaning midnight UTC.
pub fn time(flag: &str, s: &str) -> Result<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| {
            UsageError(format!(
                "{flag}: expected RFC 3339 time or YYYY-MM-DD, got {s:?}"
            ))
            .into()
        })
}

pub fn write_jsonl(path: &Path, tweets: &[Tweet]) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    );
    for t in tweets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
