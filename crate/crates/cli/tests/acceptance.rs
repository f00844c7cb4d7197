//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p needminer-cli --test acceptance`.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use needminer_core::corpus::{
    aggregate_labels, load_label_records, stratified_folds, write_label_records, LabelRecord,
    RaterLabel, Tweet, Verdict,
};
use needminer_core::evaluation::{
    analytic_baseline, auc, combined_baseline_improvement, cross_domain, cross_validate, f_beta,
    improvement, labeling_cost, metrics_from_confusion, nested_cv, ConfusionCounts, Doc,
    EvalOptions, GridSpec,
};
use needminer_core::learners::{
    save_model, train, AlgorithmParams, AlgorithmSpec, NaiveBayesParams, PegasosParams,
    RandomForestParams,
};
use needminer_core::needcat::{quantify, Bucket, NeedCategory};
use needminer_core::sampling::{apply_sampling, Origin, SamplingSpec, Strategy};
use needminer_core::seeds::{self, tag};
use needminer_core::synth::{demo_models, need_tweets, to_docs, to_raw_tweets, Theme};
use needminer_core::textproc::{
    build_vocabulary, vectorize, FeatureVector, Pipeline, PipelineConfig,
};
use needminer_service::api::AppState;
use needminer_service::orchestrate::{orchestrate, Enrichers, Thresholds};
use needminer_service::query::{query_summary, Filters, Summary, Window};
use needminer_service::registry::ModelRegistry;
use needminer_service::source::{ingest, Backoff, SourceKind, SourceSpec};
use needminer_service::store::{FileStore, TweetStore};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Result<String, String>) -> Result<String, String> {
    let t = Instant::now();
    let detail = f()?;
    let took = t.elapsed();
    ensure(took < limit, || {
        format!("{detail}; took {took:?}, limit {limit:?}")
    })?;
    Ok(format!("{detail}; {:.2}s", took.as_secs_f64()))
}

fn pipeline() -> Arc<Pipeline> {
    Arc::new(Pipeline::new(PipelineConfig::recommended(), None).unwrap())
}

fn baseline_arithmetic() -> Result<String, String> {
    timed(Duration::from_secs(1), || {
        // (p_guess, printed F1, printed improvement %)
        let rows = [(0.2, 0.200, 160.5), (0.5, 0.286, 82.2), (1.0, 0.333, 56.3)];
        let mut out = Vec::new();
        for (p, f1, imp) in rows {
            let m = analytic_baseline(0.2, p).map_err(|e| e.to_string())?;
            let gain = improvement(0.521, m.f_beta).map_err(|e| e.to_string())?;
            ensure((m.f_beta - f1).abs() <= 1e-3, || {
                format!("p={p}: F1 {:.4} vs {f1}", m.f_beta)
            })?;
            ensure((gain - imp).abs() <= 0.3, || {
                format!("p={p}: improvement {gain:.2}% vs {imp}%")
            })?;
            out.push(format!("{:.3}/{gain:+.1}%", m.f_beta));
        }
        Ok(out.join(" "))
    })
}

fn f_score_rows() -> Result<String, String> {
    // (precision, recall, printed F1) per outer fold
    let rows = [
        (0.405, 0.664, 0.503),
        (0.425, 0.692, 0.527),
        (0.412, 0.673, 0.510),
        (0.459, 0.697, 0.553),
        (0.428, 0.633, 0.511),
    ];
    let mut bad = Vec::new();
    let mut got = Vec::new();
    for (i, (p, r, printed)) in rows.into_iter().enumerate() {
        let f = f_beta(p, r, 1.0);
        // independent form: harmonic mean
        let oracle = 2.0 / (1.0 / p + 1.0 / r);
        if (f - oracle).abs() > 1e-12 {
            return Err(format!(
                "fold {}: f_beta {f} disagrees with harmonic mean {oracle}",
                i + 1
            ));
        }
        got.push(format!("{f:.4}"));
        // the printed values carry three decimals; allow float slack at the edge
        if (f - printed).abs() > 5e-4 + 1e-12 {
            bad.push(format!(
                "fold {} recomputes to {f:.4}, printed {printed:.3}",
                i + 1
            ));
        }
    }
    if bad.is_empty() {
        Ok(got.join(" "))
    } else {
        Err(bad.join("; "))
    }
}

fn appendix_shares() -> Result<String, String> {
    use NeedCategory::*;
    // assignment counts and printed shares (%)
    let rows = [
        (Price, 202, 14.8),
        (CarCharacteristics, 145, 10.6),
        (ChargingInfrastructure, 305, 22.3),
        (Range, 135, 9.9),
        (ChargingTechnology, 119, 8.7),
        (EnvironmentHealth, 71, 5.2),
        (Society, 283, 20.7),
        (Other, 109, 8.0),
    ];
    let at = Utc.with_ymd_and_hms(2016, 5, 1, 12, 0, 0).unwrap();
    let items: Vec<[NeedCategory; 1]> = rows
        .iter()
        .flat_map(|&(c, n, _)| std::iter::repeat_n([c], n))
        .collect();
    let q = quantify(items.iter().map(|c| (at, &c[..])), None, Bucket::Month);
    ensure(q.len() == 1, || format!("{} buckets", q.len()))?;
    let q = &q[0];
    ensure(q.total_assignments == 1369, || {
        format!("denominator {}", q.total_assignments)
    })?;
    let mut worst: f64 = 0.0;
    for (c, n, pct) in rows {
        let share = q.shares[&c] * 100.0;
        ensure((share - n as f64 / 1369.0 * 100.0).abs() < 1e-9, || {
            format!("{c}: share {share} not over 1,369")
        })?;
        ensure((share - pct).abs() <= 0.1, || {
            format!("{c}: {share:.2}% vs printed {pct}%")
        })?;
        worst = worst.max((share - pct).abs());
    }
    Ok(format!("8 shares over 1,369, worst deviation {worst:.3}pp"))
}

fn label_aggregation() -> Result<String, String> {
    let mut rng = seeds::rng(2016);
    let (need, no_need, suspended) = (1093, 4273, 1630);
    let mut votes: Vec<u8> = Vec::new();
    votes.extend((0..need).map(|_| rng.gen_range(2..=3)));
    votes.extend(std::iter::repeat_n(0, no_need));
    votes.extend(std::iter::repeat_n(1, suspended));
    votes.shuffle(&mut rng);
    let raters: Vec<String> = (0..52).map(|i| format!("rater{i}")).collect();
    let mut records = Vec::new();
    for (i, &v) in votes.iter().enumerate() {
        let mut who: Vec<&String> = raters.choose_multiple(&mut rng, 3).collect();
        who.shuffle(&mut rng);
        for (k, r) in who.into_iter().enumerate() {
            records.push(LabelRecord {
                tweet_id: format!("t{i}"),
                labeler_id: r.clone(),
                label: if (k as u8) < v {
                    RaterLabel::Need
                } else {
                    RaterLabel::NoNeed
                },
            });
        }
    }
    records.shuffle(&mut rng);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("labels.csv");
    write_label_records(
        std::fs::File::create(&path).map_err(|e| e.to_string())?,
        &records,
    )
    .map_err(|e| e.to_string())?;
    let (loaded, rejected) = load_label_records(&path).map_err(|e| e.to_string())?;
    ensure(rejected.is_empty() && loaded.len() == records.len(), || {
        format!("{} rejected", rejected.len())
    })?;
    let agg = aggregate_labels(&loaded);
    ensure(agg.unaggregatable.is_empty(), || {
        format!("{} unaggregatable", agg.unaggregatable.len())
    })?;

    let mut counts = [0usize; 3];
    for l in &agg.labels {
        let i: usize = l.tweet_id[1..].parse().map_err(|_| "bad id".to_string())?;
        let expected = match votes[i] {
            0 => Verdict::NoNeed,
            1 => Verdict::Suspended,
            _ => Verdict::Need,
        };
        ensure(l.verdict == expected && l.votes_need == votes[i], || {
            format!("{}: {:?} with {} votes", l.tweet_id, l.verdict, votes[i])
        })?;
        counts[match l.verdict {
            Verdict::Need => 0,
            Verdict::NoNeed => 1,
            Verdict::Suspended => 2,
        }] += 1;
    }
    ensure(counts == [need, no_need, suspended], || {
        format!("partitions {counts:?}")
    })?;
    let total: usize = counts.iter().sum();
    ensure(total == 6996, || format!("total {total}"))?;
    Ok(format!(
        "{}/{}/{} = {total}",
        counts[0], counts[1], counts[2]
    ))
}

fn metric_oracle() -> Result<String, String> {
    let mut rng = seeds::rng(7);
    for trial in 0..100 {
        let n = 200;
        // scores on a coarse grid so ties occur
        let prevalence = rng.gen_range(0.05..0.95);
        let scored: Vec<(f64, bool)> = (0..n)
            .map(|_| (rng.gen_range(0..21) as f64 / 20.0, rng.gen_bool(prevalence)))
            .collect();
        let beta: f64 = rng.gen_range(0.25..4.0);
        let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for &(s, y) in &scored {
            match (s > 0.5, y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        let c = ConfusionCounts::from_pairs(scored.iter().map(|&(s, y)| (s > 0.5, y)));
        ensure((c.tp, c.fp, c.tn, c.fn_) == (tp, fp, tn, fn_), || {
            format!("trial {trial}: counts {c:?}")
        })?;
        let m = metrics_from_confusion(&c, beta).map_err(|e| e.to_string())?;
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let b2 = beta * beta;
        // F-beta from counts: (1+b^2) tp / ((1+b^2) tp + b^2 fn + fp)
        let fb = if tp == 0 {
            0.0
        } else {
            (1.0 + b2) * tp as f64 / ((1.0 + b2) * tp as f64 + b2 * fn_ as f64 + fp as f64)
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        ensure(
            close(m.precision, precision) && close(m.recall, recall) && close(m.f_beta, fb),
            || format!("trial {trial}: P/R/F {:?} vs {precision}/{recall}/{fb}", m),
        )?;
        let pos: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
        let neg: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
        if pos.is_empty() || neg.is_empty() {
            ensure(auc(&scored).is_err(), || {
                format!("trial {trial}: AUC on one class")
            })?;
            continue;
        }
        let mut wins = 0.0;
        for &p in &pos {
            for &q in &neg {
                wins += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let brute = wins / (pos.len() * neg.len()) as f64;
        let a = auc(&scored).map_err(|e| e.to_string())?;
        ensure(close(a, brute), || {
            format!("trial {trial}: AUC {a} vs {brute}")
        })?;
    }
    Ok("100 trials x 200 instances".into())
}

/// Trains `params` on `train` and scores `test` the way any reader of the
/// method would: vocabulary from the training part only, threshold 0.5.
fn oracle_f1(
    params: AlgorithmParams,
    seed: u64,
    docs: &[Doc],
    train_idx: &[usize],
    test_idx: &[usize],
) -> f64 {
    let vocab = build_vocabulary(train_idx.iter().map(|&i| &docs[i].tokens), "oracle").unwrap();
    let xs: Vec<FeatureVector> = train_idx
        .iter()
        .map(|&i| vectorize(&docs[i].tokens, &vocab))
        .collect();
    let ys: Vec<bool> = train_idx.iter().map(|&i| docs[i].label).collect();
    let model = train(&AlgorithmSpec::new(params, seed), &xs, &ys).unwrap();
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for &i in test_idx {
        let pred = model.score(&vectorize(&docs[i].tokens, &vocab)).unwrap() > 0.5;
        match (pred, docs[i].label) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    let p = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
    let r = if tp + fn_ == 0.0 {
        0.0
    } else {
        tp / (tp + fn_)
    };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn split(n: usize, test: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !test.contains(i)).collect()
}

fn nested_cv_oracle() -> Result<String, String> {
    let theme = Theme {
        words: 60,
        categories: false,
        ..Theme::default()
    };
    let docs = to_docs(&need_tweets(120, 0.35, 0.12, 31, &theme), &pipeline());
    let grid = GridSpec::Cells {
        cells: vec![
            AlgorithmParams::NaiveBayes(NaiveBayesParams { alpha: 0.05 }),
            AlgorithmParams::NaiveBayes(NaiveBayesParams { alpha: 1.0 }),
            AlgorithmParams::PegasosSvm(PegasosParams {
                lambda: 0.5,
                epochs: 5,
                ..PegasosParams::default()
            }),
            AlgorithmParams::PegasosSvm(PegasosParams::default()),
        ],
    };
    let cells = grid.cells().map_err(|e| e.to_string())?;
    let opts = EvalOptions {
        outer_k: 5,
        inner_k: 3,
        seed: 42,
        ..EvalOptions::default()
    };
    let report = nested_cv(&grid, &docs, &opts).map_err(|e| e.to_string())?;

    let labels: Vec<bool> = docs.iter().map(|d| d.label).collect();
    let outer = stratified_folds(&labels, 5, seeds::derive(42, &[tag::OUTER_FOLDS])).unwrap();
    let mut picks = Vec::new();
    for (o, test) in outer.iter().enumerate() {
        let train_idx = split(docs.len(), test);
        let sub_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
        let inner = stratified_folds(
            &sub_labels,
            3,
            seeds::derive(42, &[tag::INNER_FOLDS, o as u64]),
        )
        .unwrap();
        let means: Vec<f64> = cells
            .iter()
            .map(|&c| {
                let scores: Vec<f64> = inner
                    .iter()
                    .map(|f| {
                        let tr: Vec<usize> = split(train_idx.len(), f)
                            .into_iter()
                            .map(|p| train_idx[p])
                            .collect();
                        let te: Vec<usize> = f.iter().map(|&p| train_idx[p]).collect();
                        oracle_f1(c, 42, &docs, &tr, &te)
                    })
                    .collect();
                scores.iter().sum::<f64>() / scores.len() as f64
            })
            .collect();
        let best = (0..cells.len()).fold(0, |b, c| if means[c] > means[b] { c } else { b });
        let outer_f1 = oracle_f1(cells[best], 42, &docs, &train_idx, test);
        let got = &report.folds[o];
        ensure(got.inner_scores == means, || {
            format!("fold {o}: inner {:?} vs {means:?}", got.inner_scores)
        })?;
        ensure(got.params == cells[best], || {
            format!("fold {o}: picked {} vs {}", got.params, cells[best])
        })?;
        ensure(got.metrics.f_beta == outer_f1, || {
            format!("fold {o}: F1 {} vs {outer_f1}", got.metrics.f_beta)
        })?;
        picks.push(best);
    }
    Ok(format!("120 docs, 4 cells, selections {picks:?}"))
}

fn classifier_sanity() -> Result<String, String> {
    timed(Duration::from_secs(60), || {
        let theme = Theme {
            categories: false,
            ..Theme::default()
        };
        let clean = to_docs(&need_tweets(500, 0.3, 0.0, 11, &theme), &pipeline());
        let noisy = to_docs(&need_tweets(500, 0.3, 0.05, 11, &theme), &pipeline());
        let opts = EvalOptions::default();
        let specs = [
            AlgorithmParams::NaiveBayes(NaiveBayesParams::default()),
            AlgorithmParams::RandomForest(RandomForestParams {
                trees: 30,
                features: 20,
                max_depth: None,
                ..RandomForestParams::default()
            }),
            AlgorithmParams::PegasosSvm(PegasosParams::default()),
        ];
        let mut out = Vec::new();
        for p in specs {
            let spec = AlgorithmSpec::new(p, 1);
            let c = cross_validate(&spec, &clean, &opts)
                .map_err(|e| e.to_string())?
                .aggregate
                .mean;
            let n = cross_validate(&spec, &noisy, &opts)
                .map_err(|e| e.to_string())?
                .aggregate
                .mean;
            ensure(c >= 0.95 && n >= 0.85, || {
                format!("{p}: clean {c:.3}, noisy {n:.3}")
            })?;
            out.push(format!("{:?} {c:.3}/{n:.3}", p.kind()));
        }
        Ok(out.join(", "))
    })
}

fn smote_geometry() -> Result<String, String> {
    let mut rng = seeds::rng(5);
    let dim = 40;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..150 {
        let y = i % 5 == 0;
        let pairs: Vec<(u32, f64)> = (0..6)
            .map(|_| (rng.gen_range(0..dim) as u32, rng.gen_range(0.5..3.0)))
            .collect();
        let dense = pairs.iter().fold(vec![0.0; dim], |mut d, &(j, v)| {
            d[j as usize] = v;
            d
        });
        xs.push(FeatureVector::from_dense(&dense).map_err(|e| e.to_string())?);
        ys.push(y);
    }
    let r = apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Smote, 9))
        .map_err(|e| e.to_string())?;
    let (pos, neg) = r.class_counts();
    ensure(pos == neg, || format!("classes {pos}/{neg} after SMOTE"))?;
    let mut synthetic = 0;
    for (x, o) in r.xs.iter().zip(&r.origins) {
        let Origin::Synthetic { base, neighbor, u } = *o else {
            continue;
        };
        synthetic += 1;
        ensure(
            (0.0..1.0).contains(&u) && ys[base] && ys[neighbor] && base != neighbor,
            || format!("bad parents {base}/{neighbor} u={u}"),
        )?;
        let (mi, mj) = (xs[base].to_dense(), xs[neighbor].to_dense());
        let got = x.to_dense();
        for k in 0..dim {
            let want = mi[k] + u * (mj[k] - mi[k]);
            ensure((got[k] - want).abs() <= 1e-9, || {
                format!("coordinate {k}: {} vs {want}", got[k])
            })?;
        }
    }
    ensure(synthetic == 120 - 30, || {
        format!("{synthetic} synthetic points")
    })?;
    Ok(format!(
        "{synthetic} synthetic points on their segments, classes {pos}/{neg}"
    ))
}

fn labeling_cost_model() -> Result<String, String> {
    let h = labeling_cost(5500, 20.0);
    ensure((h - 30.6).abs() <= 0.05, || format!("{h:.3}h"))?;
    Ok(format!("{h:.2}h"))
}

fn cross_domain_harness() -> Result<String, String> {
    let spec = AlgorithmSpec::new(AlgorithmParams::NaiveBayes(NaiveBayesParams::default()), 1);
    let opts = EvalOptions::default();
    let p = pipeline();
    let docs = |n, seed, theme: &Theme| to_docs(&need_tweets(n, 0.3, 0.0, seed, theme), &p);
    let a = docs(300, 21, &Theme::named("a", "wunsch", "plausch"));
    let twin = docs(300, 22, &Theme::named("b", "wunsch", "plausch"));
    let r = cross_domain(&a, &twin, &spec, &opts, true).map_err(|e| e.to_string())?;
    let gap = (r.a_to_b - r.intra_b)
        .abs()
        .max((r.b_to_a - r.intra_a).abs());
    ensure(gap <= 0.1, || format!("twin gap {gap:.3}"))?;

    let plain = |prefix: &str, need: &str, chat: &str| Theme {
        categories: false,
        ..Theme::named(prefix, need, chat)
    };
    let a = docs(300, 21, &plain("a", "wunsch", "plausch"));
    let other = docs(240, 23, &plain("b", "bahnfrust", "bahnklatsch"));
    let d = cross_domain(&a, &other, &spec, &opts, true).map_err(|e| e.to_string())?;
    ensure(
        d.cross_max <= 0.1 && d.intra_a >= 0.9 && d.intra_b >= 0.9,
        || {
            format!(
                "disjoint: cross {:.3}, intra {:.3}/{:.3}",
                d.cross_max, d.intra_a, d.intra_b
            )
        },
    )?;

    // published cross F1 and the two domains' need shares
    let pct = combined_baseline_improvement(0.284, 332.0 / 2396.0, 172.0 / 2396.0)
        .map_err(|e| e.to_string())?;
    ensure((pct - 50.3).abs() <= 0.5, || {
        format!("improvement {pct:.2}%")
    })?;
    Ok(format!(
        "twin gap {gap:.3}; disjoint cross {:.3}, intra {:.3}/{:.3}; improvement {pct:+.2}%",
        d.cross_max, d.intra_a, d.intra_b
    ))
}

const KEYWORD: &str = "elektroauto";

/// 60 matching tweets (a share of them needs), 10 repeats and 30 others.
fn service_fixture(dir: &std::path::Path) -> std::path::PathBuf {
    let generated = need_tweets(200, 0.4, 0.0, 17, &Theme::default());
    let start = Utc.with_ymd_and_hms(2016, 6, 1, 8, 0, 0).unwrap();
    let mut raw: Vec<Tweet> = to_raw_tweets(&generated, start, chrono::Duration::hours(5));
    for t in raw.iter_mut().take(60) {
        t.text = format!("{} Elektroauto", t.text);
    }
    let mut lines: Vec<String> = raw[..90]
        .iter()
        .map(|t| serde_json::to_string(t).unwrap())
        .collect();
    lines.extend(raw[..10].iter().map(|t| serde_json::to_string(t).unwrap()));
    let path = dir.join("stream.jsonl");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn service_round_trip() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let feed = service_fixture(dir.path());
    let (need, cats) =
        demo_models(400, 7, &Theme::default(), pipeline()).map_err(|e| e.to_string())?;
    let mut reg =
        ModelRegistry::open(dir.path().join("registry.json")).map_err(|e| e.to_string())?;
    save_model(&need, dir.path().join("need.json")).map_err(|e| e.to_string())?;
    reg.register("need", "need.json")
        .map_err(|e| e.to_string())?;
    for (c, m) in &cats {
        save_model(m, dir.path().join(format!("{c}.json"))).map_err(|e| e.to_string())?;
        reg.register(c.as_str(), format!("{c}.json"))
            .map_err(|e| e.to_string())?;
    }
    reg.save().map_err(|e| e.to_string())?;

    let spec = SourceSpec {
        kind: SourceKind::FileReplay,
        location: feed.display().to_string(),
        keywords: vec![KEYWORD.into()],
        interval_secs: 1,
        backoff: Backoff::default(),
    };
    let mut store = FileStore::open(dir.path().join("store")).map_err(|e| e.to_string())?;
    let first = ingest(&spec, &mut store).map_err(|e| e.to_string())?;
    ensure(first.new == 60 && first.duplicates == 10, || {
        format!("first ingest {first:?}")
    })?;
    let th = Thresholds::default();
    orchestrate(&mut store, &reg, &Enrichers::default(), th).map_err(|e| e.to_string())?;
    let again = ingest(&spec, &mut store).map_err(|e| e.to_string())?;
    ensure(again.new == 0, || format!("re-ingest added {}", again.new))?;

    // in-process quantification straight from the stored annotations
    let snap = store.snapshot();
    let mut counts: BTreeMap<NeedCategory, u64> =
        NeedCategory::ALL.iter().map(|&c| (c, 0)).collect();
    let mut needs = 0u64;
    for t in snap.iter() {
        let a = t.annotation.as_ref().ok_or("unannotated tweet")?;
        if a.need_score > th.need {
            needs += 1;
            for c in &a
                .categories
                .as_ref()
                .ok_or("need without categories")?
                .categories
            {
                *counts.get_mut(c).unwrap() += 1;
            }
        }
    }
    let local = query_summary(&snap, &Window::default(), &Filters::default(), th, 10)
        .map_err(|e| e.to_string())?;

    let state = AppState::new(
        snap.clone(),
        Some(reg.load().map_err(|e| e.to_string())?),
        th,
        Enrichers::default(),
    );
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .map_err(|e| e.to_string())?;
    let base = format!(
        "http://{}",
        listener.local_addr().map_err(|e| e.to_string())?
    );
    rt.spawn(needminer_service::server::serve_on(
        listener,
        state,
        std::future::pending(),
    ));
    let client = reqwest::blocking::Client::new();
    let summary = |client: &reqwest::blocking::Client| -> Result<Summary, String> {
        let body = client
            .get(format!("{base}/api/v1/needs/summary"))
            .send()
            .and_then(|r| r.text())
            .map_err(|e| e.to_string())?;
        serde_json::from_str(&body).map_err(|e| format!("{e}: {body}"))
    };
    let api = summary(&client)?;
    ensure(api == local, || {
        "API summary differs from in-process query".into()
    })?;
    let q = api.quantification.as_ref().ok_or("no quantification")?;
    ensure(q.total_tweets == needs && q.counts == counts, || {
        format!(
            "API counts {:?} over {} vs {counts:?} over {needs}",
            q.counts, q.total_tweets
        )
    })?;

    let mut flagged = Vec::new();
    for t in [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95, 1.0] {
        let status = client
            .put(format!("{base}/api/v1/config/threshold"))
            .header("content-type", "application/json")
            .body(format!("{{\"value\":{t}}}"))
            .send()
            .map_err(|e| e.to_string())?
            .status();
        ensure(status.is_success(), || {
            format!("PUT threshold {t}: {status}")
        })?;
        flagged.push(
            summary(&client)?
                .quantification
                .map_or(0, |q| q.total_tweets),
        );
    }
    ensure(flagged.windows(2).all(|w| w[1] <= w[0]), || {
        format!("flagged by threshold {flagged:?}")
    })?;
    Ok(format!(
        "{needs} needs of 60 stored, API == in-process; flagged {flagged:?}"
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 11] = [
        ("baseline arithmetic", baseline_arithmetic),
        ("F-score reproduction", f_score_rows),
        ("appendix shares", appendix_shares),
        ("label aggregation", label_aggregation),
        ("metric oracle", metric_oracle),
        ("nested-CV oracle", nested_cv_oracle),
        ("classifier sanity", classifier_sanity),
        ("SMOTE geometry", smote_geometry),
        ("labeling cost", labeling_cost_model),
        ("cross-domain harness", cross_domain_harness),
        ("service round-trip", service_round_trip),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
        let _ = std::io::stdout().flush();
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
