use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use needminer_core::corpus::{aggregate_labels, filter_corpus, load_label_records, FilterRules};
use needminer_core::evaluation::{
    cross_domain, cross_validate, learning_curve, nested_cv, tokenize_corpus, CrossDomainReport,
    EvalOptions, EvaluationReport, GridSpec,
};
use needminer_core::learners::{load_model, save_model, AlgorithmSpec, TrainedModel};
use needminer_core::needcat::{
    load_category_labels, quantify, quantify_total, train_category_models, Bucket,
    CategoryAssignment, CategoryDoc, CategoryTrainingOptions, NeedCategory, NeedQuantification,
};
use needminer_core::seeds::{self, tag};
use needminer_service::config::{config_path, ServiceConfig};
use needminer_service::orchestrate::Thresholds;
use needminer_service::query::{query_summary, query_timeseries, Filters, Window};
use needminer_service::registry::{ModelRegistry, NEED_ROLE};
use needminer_service::source::{ingest, Backoff, SourceKind, SourceSpec};
use needminer_service::store::{FileStore, TweetStore};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::inputs;
use crate::UsageError;

/// What a command produced: the JSON result and its human rendering.
pub struct Outcome {
    pub result: Value,
    pub text: String,
}

impl Outcome {
    fn new(result: &impl Serialize, text: String) -> Result<Outcome> {
        Ok(Outcome {
            result: serde_json::to_value(result)?,
            text,
        })
    }

    /// For results with no better rendering than their JSON.
    fn json(result: &impl Serialize) -> Result<Outcome> {
        let result = serde_json::to_value(result)?;
        let text = serde_json::to_string_pretty(&result)?;
        Ok(Outcome { result, text })
    }
}

pub fn run(cmd: &Command, seed: u64) -> Result<Outcome> {
    match cmd {
        Command::Ingest(a) => ingest_cmd(a),
        Command::Filter(a) => filter(a),
        Command::AggregateLabels(a) => aggregate(a),
        Command::Train(a) => train(a, seed),
        Command::Evaluate(a) => evaluate(a, seed),
        Command::NestedCv(a) => nested(a, seed),
        Command::LearningCurve(a) => curve(a, seed),
        Command::CrossDomain(a) => domains(a, seed),
        Command::TrainCategories(a) => categories(a, seed),
        Command::Quantify(a) => quantify_cmd(a),
        Command::Classify(a) => classify(a),
        Command::Serve(a) => serve(a),
        Command::Report(a) => report(a),
    }
}

fn ingest_cmd(a: &IngestArgs) -> Result<Outcome> {
    let (spec, store_dir) = match &a.config {
        Some(path) => {
            let cfg = ServiceConfig::load(path)?;
            let Some(src) = cfg.source else {
                bail!("{} has no [source] section", path.display());
            };
            (src, cfg.store)
        }
        None => {
            let (kind, location) = match (&a.file, &a.url) {
                (Some(f), None) => (SourceKind::FileReplay, f.display().to_string()),
                (None, Some(u)) => (SourceKind::HttpPoll, u.clone()),
                _ => unreachable!("clap enforces exactly one source"),
            };
            let spec = SourceSpec {
                kind,
                location,
                keywords: a.keywords.clone(),
                interval_secs: 1,
                backoff: Backoff::default(),
            };
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            (spec, a.store.clone().expect("clap requires --store"))
        }
    };
    let mut store = FileStore::open(&store_dir)?;
    let report = ingest(&spec, &mut store)?;
    let text = format!(
        "seen {}  matched {}  new {}  duplicates {}  malformed {}  stored {}",
        report.seen,
        report.matched,
        report.new,
        report.duplicates,
        report.malformed,
        store.len()
    );
    Outcome::new(&report, text)
}

fn filter(a: &FilterArgs) -> Result<Outcome> {
    let corpus = inputs::tweets(&a.data, a.format)?;
    let author_blocklist = match &a.blocklist {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("cannot read {}", p.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
        None => Default::default(),
    };
    let rules = FilterRules {
        drop_urls: a.drop_urls,
        drop_retweets: a.drop_retweets,
        max_posts_per_author_day: a.max_per_author_day,
        author_blocklist,
    };
    let (kept, report) = filter_corpus(&corpus, &rules);
    if let Some(w) = &a.write {
        inputs::write_jsonl(w, &kept.tweets)?;
    }
    let mut text = format!("input {}  kept {}\n", report.input, report.kept);
    for (rule, n) in &report.removed {
        let _ = writeln!(
            text,
            "  removed by {}: {n}",
            serde_json::to_value(rule)?.as_str().unwrap_or("?")
        );
    }
    Outcome::new(&report, text.trim_end().to_string())
}

fn aggregate(a: &AggregateArgs) -> Result<Outcome> {
    let (records, rejected) = load_label_records(&a.labels)?;
    let agg = aggregate_labels(&records);
    if let Some(w) = &a.write {
        inputs::write_aggregated(w, &agg.labels)?;
    }
    let mut counts = BTreeMap::from([("need", 0usize), ("no_need", 0), ("suspended", 0)]);
    for l in &agg.labels {
        let key = match l.verdict.as_class() {
            Some(true) => "need",
            Some(false) => "no_need",
            None => "suspended",
        };
        *counts.get_mut(key).expect("known key") += 1;
    }
    let result = json!({
        "need": counts["need"],
        "no_need": counts["no_need"],
        "suspended": counts["suspended"],
        "total": agg.labels.len(),
        "unaggregatable": agg.unaggregatable,
        "rejected_records": rejected,
    });
    let text = format!(
        "need {}  no_need {}  suspended {}  total {}  unaggregatable {}  rejected records {}",
        counts["need"],
        counts["no_need"],
        counts["suspended"],
        agg.labels.len(),
        agg.unaggregatable.len(),
        rejected.len()
    );
    Ok(Outcome { result, text })
}

fn eval_options(
    seed: u64,
    outer: usize,
    inner: usize,
    sampling: &SamplingArgs,
    beta: f64,
) -> Result<EvalOptions> {
    if outer < 2 || inner < 2 {
        return Err(UsageError("fold counts must be at least 2".into()).into());
    }
    if beta.is_nan() || beta <= 0.0 {
        return Err(UsageError(format!("--beta {beta} must be > 0")).into());
    }
    Ok(EvalOptions {
        outer_k: outer,
        inner_k: inner,
        seed,
        sampling: inputs::sampling(sampling, seed),
        beta,
    })
}

fn train(a: &TrainArgs, seed: u64) -> Result<Outcome> {
    let params = inputs::params(&a.algo)?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let docs = inputs::docs(&a.data, &pipe)?;
    let spec = AlgorithmSpec::new(params, seeds::derive(seed, &[tag::TREE]));
    let sampling = inputs::sampling(&a.sampling, seeds::derive(seed, &[tag::SAMPLING]));
    let training: Vec<_> = docs.iter().map(|d| (d.tokens.clone(), d.label)).collect();
    let fitted_on = a.data.data.display().to_string();
    let model = TrainedModel::fit_tokens(&spec, sampling.as_ref(), pipe, &training, &fitted_on)?;
    save_model(&model, &a.model)?;
    let version = match &a.register {
        Some(reg) => Some(register(reg, NEED_ROLE, &a.model)?),
        None => None,
    };
    let result = json!({
        "model": a.model,
        "algorithm": params,
        "instances": docs.len(),
        "needs": docs.iter().filter(|d| d.label).count(),
        "vocabulary": model.vocabulary().len(),
        "registered_version": version,
    });
    let mut text = format!(
        "trained {params} on {} tweets, vocabulary {}, saved to {}",
        docs.len(),
        model.vocabulary().len(),
        a.model.display()
    );
    if let Some(v) = version {
        let _ = write!(text, " (registered as need v{v})");
    }
    Ok(Outcome { result, text })
}

/// Registers `model` under `role`, storing an absolute path so the registry
/// does not depend on the working directory.
fn register(registry: &Path, role: &str, model: &Path) -> Result<u32> {
    let mut reg = ModelRegistry::open(registry)?;
    let abs = std::fs::canonicalize(model)
        .with_context(|| format!("cannot resolve {}", model.display()))?;
    let v = reg.register(role, abs)?;
    reg.save()?;
    Ok(v)
}

fn evaluate(a: &EvaluateArgs, seed: u64) -> Result<Outcome> {
    let params = inputs::params(&a.algo)?;
    let opts = eval_options(seed, a.folds, 2, &a.sampling, a.beta)?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let docs = inputs::docs(&a.data, &pipe)?;
    let report = cross_validate(&AlgorithmSpec::new(params, seed), &docs, &opts)?
        .with_pipeline(pipe.config().clone());
    Outcome::new(&report, report.to_table())
}

fn grid(arg: &str, algo: Algo) -> Result<GridSpec> {
    let kind = inputs::kind(algo);
    if arg == "default" {
        return Ok(GridSpec::default_for(kind));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("cannot read grid {arg}"))?;
    let g: GridSpec = serde_json::from_str(&text).with_context(|| format!("{arg}: bad grid"))?;
    let cells = g.cells()?;
    if let Some(c) = cells.iter().find(|c| c.kind() != kind) {
        return Err(UsageError(format!(
            "grid cell {c} does not match --algo {}",
            inputs::algo_name(algo)
        ))
        .into());
    }
    Ok(g)
}

fn nested(a: &NestedCvArgs, seed: u64) -> Result<Outcome> {
    let g = grid(&a.grid, a.algo)?;
    let opts = eval_options(seed, a.outer, a.inner, &a.sampling, a.beta)?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let docs = inputs::docs(&a.data, &pipe)?;
    let report = nested_cv(&g, &docs, &opts)?.with_pipeline(pipe.config().clone());
    Outcome::new(&report, report.to_table())
}

fn curve(a: &LearningCurveArgs, seed: u64) -> Result<Outcome> {
    let params = inputs::params(&a.algo)?;
    let opts = eval_options(seed, a.folds, 2, &a.sampling, 1.0)?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let docs = inputs::docs(&a.data, &pipe)?;
    let lc = learning_curve(&AlgorithmSpec::new(params, seed), &docs, &a.sizes, &opts)?;
    Outcome::new(&lc, lc.to_csv().trim_end().to_string())
}

fn domains(a: &CrossDomainArgs, seed: u64) -> Result<Outcome> {
    let params = inputs::params(&a.algo)?;
    let opts = eval_options(seed, a.folds, 2, &a.sampling, 1.0)?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let load = |data: &Path, labels: &Path| -> Result<_> {
        Ok(tokenize_corpus(
            &inputs::labeled_corpus(data, None, labels)?,
            &pipe,
        )?)
    };
    let da = load(&a.data_a, &a.labels_a)?;
    let db = load(&a.data_b, &a.labels_b)?;
    let r = cross_domain(
        &da,
        &db,
        &AlgorithmSpec::new(params, seed),
        &opts,
        !a.no_size_match,
    )?;
    Outcome::new(&r, domain_table(&r))
}

fn domain_table(r: &CrossDomainReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>8} {:>8}", "train\\test", "A", "B");
    let _ = writeln!(s, "{:<12} {:>8.3} {:>8.3}", "A", r.intra_a, r.a_to_b);
    let _ = writeln!(s, "{:<12} {:>8.3} {:>8.3}", "B", r.b_to_a, r.intra_b);
    let _ = writeln!(
        s,
        "\nsizes {} / {}  prevalence {:.3} / {:.3}",
        r.size_a, r.size_b, r.prevalence_a, r.prevalence_b
    );
    let _ = writeln!(s, "combined F1 {:.3}", r.combined);
    let _ = write!(
        s,
        "best cross F1 {:.3} vs combined baseline {:.3}: {:+.2}%",
        r.cross_max, r.combined_baseline, r.cross_improvement_pct
    );
    s
}

fn categories(a: &TrainCategoriesArgs, seed: u64) -> Result<Outcome> {
    let g = grid(&a.grid, a.algo)?;
    let eval = eval_options(
        seed,
        a.outer,
        a.inner,
        &SamplingArgs {
            sampling: SamplingArg::None,
            smote_k: 5,
        },
        1.0,
    )?;
    let pipe = inputs::pipeline(&a.pipeline)?;
    let corpus = inputs::tweets(&a.data, a.format)?;
    let (labels, rejected) = load_category_labels(&a.category_labels)?;
    for r in rejected.iter().take(5) {
        log::warn!(
            "{}: line {}: {}",
            a.category_labels.display(),
            r.line,
            r.message
        );
    }
    let docs: Vec<CategoryDoc> = corpus
        .tweets
        .iter()
        .filter_map(|t| {
            labels.get(&t.id).map(|cats| CategoryDoc {
                id: t.id.clone(),
                tokens: pipe.tokens(&t.text),
                categories: cats.clone(),
            })
        })
        .collect();
    if docs.is_empty() {
        bail!("no tweet in {} has a category label", a.data.display());
    }
    let training = train_category_models(&docs, pipe, &CategoryTrainingOptions { grid: g, eval })?;
    std::fs::create_dir_all(&a.models_dir)
        .with_context(|| format!("cannot create {}", a.models_dir.display()))?;
    let mut trained = BTreeMap::new();
    let mut text = format!("{:<26} {:>6} {:>6}  {}\n", "category", "F1", "sd", "model");
    for (cat, model) in &training.models {
        let path = a.models_dir.join(format!("{cat}.json"));
        save_model(model, &path)?;
        let version = match &a.register {
            Some(reg) => Some(register(reg, cat.as_str(), &path)?),
            None => None,
        };
        let agg = training.reports[cat].aggregate;
        let _ = writeln!(
            text,
            "{:<26} {:>6.3} {:>6.3}  {}",
            cat,
            agg.mean,
            agg.stddev,
            path.display()
        );
        trained.insert(
            *cat,
            json!({ "model": path, "registered_version": version, "report": training.reports[cat] }),
        );
    }
    for s in &training.skipped {
        let _ = writeln!(
            text,
            "{:<26} skipped: {} positives, {} needed",
            s.category, s.positives, s.needed
        );
    }
    let result =
        json!({ "documents": docs.len(), "trained": trained, "skipped": training.skipped });
    Ok(Outcome {
        result,
        text: text.trim_end().to_string(),
    })
}

fn bucket(b: BucketArg) -> Option<Bucket> {
    match b {
        BucketArg::Day => Some(Bucket::Day),
        BucketArg::Week => Some(Bucket::Week),
        BucketArg::Month => Some(Bucket::Month),
        BucketArg::Total => None,
    }
}

fn quantify_cmd(a: &QuantifyArgs) -> Result<Outcome> {
    let window = Window {
        from: a
            .from
            .as_deref()
            .map(|s| inputs::time("--from", s))
            .transpose()?,
        to: a
            .to
            .as_deref()
            .map(|s| inputs::time("--to", s))
            .transpose()?,
    };
    window.validate().map_err(|e| UsageError(e.to_string()))?;
    let series: Vec<NeedQuantification> = if let Some(dir) = &a.store {
        if !dir.is_dir() {
            bail!("no store at {}", dir.display());
        }
        let th = Thresholds {
            need: a.threshold,
            ..Thresholds::default()
        };
        th.validate().map_err(|e| UsageError(e.to_string()))?;
        let snap = FileStore::open(dir)?.snapshot();
        match bucket(a.bucket) {
            Some(b) => query_timeseries(&snap, &window, &Filters::default(), th, b)?,
            None => query_summary(&snap, &window, &Filters::default(), th, 0)?
                .quantification
                .into_iter()
                .collect(),
        }
    } else {
        let data = a.data.as_ref().expect("clap requires --store or --data");
        let labels_path = a
            .category_labels
            .as_ref()
            .expect("clap requires --category-labels with --data");
        let corpus = inputs::tweets(data, a.format)?;
        let (labels, _) = load_category_labels(labels_path)?;
        let timed: Vec<_> = corpus
            .tweets
            .iter()
            .filter_map(|t| {
                labels
                    .get(&t.id)
                    .map(|c| (t.created_at, c.iter().copied().collect::<Vec<_>>()))
            })
            .collect();
        let items = timed.iter().map(|(at, c)| (*at, c.as_slice()));
        let bounds = window.from.zip(window.to);
        match bucket(a.bucket) {
            Some(b) => quantify(items, bounds, b),
            None => quantify_total(items, bounds).into_iter().collect(),
        }
    };
    Outcome::new(&series, quant_table(&series))
}

fn quant_table(series: &[NeedQuantification]) -> String {
    if series.is_empty() {
        return "no need tweets in the window".into();
    }
    let mut s = format!("{:<12} {:>7}", "start", "tweets");
    for c in NeedCategory::ALL {
        let _ = write!(s, " {:>9}", short(c));
    }
    s.push('\n');
    for q in series {
        let _ = write!(
            s,
            "{:<12} {:>7}",
            q.start.format("%Y-%m-%d"),
            q.total_tweets
        );
        for c in NeedCategory::ALL {
            let _ = write!(s, " {:>5} {:>2.0}%", q.counts[&c], q.shares[&c] * 100.0);
        }
        s.push('\n');
    }
    s.trim_end().to_string()
}

fn short(c: NeedCategory) -> &'static str {
    match c {
        NeedCategory::Price => "price",
        NeedCategory::CarCharacteristics => "car",
        NeedCategory::ChargingInfrastructure => "infra",
        NeedCategory::Range => "range",
        NeedCategory::ChargingTechnology => "tech",
        NeedCategory::EnvironmentHealth => "env",
        NeedCategory::Society => "society",
        NeedCategory::Other => "other",
    }
}

#[derive(Serialize)]
struct Classified {
    id: String,
    text: String,
    need_score: f64,
    is_need: bool,
    categories: Option<CategoryAssignment>,
}

fn classify(a: &ClassifyArgs) -> Result<Outcome> {
    let th = Thresholds {
        need: a.threshold,
        category: a.category_threshold,
    };
    th.validate().map_err(|e| UsageError(e.to_string()))?;
    let (need, cats, versions) = match (&a.model, &a.registry) {
        (Some(m), None) => (load_model(m)?, BTreeMap::new(), None),
        (None, Some(r)) => {
            let loaded = ModelRegistry::open(r)?.load()?;
            (loaded.need, loaded.categories, Some(loaded.versions))
        }
        _ => unreachable!("clap enforces exactly one model source"),
    };
    let texts: Vec<(String, String)> = match &a.data {
        Some(p) => inputs::tweets(p, a.format)?
            .tweets
            .into_iter()
            .map(|t| (t.id, t.text))
            .collect(),
        None => a
            .text
            .iter()
            .enumerate()
            .map(|(i, t)| (i.to_string(), t.clone()))
            .collect(),
    };
    let results: Vec<Classified> = texts
        .into_iter()
        .map(|(id, text)| {
            let need_score = need.score_text(&text);
            let is_need = need_score > th.need;
            let categories = (is_need && !cats.is_empty()).then(|| {
                let scores = cats
                    .iter()
                    .map(|(c, m)| (*c, m.score_text(&text)))
                    .collect();
                CategoryAssignment::from_scores(&id, scores, th.category)
            });
            Classified {
                id,
                text,
                need_score,
                is_need,
                categories,
            }
        })
        .collect();
    let mut text = String::new();
    for r in &results {
        let cats = r
            .categories
            .as_ref()
            .map(|c| {
                c.categories
                    .iter()
                    .map(|c| c.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .unwrap_or_default();
        let _ = writeln!(
            text,
            "{:<10} {:.3} {:<8} {:<30} {}",
            r.id,
            r.need_score,
            if r.is_need { "need" } else { "no_need" },
            cats,
            r.text
        );
    }
    let result = json!({ "threshold": th.need, "versions": versions, "results": results });
    Ok(Outcome {
        result,
        text: text.trim_end().to_string(),
    })
}

fn serve(a: &ServeArgs) -> Result<Outcome> {
    let path = config_path(a.config.as_deref());
    let cfg = ServiceConfig::load(&path)?;
    needminer_service::server::run(&cfg)?;
    Outcome::json(&json!({ "stopped": true, "config": path }))
}

fn report(a: &ReportArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.input)
        .with_context(|| format!("cannot read {}", a.input.display()))?;
    let v: Value =
        serde_json::from_str(&text).with_context(|| format!("{}: not JSON", a.input.display()))?;
    let inner = match v.get("result") {
        Some(r) if v.get("command").is_some() => r.clone(),
        _ => v,
    };
    let report: EvaluationReport = serde_json::from_value(inner)
        .with_context(|| format!("{}: not an evaluation report", a.input.display()))?;
    Outcome::new(&report, report.to_table())
}
