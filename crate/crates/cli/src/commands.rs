use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use screenprio_core::datastore::{
    parse_corpus, parse_qrels, parse_topics, seeded_hash, synthetic_embeddings, Dataset, Qrels,
};
use screenprio_core::dense::RocchioWeights;
use screenprio_core::evaluation::{build_report, BaselineKey};
use screenprio_core::session::{run_simulation, ScreeningRecord, SessionConfig, Strategy};
use screenprio_core::tar::{SeedConfig, SeedMode};
use screenprio_service::AppState;

use crate::manifest::{Manifest, DEFAULT_BIND};
use crate::{CmdResult, Failure, Overrides};

pub const DEFAULT_K: usize = 25;
pub const RECORDS_DIR: &str = "records";
pub const EVAL_DIR: &str = "eval";

/// Writes via a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

/// `<out>/records/<strategy>/<weights>/k<k>[_cut<n>]/<topic>.json`
pub fn record_path(out: &Path, config: &SessionConfig) -> PathBuf {
    let weights = match config.weights {
        Some(w) => format!("w{}_{}_{}", w.alpha(), w.beta(), w.gamma()),
        None => "w-none".to_string(),
    };
    let mut cell = format!("k{}", config.k);
    if let Some(c) = config.max_iterations {
        cell.push_str(&format!("_cut{c}"));
    }
    out.join(RECORDS_DIR)
        .join(config.strategy.as_str())
        .join(weights)
        .join(cell)
        .join(format!("{}.json", file_safe(&config.topic_id)))
}

/// Manifest with command-line overrides applied.
pub struct RunContext {
    pub manifest: Manifest,
    pub seed: u64,
    pub out: PathBuf,
}

fn load(opts: &Overrides) -> CmdResult<RunContext> {
    let manifest = Manifest::load(&opts.manifest).map_err(Failure::user)?;
    Ok(RunContext {
        seed: opts.seed.unwrap_or(manifest.seed),
        out: opts.out.clone().unwrap_or_else(|| manifest.out.clone()),
        manifest,
    })
}

fn load_dataset(m: &Manifest) -> CmdResult<Dataset> {
    Dataset::load(&m.dataset).map_err(Failure::user)
}

/// Loads and validates; blocking problems are a user error.
fn load_valid_dataset(m: &Manifest) -> CmdResult<Dataset> {
    let ds = load_dataset(m)?;
    let report = ds.validate();
    if report.is_blocking() {
        return Err(Failure::User(anyhow!("dataset validation failed:\n{report}")));
    }
    if !report.is_empty() {
        eprint!("{report}");
    }
    Ok(ds)
}

pub fn validate(opts: &Overrides) -> CmdResult {
    let ctx = load(opts)?;
    let ds = load_dataset(&ctx.manifest)?;
    let report = ds.validate();
    print!("{report}");
    if report.is_blocking() {
        return Err(Failure::User(anyhow!("dataset has blocking problems")));
    }
    Ok(())
}

pub fn embed_synthetic(opts: &Overrides, dim: Option<usize>, output: Option<PathBuf>) -> CmdResult {
    let ctx = load(opts)?;
    let m = &ctx.manifest;
    let open = |p: &Path| {
        fs::File::open(p)
            .map(std::io::BufReader::new)
            .with_context(|| format!("cannot open {}", p.display()))
            .map_err(Failure::user)
    };
    let name = |p: &Path| p.display().to_string();
    let docs = parse_corpus(open(&m.dataset.corpus)?, &name(&m.dataset.corpus)).map_err(Failure::user)?;
    let topics = parse_topics(open(&m.dataset.topics)?, &name(&m.dataset.topics)).map_err(Failure::user)?;
    let dim = dim.unwrap_or(m.embed.dim);
    let set = synthetic_embeddings(&docs, &topics, dim, ctx.seed).map_err(Failure::user)?;
    let path = output.unwrap_or_else(|| m.dataset.embeddings.clone());
    set.save(&path).map_err(Failure::internal)?;
    println!("wrote {} vectors (dim {dim}) to {}", set.len(), path.display());
    Ok(())
}

fn selected_topics(opts: &Overrides, m: &Manifest, ds: &Dataset) -> CmdResult<Vec<String>> {
    let ids = match opts.topics.clone().or_else(|| m.run.topics.clone()) {
        Some(ids) => ids,
        None => ds.topics().iter().map(|t| t.topic_id.clone()).collect(),
    };
    for id in &ids {
        ds.topic(id).map_err(Failure::user)?;
    }
    Ok(ids)
}

fn parse_strategy(s: &str) -> CmdResult<Strategy> {
    s.parse().map_err(Failure::user)
}

fn parse_weights(s: &str) -> CmdResult<RocchioWeights> {
    s.parse().with_context(|| format!("weights `{s}`")).map_err(Failure::user)
}

/// Picks the TAR seed for a topic: explicit manifest entry, else a relevant
/// pool document drawn with the run seed.
fn tar_seed(ctx: &RunContext, ds: &Dataset, topic_id: &str) -> CmdResult<SeedConfig> {
    let m = &ctx.manifest;
    match m.tar.seed_mode.unwrap_or(SeedMode::Title) {
        SeedMode::Title => Ok(SeedConfig::title()),
        SeedMode::Pos => {
            if let Some(doc) = m.tar.pos_docs.get(topic_id) {
                return Ok(SeedConfig::pos(doc.clone()));
            }
            let topic = ds.topic(topic_id).map_err(Failure::user)?;
            let mut relevant: Vec<&String> =
                topic.pool.iter().filter(|d| ds.qrels().is_relevant(topic_id, d)).collect();
            relevant.sort();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ seeded_hash(0, topic_id.as_bytes()));
            let doc = relevant.choose(&mut rng).ok_or_else(|| {
                Failure::User(anyhow!("topic `{topic_id}` has no relevant pool document for a pos seed"))
            })?;
            Ok(SeedConfig::pos((*doc).clone()))
        }
    }
}

fn session_config(
    ctx: &RunContext,
    ds: &Dataset,
    topic_id: &str,
    strategy: Strategy,
    weights: Option<RocchioWeights>,
    k: usize,
    cutoff: Option<usize>,
) -> CmdResult<SessionConfig> {
    let m = &ctx.manifest;
    let seed = match strategy {
        Strategy::TarLogistic => Some(tar_seed(ctx, ds, topic_id)?),
        _ => None,
    };
    let config = SessionConfig {
        topic_id: topic_id.to_string(),
        strategy,
        k,
        weights,
        feedback_scope: m.run.feedback_scope,
        seed,
        max_iterations: cutoff,
        normalize: m.run.normalize,
        bm25: m.bm25,
        rm3: m.rm3,
        logistic: m.logistic,
    };
    config.validate().map_err(Failure::user)?;
    Ok(config)
}

fn simulate_and_write(ctx: &RunContext, ds: &Dataset, config: SessionConfig) -> CmdResult<PathBuf> {
    let path = record_path(&ctx.out, &config);
    let topic = config.topic_id.clone();
    let mut record = run_simulation(config, ds, ds.qrels())
        .with_context(|| format!("topic `{topic}`"))
        .map_err(Failure::user)?;
    record.collection = ctx.manifest.collection.clone();
    write_atomic(&path, record.to_json().as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::internal)?;
    Ok(path)
}

/// Simulates the selected topics with one configuration. Returns the
/// written record paths in topic order.
pub fn run(opts: &Overrides) -> CmdResult<Vec<PathBuf>> {
    let ctx = load(opts)?;
    let m = &ctx.manifest;
    let ds = load_valid_dataset(m)?;
    let strategy = match opts.strategy.as_deref() {
        Some(s) => parse_strategy(s)?,
        None => m.run.strategy.unwrap_or(Strategy::DenseRocchio),
    };
    let weights = match opts.weights.as_deref().or(m.run.weights.as_deref()) {
        Some(w) => Some(parse_weights(w)?),
        None if strategy == Strategy::DenseRocchio => Some(RocchioWeights::default()),
        None => None,
    };
    let k = opts.k.or(m.run.k).unwrap_or(DEFAULT_K);
    let cutoff = opts.cutoff.or(m.run.cutoff);
    let topics = selected_topics(opts, m, &ds)?;
    let configs = topics
        .iter()
        .map(|t| session_config(&ctx, &ds, t, strategy, weights, k, cutoff))
        .collect::<CmdResult<Vec<_>>>()?;
    let paths = configs
        .into_par_iter()
        .map(|c| simulate_and_write(&ctx, &ds, c))
        .collect::<CmdResult<Vec<_>>>()?;
    println!("wrote {} record(s) under {}", paths.len(), ctx.out.join(RECORDS_DIR).display());
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub cells: usize,
    pub written: usize,
    pub skipped: usize,
}

/// Simulates every strategy x weights x k x topic cell. Cells whose record
/// file exists are skipped, so an interrupted sweep can be resumed.
pub fn sweep(opts: &Overrides) -> CmdResult<SweepSummary> {
    let ctx = load(opts)?;
    let m = &ctx.manifest;
    let ds = load_valid_dataset(m)?;
    let strategies = match opts.strategy.as_deref() {
        Some(s) => vec![parse_strategy(s)?],
        None => m.sweep.strategies.clone(),
    };
    let weights = match opts.weights.as_deref() {
        Some(w) => vec![parse_weights(w)?],
        None => m.sweep_weights(),
    };
    let ks = match opts.k {
        Some(k) => vec![k],
        None => m.sweep.k.clone(),
    };
    let cutoff = opts.cutoff.or(m.run.cutoff);
    let topics = selected_topics(opts, m, &ds)?;

    let mut configs = Vec::new();
    for &strategy in &strategies {
        for &w in &weights {
            for &k in &ks {
                for t in &topics {
                    configs.push(session_config(&ctx, &ds, t, strategy, Some(w), k, cutoff)?);
                }
            }
        }
    }
    let cells = configs.len();
    let pending: Vec<SessionConfig> = configs
        .into_iter()
        .filter(|c| !record_path(&ctx.out, c).exists())
        .collect();
    let written = pending.len();
    pending
        .into_par_iter()
        .map(|c| simulate_and_write(&ctx, &ds, c).map(|_| ()))
        .collect::<CmdResult<Vec<()>>>()?;
    let summary = SweepSummary {
        cells,
        written,
        skipped: cells - written,
    };
    println!(
        "sweep: {} cells, {} written, {} already present",
        summary.cells, summary.written, summary.skipped
    );
    Ok(summary)
}

fn collect_records(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_records(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

pub fn load_records(dir: &Path) -> CmdResult<Vec<ScreeningRecord>> {
    let mut paths = Vec::new();
    collect_records(dir, &mut paths)
        .with_context(|| format!("cannot read record directory {}", dir.display()))
        .map_err(Failure::user)?;
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::User(anyhow!("no record files under {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))
                .map_err(Failure::user)?;
            ScreeningRecord::from_json(&text)
                .with_context(|| p.display().to_string())
                .map_err(Failure::user)
        })
        .collect()
}

/// Writes `report.csv`, `report.txt`, `grid.csv`, `grid.txt` and
/// `topics.csv` under `<out>/eval` and prints the text table.
pub fn eval(opts: &Overrides, records: Option<PathBuf>, qrels_path: Option<PathBuf>) -> CmdResult {
    let ctx = load(opts)?;
    let m = &ctx.manifest;
    let dir = records.unwrap_or_else(|| ctx.out.join(RECORDS_DIR));
    let recs = load_records(&dir)?;
    let qpath = qrels_path.unwrap_or_else(|| m.dataset.qrels.clone());
    let file = fs::File::open(&qpath)
        .with_context(|| format!("cannot open {}", qpath.display()))
        .map_err(Failure::user)?;
    let qrels: Qrels =
        parse_qrels(std::io::BufReader::new(file), &qpath.display().to_string()).map_err(Failure::user)?;
    let collections: BTreeMap<String, Qrels> = recs
        .iter()
        .map(|r| (r.collection.clone(), qrels.clone()))
        .collect();
    let baseline: Option<BaselineKey> = opts
        .baseline
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(Failure::user)?;
    let report = build_report(&recs, &collections, baseline.as_ref()).map_err(Failure::user)?;

    let eval_dir = ctx.out.join(EVAL_DIR);
    let outputs = [
        ("report.csv", report.to_csv()),
        ("report.txt", report.to_text()),
        ("grid.csv", report.grid_csv()),
        ("grid.txt", report.grid_text()),
        ("topics.csv", report.topics_csv()),
    ];
    for (name, text) in &outputs {
        let path = eval_dir.join(name);
        write_atomic(&path, text.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::internal)?;
    }
    print!("{}", report.to_text());
    println!("Last Rel is the mean over topics. Outputs in {}", eval_dir.display());
    Ok(())
}

pub fn serve(opts: &Overrides) -> CmdResult {
    let ctx = load(opts)?;
    let m = &ctx.manifest;
    let ds = Arc::new(load_valid_dataset(m)?);
    let journal = m.serve.journal.clone().unwrap_or_else(|| ctx.out.join("journal"));
    let bind = opts
        .bind
        .clone()
        .or_else(|| m.serve.bind.clone())
        .unwrap_or_else(|| DEFAULT_BIND.to_string());

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::internal)?;
    runtime.block_on(async move {
        let (state, quarantined) = AppState::with_journal(ds, &journal)
            .with_context(|| format!("journal directory {}", journal.display()))
            .map_err(Failure::internal)?;
        for q in &quarantined {
            eprintln!("quarantined {}: {}", q.file.display(), q.diagnostic);
        }
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .with_context(|| format!("cannot bind {bind}"))
            .map_err(Failure::user)?;
        let addr = listener.local_addr().map_err(Failure::internal)?;
        tracing::info!(%addr, sessions = state.session_ids().len(), "listening");
        screenprio_service::serve(listener, state, shutdown_signal())
            .await
            .map_err(Failure::internal)?;
        tracing::info!("shut down");
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
