//! Subcommand bodies. Each reads its inputs from the configured paths,
//! writes its artifacts into the output directory and returns a summary.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sharecast::analytics;
use sharecast::config::{Precision, RunConfig};
use sharecast::eval::{
    self, ablation_table, evaluate, lr_baseline, parse_variant, sample_all, scores, split_queries, AblationRow,
    EpochLog, MetricResult, Metrics, Split,
};
use sharecast::events::{
    build_dynamic_network, load_records, materialize_all_queries, read_queries, write_queries, DynamicNetwork,
    EventLog, PurchaseIndex, Query, RecordKind, Records, BROWSE_FILE, CATALOG_FILE, DIFFUSION_FILE, PURCHASE_FILE,
};
use sharecast::model::{InfNet, ModelConfig, ModelDims};
use sharecast::sampler::Sampler;
use sharecast::synth::generate;
use sharecast::{seeds, Error, Result};
use sharecast_autodiff::{Checkpoint, ParamStore, Scalar};

pub const LOCK_FILE: &str = ".lock";
pub const NETWORK_FILE: &str = "network.snap";
pub const QUERIES_FILE: &str = "queries.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const REPORT_FILE: &str = "report.txt";
pub const ANALYTICS_DIR: &str = "analytics";
pub const TRAIN_FILE: &str = "train.json";
pub const EVAL_FILE: &str = "eval.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ABLATION_FILE: &str = "ablation.txt";
pub const ABLATION_JSON: &str = "ablation.json";
pub const BASELINE_FILE: &str = "baseline.txt";
pub const BASELINE_JSON: &str = "baseline.json";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn require(path: &Path, what: &str, producer: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("missing {what} {}; run `{producer}` first", path.display())))
    }
}

/// Held while a subcommand writes into the output directory.
#[derive(Debug)]
pub struct OutputLock(PathBuf);

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Invalid(format!(
                "{} is locked by another run; delete {} if none is active",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(io_err(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn out(cfg: &RunConfig, file: &str) -> Result<PathBuf> {
    Ok(cfg.out_dir()?.join(file))
}

pub fn load_logs(cfg: &RunConfig) -> Result<EventLog> {
    let dir = cfg.logs_dir()?;
    let catalog_path = cfg.paths.catalog.clone().unwrap_or_else(|| dir.join(CATALOG_FILE));
    let read = |path: &Path, kind| {
        require(path, "event log", "gen")?;
        load_records(path, kind)
    };
    let (Records::Catalog(catalog), Records::Diffusion(diffusions), Records::Purchase(purchases), Records::Browse(browses)) = (
        read(&catalog_path, RecordKind::Catalog)?,
        read(&dir.join(DIFFUSION_FILE), RecordKind::Diffusion)?,
        read(&dir.join(PURCHASE_FILE), RecordKind::Purchase)?,
        read(&dir.join(BROWSE_FILE), RecordKind::Browse)?,
    ) else {
        unreachable!("load_records returns the requested kind")
    };
    EventLog::from_records(&catalog, &diffusions, &purchases, &browses)
}

fn load_network(cfg: &RunConfig, log: &EventLog) -> Result<DynamicNetwork> {
    let path = out(cfg, NETWORK_FILE)?;
    require(&path, "network snapshot", "build")?;
    let network = DynamicNetwork::read(&path)?;
    if network.users() != log.users.as_slice() || network.items() != log.items.as_slice() {
        return Err(Error::Invalid(format!("{} was built from different logs; run `build` again", path.display())));
    }
    if *network.grid() != cfg.grid()? {
        return Err(Error::Invalid(format!("{} uses a different time grid than the config; run `build` again", path.display())));
    }
    Ok(network)
}

/// Logs, snapshot, queries and split shared by the training stages.
pub struct Data {
    pub log: EventLog,
    pub network: DynamicNetwork,
    pub purchases: PurchaseIndex,
    pub queries: Vec<Query>,
    pub split: Split,
}

impl Data {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let log = load_logs(cfg)?;
        let network = load_network(cfg, &log)?;
        let path = out(cfg, QUERIES_FILE)?;
        require(&path, "query list", "queries")?;
        let queries = read_queries(&path, &network)?;
        let purchases = PurchaseIndex::new(log.n_users(), &log.purchases);
        let split = split_queries(&queries, cfg.seed()?)?;
        Ok(Data { log, network, purchases, queries, split })
    }

    pub fn sampler(&self, cfg: &RunConfig) -> Result<Sampler<'_>> {
        Sampler::new(&self.network, &self.purchases, &self.log.item_price, &cfg.features)
    }

    pub fn dims(&self, cfg: &RunConfig) -> ModelDims {
        ModelDims::for_bins(cfg.features.bins, self.network.n_steps())
    }
}

pub fn gen(cfg: &RunConfig) -> Result<String> {
    let logs = generate(&cfg.synth, cfg.seed()?)?;
    let dir = cfg.logs_dir()?;
    logs.write_dir(&dir)?;
    Ok(format!(
        "gen: {} items, {} shares, {} purchases, {} browses -> {}",
        logs.catalog.len(),
        logs.diffusions.len(),
        logs.purchases.len(),
        logs.browses.len(),
        dir.display()
    ))
}

pub fn build(cfg: &RunConfig) -> Result<String> {
    let log = load_logs(cfg)?;
    let network = build_dynamic_network(&log, cfg.grid()?);
    let path = out(cfg, NETWORK_FILE)?;
    network.write(&path)?;
    let edges: usize = (0..network.n_steps()).map(|t| network.step(t).edges().len()).sum();
    Ok(format!(
        "build: {} steps, {} users, {} edges, {} share events, {} outside the grid -> {}",
        network.n_steps(),
        network.n_users(),
        edges,
        network.event_count(),
        network.dropped(),
        path.display()
    ))
}

pub fn queries(cfg: &RunConfig) -> Result<String> {
    let log = load_logs(cfg)?;
    let network = load_network(cfg, &log)?;
    let purchases = PurchaseIndex::new(log.n_users(), &log.purchases);
    let queries = materialize_all_queries(&network, &purchases)?;
    let path = out(cfg, QUERIES_FILE)?;
    write_queries(&path, &queries, &network)?;
    Ok(format!(
        "queries: {} queries, {} positive, {} cold -> {}",
        queries.len(),
        queries.iter().filter(|q| q.label).count(),
        queries.iter().filter(|q| q.cold).count(),
        path.display()
    ))
}

pub fn analyze(cfg: &RunConfig) -> Result<String> {
    let log = load_logs(cfg)?;
    let network = build_dynamic_network(&log, cfg.grid()?);
    let report = analytics::analyze(&log, &network, cfg.horizon()?)?;
    let path = out(cfg, REPORT_FILE)?;
    write(&path, &report.to_text())?;
    let dir = out(cfg, ANALYTICS_DIR)?;
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    report.write_csv(&dir)?;
    let (t, b) = (report.taocode_categories.total(), report.browse_categories.total());
    let lift = report.lift.as_ref().map_or_else(|e| e.clone(), |f| format!("lift rho {:.3}", f.rho));
    Ok(format!(
        "analyze: share CI {:.2} over {} records, browse CI {:.2} over {}, {lift} -> {}",
        t.ci().unwrap_or(f64::NAN),
        t.total,
        b.ci().unwrap_or(f64::NAN),
        b.total,
        path.display()
    ))
}

fn metrics_line(w: &mut String, name: &str, m: Option<&Metrics>) {
    let _ = match m {
        Some(m) => writeln!(w, "{name:<6} {:>7} {:>9} {:>8.4} {:>8.4}", m.n, m.positives, m.auc_roc, m.auc_pr),
        None => writeln!(w, "{name:<6} {:>7} {:>9} {:>8} {:>8}", "-", "-", "absent", "absent"),
    };
}

pub fn metrics_text(title: &str, r: &MetricResult) -> String {
    let mut w = format!("# {title}\n{:<6} {:>7} {:>9} {:>8} {:>8}\n", "subset", "n", "positives", "auc_roc", "auc_pr");
    metrics_line(&mut w, "all", Some(&r.all));
    metrics_line(&mut w, "cold", r.cold.as_ref());
    metrics_line(&mut w, "warm", r.warm.as_ref());
    w
}

#[derive(Serialize)]
struct SplitSizes {
    total: usize,
    train: usize,
    validation: usize,
    test: usize,
    scheme: String,
}

impl SplitSizes {
    fn of(data: &Data) -> Self {
        let s = &data.split;
        SplitSizes {
            total: data.queries.len(),
            train: s.train.len(),
            validation: s.validation.len(),
            test: s.test.len(),
            scheme: s.scheme.clone(),
        }
    }
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    seed: u64,
    precision: Precision,
    model: &'a ModelConfig,
    train: &'a eval::TrainConfig,
    queries: SplitSizes,
    parameters: usize,
    best_epoch: usize,
    history: &'a [EpochLog],
    test: &'a MetricResult,
}

fn train_as<F: Scalar>(cfg: &RunConfig, data: &Data) -> Result<String> {
    let seed = cfg.seed()?;
    let sampler = data.sampler(cfg)?;
    let subgraphs = sample_all(&sampler, &data.queries)?;
    let model = InfNet::new(cfg.model, data.dims(cfg))?;
    let labels: Vec<bool> = data.queries.iter().map(|q| q.label).collect();
    let outcome = eval::train::<F>(&model, &data.queries, &subgraphs, &labels, &data.split, &cfg.train, seed)?;
    let ckpt = out(cfg, CHECKPOINT_FILE)?;
    outcome.store.to_checkpoint().write(&ckpt)?;
    write_json(
        &out(cfg, TRAIN_FILE)?,
        &TrainRecord {
            seed,
            precision: cfg.precision,
            model: &cfg.model,
            train: &cfg.train,
            queries: SplitSizes::of(data),
            parameters: outcome.store.scalar_count(),
            best_epoch: outcome.best_epoch,
            history: &outcome.history,
            test: &outcome.test,
        },
    )?;
    Ok(format!(
        "train: best epoch {} of {}, test auc-roc {:.4} auc-pr {:.4} -> {}",
        outcome.best_epoch,
        outcome.history.len(),
        outcome.test.all.auc_roc,
        outcome.test.all.auc_pr,
        ckpt.display()
    ))
}

pub fn train(cfg: &RunConfig) -> Result<String> {
    let data = Data::load(cfg)?;
    match cfg.precision {
        Precision::F32 => train_as::<f32>(cfg, &data),
        Precision::F64 => train_as::<f64>(cfg, &data),
    }
}

/// Machine-readable outcome of `eval`.
#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'static str,
    seed: u64,
    precision: Precision,
    checkpoint: &'static str,
    model: &'a ModelConfig,
    queries: SplitSizes,
    test: &'a MetricResult,
}

fn eval_as<F: Scalar>(cfg: &RunConfig, data: &Data) -> Result<String> {
    let seed = cfg.seed()?;
    let path = out(cfg, CHECKPOINT_FILE)?;
    require(&path, "checkpoint", "train")?;
    let model = InfNet::new(cfg.model, data.dims(cfg))?;
    let mut store: ParamStore<F> = model.init_params(&mut seeds::rng_for(seed, seeds::INIT))?;
    store.load_checkpoint(&Checkpoint::read(&path)?)?;
    let sampler = data.sampler(cfg)?;
    let test: Vec<Query> = data.split.test.iter().map(|&i| data.queries[i]).collect();
    let subgraphs = sample_all(&sampler, &test)?;
    let idx: Vec<usize> = (0..test.len()).collect();
    let result = evaluate(&scores(&model, &store, &subgraphs, &idx)?, &test)?;
    write(&out(cfg, EVAL_FILE)?, &metrics_text("test queries", &result))?;
    write_json(
        &out(cfg, SUMMARY_FILE)?,
        &RunSummary {
            command: "eval",
            seed,
            precision: cfg.precision,
            checkpoint: CHECKPOINT_FILE,
            model: &cfg.model,
            queries: SplitSizes::of(data),
            test: &result,
        },
    )?;
    Ok(format!(
        "eval: {} test queries, auc-roc {:.4} auc-pr {:.4} -> {}",
        result.all.n,
        result.all.auc_roc,
        result.all.auc_pr,
        out(cfg, EVAL_FILE)?.display()
    ))
}

pub fn eval(cfg: &RunConfig) -> Result<String> {
    let data = Data::load(cfg)?;
    match cfg.precision {
        Precision::F32 => eval_as::<f32>(cfg, &data),
        Precision::F64 => eval_as::<f64>(cfg, &data),
    }
}

pub fn ablation_rows(cfg: &RunConfig, data: &Data) -> Result<Vec<AblationRow>> {
    let variants = cfg.ablation.variants.iter().map(|v| parse_variant(v, &cfg.model)).collect::<Result<Vec<_>>>()?;
    let sampler = data.sampler(cfg)?;
    let subgraphs = sample_all(&sampler, &data.queries)?;
    let dims = data.dims(cfg);
    let seed = cfg.seed()?;
    match cfg.precision {
        Precision::F32 => eval::ablate::<f32>(&cfg.model, &variants, dims, &data.queries, &subgraphs, &data.split, &cfg.train, seed),
        Precision::F64 => eval::ablate::<f64>(&cfg.model, &variants, dims, &data.queries, &subgraphs, &data.split, &cfg.train, seed),
    }
}

pub fn ablate(cfg: &RunConfig) -> Result<String> {
    let data = Data::load(cfg)?;
    let rows = ablation_rows(cfg, &data)?;
    let path = out(cfg, ABLATION_FILE)?;
    write(&path, &ablation_table(&rows))?;
    write_json(&out(cfg, ABLATION_JSON)?, &rows)?;
    let best = rows.iter().max_by(|a, b| a.test.all.auc_pr.total_cmp(&b.test.all.auc_pr)).expect("base row");
    Ok(format!("ablate: {} rows, best auc-pr {:.4} ({}) -> {}", rows.len(), best.test.all.auc_pr, best.name, path.display()))
}

#[derive(Serialize)]
struct BaselineRecord<'a> {
    seed: u64,
    queries: SplitSizes,
    weights: &'a [f64],
    bias: f64,
    test: &'a MetricResult,
}

pub fn baseline(cfg: &RunConfig) -> Result<String> {
    let data = Data::load(cfg)?;
    let bins = cfg.features.price_bins(&data.log.item_price)?;
    let (model, result) =
        lr_baseline(&data.queries, &data.split, &data.network, &data.purchases, &data.log.item_price, bins, &cfg.baseline)?;
    let path = out(cfg, BASELINE_FILE)?;
    write(&path, &metrics_text("logistic regression, test queries", &result))?;
    write_json(
        &out(cfg, BASELINE_JSON)?,
        &BaselineRecord { seed: cfg.seed()?, queries: SplitSizes::of(&data), weights: &model.weights, bias: model.bias, test: &result },
    )?;
    Ok(format!(
        "baseline: {} test queries, auc-roc {:.4} auc-pr {:.4} -> {}",
        result.all.n,
        result.all.auc_roc,
        result.all.auc_pr,
        path.display()
    ))
}
