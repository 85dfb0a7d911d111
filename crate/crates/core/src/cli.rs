//! Command-line driver. Every stage reads and writes EMBX containers or JSON
//! files so stages can be chained from scripts.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
//! errors. Each command also writes a run manifest holding the fully
//! resolved arguments next to its main output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cluster::{
    AlgorithmTag, BirchConfig, DbscanConfig, HdbscanConfig, KMeansConfig, Partition,
};
use crate::consolidation::{
    adaptive_k, centroid_agglomerate, constraint_consolidate, penalty, prototype_seed, stability_merge,
    BootstrapConfig, ConsolidationReport, ConstraintSet, SeedConfig,
};
use crate::embx::{read_dataset, write_dataset, Dataset};
use crate::error::{Error, Result};
use crate::fusion::{coral_align, fit_group_stats, fuse, FusionConfig, FusionMode, GroupStats};
use crate::metrics::{evaluate, EvalReport};
use crate::multipage::{aggregate_dataset, PageGraphConfig};
use crate::projection::{cls_pool, hybrid_pool, mean_pool, pca_reduce, HybridConfig};
use crate::synth::{expand_tokens, generate, BlobSpec, Shift};
use crate::tuning::{default_grid, grid_search, oracle_partition, AlgoConfig};
use crate::vector::{DocVector, Strategy};

/// Group key given to items without a language tag.
pub const UNTAGGED: &str = "und";

#[derive(Debug, Parser, Serialize)]
#[command(name = "docclust", version, about = "Cluster document embeddings stored as EMBX containers")]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DOCCLUST_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate labelled Gaussian blobs.
    Synth(SynthArgs),
    /// Pool token matrices into one vector per item.
    Project(ProjectArgs),
    /// Cluster single-row items and score the result.
    Cluster(ClusterArgs),
    /// Grid-search density parameters by silhouette.
    Tune(TuneArgs),
    /// Score a saved partition.
    Evaluate(EvaluateArgs),
    /// Collapse page-level items into one vector per document.
    AggregatePages(AggregateArgs),
    /// Refine a saved partition.
    Consolidate(ConsolidateArgs),
    /// Fuse a text dataset and a vision dataset item by item.
    Fuse(FuseArgs),
    /// Align per-language groups onto reference statistics.
    Align(AlignArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 50)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 20.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_frac: f64,
    /// Apply a rank-3 covariate shift of this magnitude.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Expand every item into a token matrix with this many rows.
    #[arg(long)]
    pub tokens: Option<usize>,
    /// Text rows per token matrix (with --tokens).
    #[arg(long, default_value_t = 1)]
    pub text_rows: usize,
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    Mean,
    Hybrid,
    Cls,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Pooling::Mean)]
    pub strategy: Pooling,
    /// Max-pool window for hybrid pooling (default: largest divisor of D up to 8).
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Reduce the pooled vectors to this many principal components.
    #[arg(long)]
    pub pca_dim: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Kmeans,
    Dbscan,
    Hdbscan,
    HdbscanKnn,
    Birch,
}

impl Algorithm {
    fn tag(self) -> AlgorithmTag {
        match self {
            Algorithm::Kmeans => AlgorithmTag::Kmeans,
            Algorithm::Dbscan => AlgorithmTag::Dbscan,
            Algorithm::Hdbscan => AlgorithmTag::Hdbscan,
            Algorithm::HdbscanKnn => AlgorithmTag::HdbscanKnn,
            Algorithm::Birch => AlgorithmTag::Birch,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlgoArgs {
    #[arg(long = "alg", value_enum)]
    pub algorithm: Algorithm,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub min_pts: usize,
    #[arg(long, default_value_t = 5)]
    pub min_cluster_size: usize,
    #[arg(long, default_value_t = 5)]
    pub min_samples: usize,
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub branching: usize,
    #[arg(long)]
    pub global_k: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
}

impl AlgoArgs {
    fn config(&self, seed: u64) -> Result<AlgoConfig> {
        let need = |name: &str| Error::Config(format!("--{name} is required for {:?}", self.algorithm));
        let hdb = HdbscanConfig {
            knn_k: self.knn_k,
            ..HdbscanConfig::new(self.min_cluster_size, self.min_samples)
        };
        Ok(match self.algorithm {
            Algorithm::Kmeans => AlgoConfig::Kmeans(KMeansConfig {
                max_iter: self.max_iter,
                ..KMeansConfig::new(self.k.ok_or_else(|| need("k"))?).with_seed(seed)
            }),
            Algorithm::Dbscan => AlgoConfig::Dbscan(DbscanConfig {
                eps: self.eps.ok_or_else(|| need("eps"))?,
                min_pts: self.min_pts,
            }),
            Algorithm::Hdbscan => AlgoConfig::Hdbscan(hdb),
            Algorithm::HdbscanKnn => AlgoConfig::HdbscanKnn(hdb),
            Algorithm::Birch => AlgoConfig::Birch(BirchConfig {
                branching: self.branching,
                global_k: self.global_k,
                seed,
                ..BirchConfig::new(self.threshold.ok_or_else(|| need("threshold"))?)
            }),
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Pick parameters by silhouette over the default grid instead of flags.
    #[arg(long)]
    pub tuned: bool,
    /// Ground-truth cluster count for k-means and BIRCH.
    #[arg(long)]
    pub oracle_k: Option<usize>,
    /// Partition output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Evaluation report output (JSON); defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Append a summary row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Model name for the CSV row.
    #[arg(long, default_value = "unnamed")]
    pub model: String,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "alg", value_enum)]
    pub algorithm: Algorithm,
    /// Tuning result output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Trial log output (JSON lines); defaults to `<out>.trials.jsonl`.
    #[arg(long)]
    pub trials: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "unnamed")]
    pub model: String,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_seq: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_sim: f64,
    #[arg(long, default_value_t = 1)]
    pub sem_k: usize,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub temperature: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Constraints,
    Prototype,
    Agglomerate,
    Stability,
    AdaptiveK,
}

#[derive(Debug, Args, Serialize)]
pub struct ConsolidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Constraint set (JSON) for `constraints` and `prototype`.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub inertia: f64,
    #[arg(long)]
    pub mean_update: bool,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.8)]
    pub subsample: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Base clustering for `stability` and `adaptive-k`.
    #[arg(long = "alg", value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub min_pts: usize,
    #[arg(long, default_value_t = 5)]
    pub min_cluster_size: usize,
    #[arg(long, default_value_t = 5)]
    pub min_samples: usize,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Consolidated partition output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Consolidation report; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl ConsolidateArgs {
    fn base_config(&self, seed: u64) -> Result<AlgoConfig> {
        let algorithm = self
            .algorithm
            .ok_or_else(|| Error::Config(format!("--alg is required for {:?}", self.method)))?;
        AlgoArgs {
            algorithm,
            k: self.k,
            eps: self.eps,
            min_pts: self.min_pts,
            min_cluster_size: self.min_cluster_size,
            min_samples: self.min_samples,
            knn_k: 5,
            threshold: self.threshold,
            branching: 50,
            global_k: None,
            max_iter: 300,
        }
        .config(seed)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FuseArgs {
    /// Text-view dataset; its OCR confidences set the weights.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub vision: PathBuf,
    #[arg(long, value_enum, default_value_t = FuseMode::Convex)]
    pub mode: FuseMode,
    #[arg(long, default_value_t = 0.0)]
    pub weight_floor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FuseMode {
    Convex,
    Concat,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Language group whose statistics every other group is mapped onto.
    #[arg(long, conflicts_with = "stats")]
    pub reference: Option<String>,
    /// Reference statistics (JSON) instead of an in-dataset group.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Ridge added to both covariances (default: 1e-3 · trace / d of each source group).
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the fitted per-group statistics here.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    workers: usize,
    #[serde(flatten)]
    cli: &'a Cli,
    resolved: Value,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_partition(path: &Path, n: usize) -> Result<Partition> {
    let raw: Partition = read_json(path)?;
    let p = Partition::try_new(raw.labels().to_vec(), raw.n_clusters(), raw.algorithm())?;
    if p.len() != n {
        return Err(Error::LabelCount {
            labels: p.len(),
            items: n,
        });
    }
    Ok(p)
}

fn vectors(ds: &Dataset) -> Result<Vec<DocVector>> {
    ds.vectors()
}

fn append_csv(path: &Path, model: &str, algorithm: AlgorithmTag, r: &EvalReport) -> Result<()> {
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let algo = serde_json::to_value(algorithm)?;
    let algo = algo.as_str().unwrap_or_default();
    let mut line = String::new();
    if fresh {
        line.push_str("model,algorithm,");
        line.push_str(EvalReport::CSV_HEADER);
        line.push('\n');
    }
    line.push_str(&format!("{model},{algo},{}\n", r.csv_row()));
    f.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))
}

fn run_synth(a: &SynthArgs, seed: u64) -> Result<(PathBuf, Value)> {
    let spec = BlobSpec {
        n_clusters: a.clusters,
        points_per_cluster: a.per_cluster,
        dim: a.dim,
        separation: a.separation,
        noise_frac: a.noise_frac,
        shift: a.shift.map_or(Shift::None, |magnitude| Shift::Covariate { magnitude }),
        seed,
    };
    let mut ds = generate(&spec)?;
    if let Some(rows) = a.tokens {
        ds = expand_tokens(&ds, rows, a.text_rows, a.jitter, seed)?;
    }
    write_dataset(&ds, &a.out)?;
    Ok((a.out.join("run.json"), json!({ "blobs": spec })))
}

fn run_project(a: &ProjectArgs) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let hybrid = HybridConfig {
        kernel: a.kernel.unwrap_or(HybridConfig::default_for(ds.dim).kernel),
    };
    let mut pooled: Vec<DocVector> = ds
        .items
        .iter()
        .map(|te| match a.strategy {
            Pooling::Mean => Ok(mean_pool(te)),
            Pooling::Cls => Ok(cls_pool(te)),
            Pooling::Hybrid => hybrid_pool(te, &hybrid),
        })
        .collect::<Result<_>>()?;
    if let Some(d) = a.pca_dim {
        pooled = pca_reduce(&pooled, d)?;
    }
    let items = ds.items.iter().zip(&pooled).map(|(te, v)| te.with_vector(v)).collect();
    let dim = pooled.first().map_or(ds.dim, DocVector::dim);
    write_dataset(&Dataset::new(items, ds.labels.clone(), dim)?, &a.out)?;
    let kernel = (a.strategy == Pooling::Hybrid).then_some(hybrid.kernel);
    Ok((a.out.join("run.json"), json!({ "kernel": kernel, "output_dim": dim })))
}

fn run_cluster(a: &ClusterArgs, seed: u64) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let data = vectors(&ds)?;
    let (part, config) = match (a.algo.algorithm, a.oracle_k) {
        (Algorithm::Kmeans | Algorithm::Birch, Some(k)) => {
            (oracle_partition(&data, a.algo.algorithm.tag(), k, None, seed)?, Value::Null)
        }
        _ if a.tuned => {
            let spec = default_grid(a.algo.algorithm.tag(), &data, seed)?;
            let best = grid_search(&data, &spec)?.best_config;
            (best.run(&data)?, serde_json::to_value(best)?)
        }
        _ => {
            let cfg = a.algo.config(seed)?;
            (cfg.run(&data)?, serde_json::to_value(cfg)?)
        }
    };
    let report = evaluate(&data, &part, ds.labels.as_deref())?;
    write_json(&a.out, &part)?;
    write_json(&a.report.clone().unwrap_or_else(|| sibling(&a.out, ".report.json")), &report)?;
    if let Some(csv) = &a.csv {
        append_csv(csv, &a.model, part.algorithm(), &report)?;
    }
    Ok((sibling(&a.out, ".run.json"), json!({ "config": config })))
}

fn run_tune(a: &TuneArgs, seed: u64) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let data = vectors(&ds)?;
    let spec = default_grid(a.algorithm.tag(), &data, seed)?;
    let result = grid_search(&data, &spec)?;
    write_json(&a.out, &result)?;
    let trials = a.trials.clone().unwrap_or_else(|| sibling(&a.out, ".trials.jsonl"));
    let mut buf = Vec::new();
    result.write_trials(&mut buf)?;
    fs::write(&trials, buf).map_err(|e| Error::io(&trials, e))?;
    Ok((sibling(&a.out, ".run.json"), json!({ "grid": spec })))
}

fn run_evaluate(a: &EvaluateArgs) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let data = vectors(&ds)?;
    let part = read_partition(&a.partition, data.len())?;
    let report = evaluate(&data, &part, ds.labels.as_deref())?;
    write_json(&a.out, &report)?;
    if let Some(csv) = &a.csv {
        append_csv(csv, &a.model, part.algorithm(), &report)?;
    }
    Ok((sibling(&a.out, ".run.json"), Value::Null))
}

fn run_aggregate(a: &AggregateArgs) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let cfg = PageGraphConfig {
        lambda_seq: a.lambda_seq,
        lambda_sim: a.lambda_sim,
        sem_k: a.sem_k,
        smoothing_steps: a.steps,
        temperature: a.temperature,
    };
    write_dataset(&aggregate_dataset(&ds, &cfg)?, &a.out)?;
    Ok((a.out.join("run.json"), Value::Null))
}

fn run_consolidate(a: &ConsolidateArgs, seed: u64) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let data = vectors(&ds)?;
    let part = read_partition(&a.partition, data.len())?;
    let cons: Option<ConstraintSet> = a.constraints.as_deref().map(read_json).transpose()?;
    let mut report = ConsolidationReport::default();
    let mut base = Value::Null;
    let out = match a.method {
        Method::Constraints => {
            let cons = cons.ok_or_else(|| Error::Config("--constraints is required".into()))?;
            let (p, map) = constraint_consolidate(&part, &cons)?;
            report.penalty_before = Some(penalty(&part, &cons));
            report.penalty_after = Some(penalty(&p, &cons));
            report.merge_map = Some(map);
            p
        }
        Method::Prototype => {
            let budget = a.budget.ok_or_else(|| Error::Config("--budget is required".into()))?;
            let cfg = SeedConfig {
                budget,
                inertia: a.inertia,
                mean_update: a.mean_update,
            };
            let p = prototype_seed(&data, &part, &cfg, cons.as_ref())?;
            if let Some(c) = &cons {
                report.penalty_before = Some(penalty(&part, c));
                report.penalty_after = Some(penalty(&p, c));
            }
            p
        }
        Method::Agglomerate => {
            let agg = centroid_agglomerate(&data, &part, seed)?;
            report.bic = Some(agg.bic);
            report.merge_map = Some(agg.merge_map);
            agg.partition
        }
        Method::Stability => {
            let boot = BootstrapConfig::new(a.runs, a.subsample, seed);
            let cfg = a.base_config(seed)?;
            base = serde_json::to_value(cfg)?;
            let r = stability_merge(&data, &cfg, &boot, a.tau)?;
            r.partition
        }
        Method::AdaptiveK => {
            let boot = BootstrapConfig::new(a.runs, a.subsample, seed);
            let cfg = a.base_config(seed)?;
            base = serde_json::to_value(cfg)?;
            let r = adaptive_k(&data, &cfg, &boot)?;
            report.k_hat = Some(r.k_hat);
            report.k_dispersion = Some(r.k_dispersion);
            r.partition
        }
    };
    write_json(&a.out, &out)?;
    write_json(&a.report.clone().unwrap_or_else(|| sibling(&a.out, ".report.json")), &report)?;
    Ok((sibling(&a.out, ".run.json"), json!({ "base": base })))
}

fn run_fuse(a: &FuseArgs) -> Result<(PathBuf, Value)> {
    let text = read_dataset(&a.text)?;
    let vision = read_dataset(&a.vision)?;
    if text.len() != vision.len() {
        return Err(Error::LabelCount {
            labels: vision.len(),
            items: text.len(),
        });
    }
    let cfg = FusionConfig {
        mode: match a.mode {
            FuseMode::Convex => FusionMode::Convex,
            FuseMode::Concat => FusionMode::Concat,
        },
        weight_floor: a.weight_floor,
    };
    let mut items = Vec::with_capacity(text.len());
    for (t, g) in text.items.iter().zip(&vision.items) {
        if t.doc_id != g.doc_id {
            return Err(Error::MalformedManifest(format!(
                "text item {} paired with vision item {}",
                t.doc_id, g.doc_id
            )));
        }
        let v = fuse(&t.as_vector(Strategy::Raw)?, &g.as_vector(Strategy::Raw)?, t.ocr_confidence, &cfg)?;
        items.push(t.with_vector(&v));
    }
    let dim = items.first().map_or(text.dim, |i: &crate::TokenEmbeddings| i.cols);
    write_dataset(&Dataset::new(items, text.labels.clone(), dim)?, &a.out)?;
    Ok((a.out.join("run.json"), Value::Null))
}

fn run_align(a: &AlignArgs) -> Result<(PathBuf, Value)> {
    let ds = read_dataset(&a.input)?;
    let data = vectors(&ds)?;
    let keys: Vec<String> = ds
        .items
        .iter()
        .map(|i| i.language.clone().unwrap_or_else(|| UNTAGGED.to_string()))
        .collect();
    let stats = fit_group_stats(&data, &keys)?;
    let reference: GroupStats = match (&a.reference, &a.stats) {
        (_, Some(path)) => read_json(path)?,
        (Some(lang), None) => stats
            .iter()
            .find(|s| &s.group_key == lang)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no items tagged {lang}")))?,
        (None, None) => return Err(Error::Config("one of --reference or --stats is required".into())),
    };
    let mut out: Vec<DocVector> = data.clone();
    let mut ridges = serde_json::Map::new();
    for s in &stats {
        if s.group_key == reference.group_key && a.stats.is_none() {
            continue;
        }
        let idx: Vec<usize> = (0..data.len()).filter(|&i| keys[i] == s.group_key).collect();
        let members: Vec<&[f64]> = idx.iter().map(|&i| data[i].vector.as_slice()).collect();
        let ridge = a.ridge.unwrap_or_else(|| s.default_ridge());
        ridges.insert(s.group_key.clone(), json!(ridge));
        let moved = coral_align(&members, s, &reference, ridge)?;
        for (&i, v) in idx.iter().zip(moved) {
            out[i] = DocVector::new(data[i].doc_id.clone(), v, Strategy::Aligned);
        }
    }
    let items = ds.items.iter().zip(&out).map(|(te, v)| te.with_vector(v)).collect();
    write_dataset(&Dataset::new(items, ds.labels.clone(), ds.dim)?, &a.out)?;
    if let Some(path) = &a.stats_out {
        write_json(path, &stats)?;
    }
    Ok((a.out.join("run.json"), json!({ "ridge": ridges })))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed;
    let (manifest, resolved) = match &cli.command {
        Command::Synth(a) => run_synth(a, seed)?,
        Command::Project(a) => run_project(a)?,
        Command::Cluster(a) => run_cluster(a, seed)?,
        Command::Tune(a) => run_tune(a, seed)?,
        Command::Evaluate(a) => run_evaluate(a)?,
        Command::AggregatePages(a) => run_aggregate(a)?,
        Command::Consolidate(a) => run_consolidate(a, seed)?,
        Command::Fuse(a) => run_fuse(a)?,
        Command::Align(a) => run_align(a)?,
    };
    write_json(
        &manifest,
        &RunManifest {
            tool: "docclust",
            version: env!("CARGO_PKG_VERSION"),
            workers: rayon::current_num_threads(),
            cli,
            resolved,
        },
    )
}

/// Exit code for an error: 1 for invalid configuration, 2 for everything
/// the data caused.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(&cli)),
        Err(e) => Err(Error::Config(format!("cannot start worker pool: {e}"))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("docclust: {e}");
            exit_code(&e)
        }
    }
}
