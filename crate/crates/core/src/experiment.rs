//! Seed grids over one dataset / imbalance / method configuration.
//!
//! Every run is a pure function of the configuration and its seed, so runs
//! execute on a small worker pool and rows come back in seed-list order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::{calibrate_risk, compute_uncertainty};
use crate::diagnostics::{
    accuracy_by_distance, binned_accuracy, distance_to_same_class_supervision, evaluate,
    heterophilic_ratio, Bin, MetricsReport,
};
use crate::gnn::{train, EpochRecord, Method, PredictionState, TrainConfig, TrainOutcome};
use crate::graph::{
    generate_sbm, load_graph_with_split, make_natural_imbalance_split, make_step_imbalance_split,
    Graph, SbmParams, Split, DEFAULT_VAL_PER_CLASS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// A graph file; relative paths resolve against the config file.
    File { path: PathBuf },
    /// Synthetic SBM. A fixed `graph_seed` shares one graph across all runs;
    /// without it each run samples its own graph from its seed.
    Sbm {
        params: SbmParams,
        #[serde(default)]
        graph_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImbalanceKind {
    Step,
    Natural,
    /// Use the split stored in the graph file as is.
    Stored,
}

fn default_base() -> usize {
    20
}

fn default_val() -> usize {
    DEFAULT_VAL_PER_CLASS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceSpec {
    pub kind: ImbalanceKind,
    #[serde(default = "default_ir")]
    pub ir: f64,
    #[serde(default = "default_base")]
    pub base_per_class: usize,
    #[serde(default = "default_val")]
    pub val_per_class: usize,
}

fn default_ir() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub dataset: DatasetSpec,
    pub imbalance: ImbalanceSpec,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        self.train.validate()?;
        if let DatasetSpec::Sbm { params, .. } = &self.dataset {
            params.validate()?;
        }
        if self.imbalance.kind == ImbalanceKind::Stored
            && !matches!(self.dataset, DatasetSpec::File { .. })
        {
            return Err(Error::InvalidParameter(
                "a stored split needs a graph file dataset".into(),
            ));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        match &self.dataset {
            DatasetSpec::File { path } => path
                .file_stem()
                .map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned()),
            DatasetSpec::Sbm { .. } => "sbm".into(),
        }
    }
}

/// Sets a dotted key (`train.epochs`, `imbalance.ir`) in a JSON document.
/// The value is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::InvalidParameter(format!("bad override key {key:?}")));
        }
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::InvalidParameter(format!("override {key:?}: {part:?} is not inside an object"))
        })?;
        if k + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses `key=value`.
pub fn parse_override(spec: &str) -> Result<(&str, &str)> {
    spec.split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("override {spec:?} is not key=value")))
}

pub fn load_config(path: impl AsRef<Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |source| Error::Parse {
        context: path.display().to_string(),
        source,
    };
    let mut doc: Value = serde_json::from_str(&text).map_err(parse_err)?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        apply_override(&mut doc, k, v)?;
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(doc).map_err(parse_err)?;
    if let DatasetSpec::File { path: p } = &mut cfg.dataset {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub ir: f64,
    pub seed: u64,
    pub bacc: f64,
    pub macro_f1: f64,
    pub disparity: f64,
    pub runtime_ms: f64,
    pub virtual_edge_ratio: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub bacc: MeanStd,
    pub macro_f1: MeanStd,
    pub disparity: MeanStd,
    pub runtime_ms: MeanStd,
    pub virtual_edge_ratio: MeanStd,
}

impl Aggregate {
    pub fn of(rows: &[ResultRow]) -> Self {
        let col = |f: fn(&ResultRow) -> f64| MeanStd::of(&rows.iter().map(f).collect::<Vec<_>>());
        Aggregate {
            bacc: col(|r| r.bacc),
            macro_f1: col(|r| r.macro_f1),
            disparity: col(|r| r.disparity),
            runtime_ms: col(|r| r.runtime_ms),
            virtual_edge_ratio: col(|r| r.virtual_edge_ratio),
        }
    }
}

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub row: ResultRow,
    pub graph: Arc<Graph<f64>>,
    pub split: Split,
    pub outcome: TrainOutcome<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub aggregate: Aggregate,
    pub histories: Vec<(u64, Vec<EpochRecord>)>,
}

/// Graph source shared by the runs of one experiment.
pub struct Dataset {
    spec: DatasetSpec,
    loaded: Option<(Arc<Graph<f64>>, Option<Split>)>,
}

impl Dataset {
    pub fn open(spec: &DatasetSpec) -> Result<Self> {
        let loaded = match spec {
            DatasetSpec::File { path } => {
                let (g, s) = load_graph_with_split(path)?;
                Some((Arc::new(g), s))
            }
            DatasetSpec::Sbm {
                params,
                graph_seed: Some(gs),
            } => Some((Arc::new(generate_sbm(params, *gs)?), None)),
            DatasetSpec::Sbm { .. } => None,
        };
        Ok(Dataset {
            spec: spec.clone(),
            loaded,
        })
    }

    pub fn graph_for(&self, seed: u64) -> Result<(Arc<Graph<f64>>, Option<Split>)> {
        match (&self.loaded, &self.spec) {
            (Some((g, s)), _) => Ok((g.clone(), s.clone())),
            (None, DatasetSpec::Sbm { params, .. }) => Ok((Arc::new(generate_sbm(params, seed)?), None)),
            (None, DatasetSpec::File { .. }) => unreachable!("file datasets are loaded on open"),
        }
    }
}

pub fn make_split(g: &Graph<f64>, stored: Option<Split>, spec: &ImbalanceSpec, seed: u64) -> Result<Split> {
    match spec.kind {
        ImbalanceKind::Step => {
            make_step_imbalance_split(g, spec.base_per_class, spec.ir, spec.val_per_class, seed)
        }
        ImbalanceKind::Natural => make_natural_imbalance_split(g, spec.ir, spec.val_per_class, seed),
        ImbalanceKind::Stored => {
            stored.ok_or_else(|| Error::InvalidSplit("graph file has no stored split".into()))
        }
    }
}

pub fn run_seed(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<RunOutput> {
    let (graph, stored) = data.graph_for(seed)?;
    let split = make_split(&graph, stored, &cfg.imbalance, seed)?;
    let train_cfg = TrainConfig {
        method: cfg.method,
        seed,
        ..cfg.train.clone()
    };
    let outcome = train(&graph, &split, &train_cfg)?;
    let r = &outcome.report;
    let row = ResultRow {
        dataset: cfg.dataset_name(),
        method: cfg.method.to_string(),
        ir: cfg.imbalance.ir,
        seed,
        bacc: r.bacc,
        macro_f1: r.macro_f1,
        disparity: r.disparity,
        runtime_ms: r.runtime_ms,
        virtual_edge_ratio: r.virtual_edge_ratio,
        epochs_run: outcome.history.len(),
    };
    Ok(RunOutput {
        row,
        graph,
        split,
        outcome,
    })
}

/// Runs every seed (in parallel, up to the available cores) and returns
/// the outputs in seed-list order.
pub fn run_seeds(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let data = Dataset::open(&cfg.dataset)?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cfg.seeds.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunOutput>>>> =
        Mutex::new((0..cfg.seeds.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= cfg.seeds.len() {
                    break;
                }
                let out = run_seed(cfg, &data, cfg.seeds[k]);
                slots.lock().expect("result slots")[k] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|s| s.expect("every seed ran"))
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let outputs = run_seeds(cfg)?;
    let rows: Vec<ResultRow> = outputs.iter().map(|o| o.row.clone()).collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        aggregate: Aggregate::of(&rows),
        histories: outputs
            .into_iter()
            .map(|o| (o.row.seed, o.outcome.history))
            .collect(),
        rows,
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    runs: usize,
    aggregate: &'a Aggregate,
}

/// Writes `results.csv`, `summary.json` and `history/seed_<seed>.csv`.
pub fn write_outputs(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let hist_dir = dir.join("history");
    fs::create_dir_all(&hist_dir).map_err(|e| Error::io(&hist_dir, e))?;
    write_results_csv(dir.join("results.csv"), &result.rows)?;
    let summary = Summary {
        config: &result.config,
        runs: result.rows.len(),
        aggregate: &result.aggregate,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let p = dir.join("summary.json");
    fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
    for (seed, history) in &result.histories {
        let p = hist_dir.join(format!("seed_{seed}.csv"));
        let mut w = csv::Writer::from_path(&p)?;
        for rec in history {
            w.serialize(rec)?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn write_results_csv(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularityRow {
    pub granularity: usize,
    pub bacc: MeanStd,
    pub macro_f1: MeanStd,
    /// Augmentation calls per run.
    pub invocations: usize,
    /// Mean augmentation wall time per training iteration.
    pub augment_ms_per_iteration: f64,
}

/// Reruns `cfg` once per granularity value.
pub fn compare_granularity(cfg: &ExperimentConfig, values: &[usize]) -> Result<Vec<GranularityRow>> {
    if cfg.method.augment.similarity().is_none() {
        return Err(Error::InvalidParameter(
            "granularity comparison needs an augmenting method".into(),
        ));
    }
    values
        .iter()
        .map(|&granularity| {
            let mut c = cfg.clone();
            c.train.granularity = granularity;
            let outputs = run_seeds(&c)?;
            let rows: Vec<ResultRow> = outputs.iter().map(|o| o.row.clone()).collect();
            let agg = Aggregate::of(&rows);
            let iters: usize = outputs.iter().map(|o| o.outcome.history.len()).sum();
            let aug_ms: f64 = outputs.iter().map(|o| o.outcome.augment_time_ms).sum();
            Ok(GranularityRow {
                granularity,
                bacc: agg.bacc,
                macro_f1: agg.macro_f1,
                invocations: outputs[0].outcome.augment_invocations,
                augment_ms_per_iteration: aug_ms / iters.max(1) as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbsFile {
    pub probs: Vec<Vec<f64>>,
}

pub fn load_probs(path: impl AsRef<Path>) -> Result<PredictionState<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ProbsFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })?;
    let n = file.probs.len();
    let m = file.probs.first().map_or(0, Vec::len);
    for (i, row) in file.probs.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Shape(format!("probs[{i}]: expected {m} values, found {}", row.len())));
        }
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!("probs[{i}]: entries must lie in [0, 1]")));
        }
    }
    let flat = file.probs.into_iter().flatten().collect();
    let probs = ndarray::Array2::from_shape_vec((n, m), flat).map_err(|e| Error::Shape(e.to_string()))?;
    PredictionState::from_probs(probs)
}

/// Bias diagnostics for one prediction state, over the test nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub metrics: MetricsReport,
    pub heterophily_bins: Vec<Bin>,
    pub distance_groups: Vec<(usize, Bin)>,
    pub risk_bins: Vec<Bin>,
}

pub fn diagnose(
    g: &Graph<f64>,
    split: &Split,
    pred: &PredictionState<f64>,
    windows: usize,
) -> Result<Diagnosis> {
    if pred.num_nodes() != g.num_nodes() || pred.num_classes() != g.num_classes() {
        return Err(Error::Shape(format!(
            "probabilities are {}x{}, graph has {} nodes and {} classes",
            pred.num_nodes(),
            pred.num_classes(),
            g.num_nodes(),
            g.num_classes()
        )));
    }
    let labels = g.labels();
    let test = split.test();
    let metrics = evaluate(pred.preds(), labels, test, g.num_classes())?;
    let correct: Vec<bool> = test.iter().map(|&i| pred.preds()[i] == labels[i]).collect();
    let hetero = heterophilic_ratio(g, labels);
    let dist = distance_to_same_class_supervision(g, labels, split.train());
    let u = compute_uncertainty(pred);
    let risk = calibrate_risk(&u, pred.preds(), split)?;
    let pick = |v: &[f64]| test.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    Ok(Diagnosis {
        metrics,
        heterophily_bins: binned_accuracy(&pick(&hetero), &correct, windows)?,
        distance_groups: accuracy_by_distance(
            &test.iter().map(|&i| dist[i]).collect::<Vec<_>>(),
            &correct,
        ),
        risk_bins: binned_accuracy(&pick(&risk.r), &correct, windows)?,
    })
}
