//! End-to-end experiment: preprocess, summarize, train on the summary,
//! transfer, then train the transfer and baseline models side by side
//! under k-fold cross-validation.

mod config;
mod output;

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{resolve_method, ConfigError, ExperimentConfig};
pub use output::{plot_svg, write_csv, Metric, Stat, CSV_HEADER};

use crate::graph::{
    drop_literal_edges, parse_ntriples, Compaction, Dataset, NodeId, ParseOptions, TripleGraph,
    RDF_TYPE,
};
use crate::labels::{binary_labels, make_folds, summary_labels_for, LabelMatrix, Split};
use crate::rgcn::{
    assess, train_observed, EpochRecord, EvalSet, FreezePlan, MessagePassingStructure, Metrics,
    RgcnError, RgcnModel, RgcnParams, TrainConfig, DEFAULT_HIDDEN,
};
use crate::summary::{
    compression_rate, summarize, PartitionId, SummaryGraph, SummaryMapping, SummaryMethod,
};
use crate::transfer::{transfer_params, TransferReport};

/// Pipeline stage, reported with every failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Preprocess,
    Summarize,
    Labels,
    SummaryTraining,
    Transfer,
    Training,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Parse => "parse",
            Stage::Preprocess => "preprocess",
            Stage::Summarize => "summarize",
            Stage::Labels => "labels",
            Stage::SummaryTraining => "summary-training",
            Stage::Transfer => "transfer",
            Stage::Training => "training",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} stage failed: {message}")]
    Data { stage: Stage, message: String },
    #[error("{stage} stage failed: {source}")]
    Numeric { stage: Stage, source: RgcnError },
}

impl PipelineError {
    pub fn data(stage: Stage, err: impl fmt::Display) -> Self {
        PipelineError::Data {
            stage,
            message: err.to_string(),
        }
    }

    pub fn rgcn(stage: Stage, err: RgcnError) -> Self {
        match err {
            RgcnError::NumericFault { .. } => PipelineError::Numeric { stage, source: err },
            other => PipelineError::data(stage, other),
        }
    }

    /// 2 for configuration errors, 3 for data errors, 4 for numeric faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data { .. } => 3,
            PipelineError::Numeric { .. } => 4,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Config(_) => None,
            PipelineError::Data { stage, .. } | PipelineError::Numeric { stage, .. } => {
                Some(*stage)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Summary,
    Transfer,
    Baseline,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Summary, ModelKind::Transfer, ModelKind::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Summary => "summary",
            ModelKind::Transfer => "transfer",
            ModelKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One CSV row. Epoch 0 is the evaluation before any training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub fold: usize,
    pub model: ModelKind,
    pub epoch: usize,
    pub loss: f64,
    pub subset_acc: f64,
    pub hamming_acc: f64,
    /// Wall-clock milliseconds since the model started training; 0 unless
    /// timing was requested.
    pub ms: u64,
}

/// A preprocessed graph with its summary and labels.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Graph the summary was computed from.
    pub summary_input: TripleGraph,
    pub summary: SummaryGraph,
    /// Mapping over the nodes of `summary_input`.
    pub mapping: SummaryMapping,
    /// Partition of every node of `dataset.graph`; `None` for nodes removed
    /// from the summary input.
    pub partition_of: Vec<Option<PartitionId>>,
    pub labels: LabelMatrix,
}

impl Prepared {
    pub fn compression_rate(&self) -> Option<f64> {
        compression_rate(&self.summary_input, &self.summary).ok()
    }

    pub fn node_labels(&self) -> Vec<String> {
        self.dataset
            .graph
            .nodes()
            .iter()
            .map(|n| n.label.clone())
            .collect()
    }

    pub fn summary_node_labels(&self) -> Vec<String> {
        self.summary
            .graph
            .nodes()
            .iter()
            .map(|n| n.label.clone())
            .collect()
    }
}

pub fn load_graph(path: &Path) -> Result<TripleGraph, PipelineError> {
    let file = File::open(path)
        .map_err(|e| PipelineError::data(Stage::Parse, format!("{}: {e}", path.display())))?;
    parse_ntriples(BufReader::new(file), ParseOptions::default())
        .map_err(|e| PipelineError::data(Stage::Parse, format!("{}: {e}", path.display())))
}

/// Strips types, filters OWL, optionally drops literal edges from the
/// summary input, and summarizes.
pub fn prepare(raw: &TripleGraph, method: SummaryMethod, drop_literals: bool) -> Prepared {
    let dataset = Dataset::prepare(raw, RDF_TYPE);
    let (summary_input, compaction) = if drop_literals {
        drop_literal_edges(&dataset.graph)
    } else {
        (
            dataset.graph.clone(),
            Compaction::identity(dataset.graph.num_nodes()),
        )
    };
    let (summary, mapping) = summarize(&summary_input, method);
    let partition_of = (0..dataset.graph.num_nodes())
        .map(|v| compaction.map(v).map(|u| mapping.partition_of(u)))
        .collect();
    let labels = binary_labels(&dataset.types, dataset.graph.num_nodes());
    Prepared {
        dataset,
        summary_input,
        summary,
        mapping,
        partition_of,
        labels,
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    /// One report per fold.
    pub reports: Vec<TransferReport>,
    pub compression_rate: Option<f64>,
    pub original_nodes: usize,
    pub original_edges: usize,
    pub summary_nodes: usize,
    pub summary_edges: usize,
    pub labeled_nodes: usize,
    pub classes: usize,
}

impl ExperimentResult {
    /// Mean and sample standard deviation over folds at `epoch`.
    pub fn stat(&self, model: ModelKind, epoch: usize, metric: Metric) -> Stat {
        Stat::of(
            self.records
                .iter()
                .filter(|r| r.model == model && r.epoch == epoch)
                .map(|r| metric.of(r)),
        )
    }

    pub fn last_epoch(&self, model: ModelKind) -> Option<usize> {
        self.records
            .iter()
            .filter(|r| r.model == model)
            .map(|r| r.epoch)
            .max()
    }

    pub fn csv(&self) -> String {
        let mut buf = Vec::new();
        write_csv(&self.records, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn summary_text(&self) -> String {
        output::summary_text(self)
    }
}

/// SplitMix64 finalizer over the base seed, fold and role.
fn derive_seed(base: u64, fold: usize, role: u64) -> u64 {
    let mut z = base
        ^ (fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ role.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const ROLE_SUMMARY: u64 = 1;
const ROLE_INIT: u64 = 2;

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    prepared: &'a Prepared,
    original: MessagePassingStructure,
    summary: MessagePassingStructure,
}

struct TrainedSummary {
    model: RgcnModel,
    records: Vec<RunRecord>,
}

struct FoldOutcome {
    records: Vec<RunRecord>,
    report: TransferReport,
}

/// Runs the full experiment and writes `results.csv`, `summary.txt`,
/// `transfer_report.txt` and the two SVG plots into `cfg.out`. On failure
/// the completed folds are still written, next to a `FAILED` marker.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, PipelineError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| PipelineError::data(Stage::Output, e))?;
    let marker = cfg.out.join("FAILED");
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| PipelineError::data(Stage::Output, e))?;
    }
    let (result, error) = execute(cfg);
    let written = output::write_outputs(cfg, &result);
    let error = error.or(written.err());
    match error {
        None => Ok(result),
        Some(err) => {
            // best effort: the original error is what the caller needs
            let _ = std::fs::write(&marker, format!("{err}\n"));
            Err(err)
        }
    }
}

/// Runs the experiment without touching the filesystem beyond reading the
/// dataset. Returns whatever was completed along with the first error.
pub fn execute(cfg: &ExperimentConfig) -> (ExperimentResult, Option<PipelineError>) {
    let mut result = ExperimentResult {
        records: Vec::new(),
        reports: Vec::new(),
        compression_rate: None,
        original_nodes: 0,
        original_edges: 0,
        summary_nodes: 0,
        summary_edges: 0,
        labeled_nodes: 0,
        classes: 0,
    };
    let raw = match load_graph(&cfg.dataset) {
        Ok(g) => g,
        Err(e) => return (result, Some(e)),
    };
    let prepared = prepare(&raw, cfg.summary_method, cfg.drop_literals);
    drop(raw);
    result.compression_rate = prepared.compression_rate();
    result.original_nodes = prepared.dataset.graph.num_nodes();
    result.original_edges = prepared.dataset.graph.size();
    result.summary_nodes = prepared.summary.graph.num_nodes();
    result.summary_edges = prepared.summary.graph.size();
    result.classes = prepared.labels.num_classes();
    let labeled = prepared.labels.masked_rows();
    result.labeled_nodes = labeled.len();
    if prepared.labels.num_classes() == 0 {
        return (
            result,
            Some(PipelineError::data(
                Stage::Labels,
                "graph has no typed nodes",
            )),
        );
    }
    let splits = match make_folds(&labeled, cfg.folds, cfg.seed) {
        Ok(s) => s,
        Err(e) => return (result, Some(PipelineError::data(Stage::Labels, e))),
    };

    let shared = Shared {
        cfg,
        prepared: &prepared,
        original: MessagePassingStructure::build(&prepared.dataset.graph, true),
        summary: MessagePassingStructure::build(&prepared.summary.graph, true),
    };
    let common = if cfg.per_fold_summary {
        None
    } else {
        match train_summary(&shared, &prepared.labels, cfg.folds) {
            Ok(s) => Some(s),
            Err(e) => return (result, Some(e)),
        }
    };

    let outcomes: Vec<Result<FoldOutcome, PipelineError>> = splits
        .par_iter()
        .map(|split| run_fold(&shared, split, common.as_ref()))
        .collect();
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                result.records.extend(o.records);
                result.reports.push(o.report);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    (result, first_error)
}

fn train_summary(
    shared: &Shared<'_>,
    labels: &LabelMatrix,
    fold: usize,
) -> Result<TrainedSummary, PipelineError> {
    let p = shared.prepared;
    let targets = summary_labels_for(labels, &p.partition_of, p.summary.graph.num_nodes())
        .map_err(|e| PipelineError::data(Stage::Labels, e))?;
    let rows = targets.masked_rows();
    if rows.is_empty() {
        return Err(PipelineError::data(
            Stage::Labels,
            "no summary node has a labeled member",
        ));
    }
    let rounded = targets.rounded();
    let classes = targets.num_classes();
    let seed = derive_seed(shared.cfg.seed, fold, ROLE_SUMMARY);
    let mut params = RgcnParams::glorot(&shared.summary, DEFAULT_HIDDEN, classes, seed);
    let eval = EvalSet {
        targets: &rounded,
        rows: &rows,
    };
    let config = TrainConfig {
        epochs: shared.cfg.summary_epochs,
        ..TrainConfig::default()
    };
    let records = fit(
        shared,
        &shared.summary,
        &mut params,
        &targets,
        &rows,
        eval,
        &config,
        fold,
        ModelKind::Summary,
        Stage::SummaryTraining,
    )?;
    Ok(TrainedSummary {
        model: RgcnModel {
            classes: targets.classes().to_vec(),
            node_labels: p.summary_node_labels(),
            relations: shared.summary.relation_keys(),
            params,
        },
        records,
    })
}

fn run_fold(
    shared: &Shared<'_>,
    split: &Split,
    common: Option<&TrainedSummary>,
) -> Result<FoldOutcome, PipelineError> {
    let p = shared.prepared;
    let cfg = shared.cfg;
    let local;
    let summary = match common {
        Some(s) => s,
        None => {
            local = train_summary(shared, &p.labels.restrict(&split.train), split.fold)?;
            &local
        }
    };
    let mut records: Vec<RunRecord> = summary
        .records
        .iter()
        .map(|r| RunRecord {
            fold: split.fold,
            ..*r
        })
        .collect();

    let init_seed = derive_seed(cfg.seed, split.fold, ROLE_INIT);
    let classes = p.labels.classes();
    let (mut transfer, report) = transfer_params(
        &summary.model,
        &p.partition_of,
        &shared.original,
        classes,
        DEFAULT_HIDDEN,
        init_seed,
    )
    .map_err(|e| PipelineError::data(Stage::Transfer, e))?;
    let mut baseline =
        RgcnParams::glorot(&shared.original, DEFAULT_HIDDEN, classes.len(), init_seed);

    let eval = EvalSet {
        targets: &p.labels,
        rows: &split.test,
    };
    for (kind, params, freeze) in [
        (ModelKind::Transfer, &mut transfer, cfg.freeze),
        (ModelKind::Baseline, &mut baseline, FreezePlan::default()),
    ] {
        let config = TrainConfig {
            epochs: cfg.epochs,
            freeze,
            ..TrainConfig::default()
        };
        records.extend(fit(
            shared,
            &shared.original,
            params,
            &p.labels,
            &split.train,
            eval,
            &config,
            split.fold,
            kind,
            Stage::Training,
        )?);
    }
    Ok(FoldOutcome { records, report })
}

/// Epoch-0 assessment followed by training, as CSV rows.
#[allow(clippy::too_many_arguments)]
fn fit(
    shared: &Shared<'_>,
    structure: &MessagePassingStructure,
    params: &mut RgcnParams,
    targets: &LabelMatrix,
    train_rows: &[NodeId],
    eval: EvalSet<'_>,
    config: &TrainConfig,
    fold: usize,
    model: ModelKind,
    stage: Stage,
) -> Result<Vec<RunRecord>, PipelineError> {
    let record_time = shared.cfg.record_time;
    let row = |epoch: usize, loss: f64, m: Metrics, ms: u64| RunRecord {
        fold,
        model,
        epoch,
        loss,
        subset_acc: m.subset_accuracy,
        hamming_acc: m.hamming_accuracy,
        ms: if record_time { ms } else { 0 },
    };
    let (loss, metrics) = assess(structure, params, targets, train_rows, Some(eval))
        .map_err(|e| PipelineError::rgcn(stage, e))?;
    let mut rows = vec![row(0, loss, metrics.expect("eval set given"), 0)];
    let start = Instant::now();
    let mut elapsed = Vec::with_capacity(config.epochs);
    let history: Vec<EpochRecord> = train_observed(
        structure,
        params,
        targets,
        train_rows,
        config,
        Some(eval),
        |_| elapsed.push(start.elapsed().as_millis() as u64),
    )
    .map_err(|e| PipelineError::rgcn(stage, e))?;
    for (r, ms) in history.iter().zip(elapsed) {
        rows.push(row(r.epoch, r.loss, r.metrics.expect("eval set given"), ms));
    }
    Ok(rows)
}
