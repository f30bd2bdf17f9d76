use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use summgcn::graph::{write_ntriples, TripleGraph};
use summgcn::labels::{read_labels, summary_labels_for, write_labels, LabelMatrix};
use summgcn::pipeline::{
    load_graph, prepare, resolve_method, run_experiment, ConfigError, ExperimentConfig,
    PipelineError, Stage,
};
use summgcn::rgcn::{
    assess, train, EvalSet, FreezePlan, MessagePassingStructure, RgcnModel, RgcnParams,
    TrainConfig, DEFAULT_HIDDEN,
};
use summgcn::summary::{read_mapping, write_mapping, SummaryGraph};
use summgcn::transfer::transfer_params;

#[derive(Parser)]
#[command(
    name = "summgcn",
    version,
    about = "Graph-summary transfer learning for featureless R-GCNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full cross-validated experiment.
    Run(RunArgs),
    /// Preprocess a graph and write its summary, mapping and labels.
    Summarize(SummarizeArgs),
    /// Train a model on a graph and write a checkpoint.
    Train(TrainArgs),
    /// Initialize an original-graph checkpoint from a summary checkpoint.
    Transfer(TransferArgs),
    /// Print metrics of a checkpoint on labeled nodes.
    Eval(EvalArgs),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset in N-Triples; overrides `dataset` from the config.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// attributes, io, incoming or bisim.
    #[arg(long)]
    summary_method: Option<String>,
    /// Bisimulation depth.
    #[arg(long)]
    k: Option<usize>,
    /// Remove literal-valued edges from the summary input.
    #[arg(long)]
    drop_literals: bool,
    /// Layers of the transfer model to freeze, e.g. `layer1,layer2`.
    #[arg(long)]
    freeze: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if self.summary_method.is_some() || self.k.is_some() {
            let name = self
                .summary_method
                .as_deref()
                .unwrap_or(cfg.summary_method.name());
            let k = self.k.or(match cfg.summary_method {
                summgcn::summary::SummaryMethod::Bisimulation { k } => Some(k),
                _ => None,
            });
            cfg.summary_method = resolve_method(name, k)?;
        }
        if self.drop_literals {
            cfg.drop_literals = true;
        }
        if let Some(f) = &self.freeze {
            cfg.freeze = parse_freeze(f)?;
        }
        if let Some(f) = self.folds {
            cfg.folds = f;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    /// `node<TAB>type<TAB>weight` targets.
    #[arg(long)]
    labels: PathBuf,
    /// Start from this checkpoint instead of a random init.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    checkpoint_out: PathBuf,
    #[arg(long)]
    freeze: Option<String>,
    #[arg(long, default_value_t = summgcn::rgcn::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    summary_checkpoint: PathBuf,
    /// Mapping TSV written by `summarize`.
    #[arg(long)]
    mapping: PathBuf,
    /// Preprocessed original graph.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    checkpoint_out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Summarize(a) => summarize(a),
        Command::Train(a) => train_cmd(a),
        Command::Transfer(a) => transfer_cmd(a),
        Command::Eval(a) => eval_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_freeze(spec: &str) -> Result<FreezePlan, PipelineError> {
    FreezePlan::parse(spec).map_err(|reason| {
        PipelineError::Config(ConfigError::InvalidValue {
            key: "freeze".into(),
            value: spec.into(),
            reason,
        })
    })
}

fn run(args: RunArgs) -> Result<(), PipelineError> {
    let cfg = args.common.config()?;
    let result = run_experiment(&cfg)?;
    print!("{}", result.summary_text());
    println!("results written to {}", cfg.out.display());
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<(), PipelineError> {
    let cfg = args.common.config()?;
    let raw = load_graph(&cfg.dataset)?;
    let p = prepare(&raw, cfg.summary_method, cfg.drop_literals);
    fs::create_dir_all(&cfg.out).map_err(|e| PipelineError::data(Stage::Output, e))?;
    let out = |name: &str| cfg.out.join(name);
    let node_labels = p.node_labels();

    write_file(&out("preprocessed.nt"), |w| {
        write_ntriples(&p.dataset.graph, w)
    })?;
    write_file(&out("summary.nt"), |w| write_ntriples(&p.summary.graph, w))?;
    write_file(&out("mapping.tsv"), |w| {
        write_mapping(&p.summary_input, &p.mapping, w)
    })?;
    write_file(&out("labels.tsv"), |w| {
        write_labels(&p.labels, &node_labels, w)
    })?;
    let soft = summary_labels_for(&p.labels, &p.partition_of, p.summary.graph.num_nodes())
        .map_err(|e| PipelineError::data(Stage::Labels, e))?;
    write_file(&out("summary_labels.tsv"), |w| {
        write_labels(&soft, &p.summary_node_labels(), w)
    })?;
    let info = format!(
        "method={}\noriginal_nodes={}\noriginal_edges={}\nsummary_nodes={}\nsummary_edges={}\ncompression_rate={}\n",
        p.summary.method,
        p.dataset.graph.num_nodes(),
        p.dataset.graph.size(),
        p.summary.graph.num_nodes(),
        p.summary.graph.size(),
        p.compression_rate().map_or("undefined".to_string(), |c| format!("{c:.6}")),
    );
    fs::write(out("summary_info.txt"), &info).map_err(|e| PipelineError::data(Stage::Output, e))?;
    print!("{info}");
    Ok(())
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), PipelineError> {
    let err =
        |e: std::io::Error| PipelineError::data(Stage::Output, format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    body(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

fn read_text(path: &Path, stage: Stage) -> Result<String, PipelineError> {
    fs::read_to_string(path)
        .map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

fn load_checkpoint(path: &Path) -> Result<RgcnModel, PipelineError> {
    let bytes = fs::read(path)
        .map_err(|e| PipelineError::data(Stage::Parse, format!("{}: {e}", path.display())))?;
    RgcnModel::decode(&bytes)
        .map_err(|e| PipelineError::data(Stage::Parse, format!("{}: {e}", path.display())))
}

fn save_checkpoint(model: &RgcnModel, path: &Path) -> Result<(), PipelineError> {
    let file = File::create(path)
        .map_err(|e| PipelineError::data(Stage::Output, format!("{}: {e}", path.display())))?;
    model
        .write_to(BufWriter::new(file))
        .map_err(|e| PipelineError::data(Stage::Output, format!("{}: {e}", path.display())))
}

fn labels_of(g: &TripleGraph) -> Vec<String> {
    g.nodes().iter().map(|n| n.label.clone()).collect()
}

/// Reads a label TSV, skipping lines for nodes the graph does not contain
/// (nodes without edges cannot be represented in N-Triples).
fn load_labels(
    path: &Path,
    node_labels: &[String],
    classes: Option<&[String]>,
) -> Result<LabelMatrix, PipelineError> {
    let text = read_text(path, Stage::Labels)?;
    let known: std::collections::HashSet<&str> = node_labels.iter().map(String::as_str).collect();
    let mut skipped = 0usize;
    let kept: String = text
        .lines()
        .filter(|l| match l.rsplitn(3, '\t').nth(2) {
            Some(node) if !known.contains(node) => {
                skipped += 1;
                false
            }
            _ => true,
        })
        .map(|l| format!("{l}\n"))
        .collect();
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} label lines for nodes absent from the graph");
    }
    read_labels(&kept, node_labels, classes)
        .map_err(|e| PipelineError::data(Stage::Labels, format!("{}: {e}", path.display())))
}

fn train_cmd(args: TrainArgs) -> Result<(), PipelineError> {
    let freeze = match &args.freeze {
        Some(f) => parse_freeze(f)?,
        None => FreezePlan::default(),
    };
    let graph = load_graph(&args.graph)?;
    let structure = MessagePassingStructure::build(&graph, true);
    let node_labels = labels_of(&graph);
    let init = args.init.as_deref().map(load_checkpoint).transpose()?;
    let targets = load_labels(
        &args.labels,
        &node_labels,
        init.as_ref().map(|m| m.classes.as_slice()),
    )?;
    let mut params = match &init {
        Some(m) => {
            m.check_structure(&structure)
                .map_err(|e| PipelineError::rgcn(Stage::Training, e))?;
            if m.node_labels != node_labels {
                return Err(PipelineError::data(
                    Stage::Training,
                    "initial checkpoint was built for another graph",
                ));
            }
            m.params.clone()
        }
        None => RgcnParams::glorot(&structure, DEFAULT_HIDDEN, targets.num_classes(), args.seed),
    };
    let rows = targets.masked_rows();
    let config = TrainConfig {
        epochs: args.epochs,
        freeze,
        ..TrainConfig::default()
    };
    let history = train(&structure, &mut params, &targets, &rows, &config, None)
        .map_err(|e| PipelineError::rgcn(Stage::Training, e))?;
    let model = RgcnModel {
        classes: targets.classes().to_vec(),
        node_labels,
        relations: structure.relation_keys(),
        params,
    };
    save_checkpoint(&model, &args.checkpoint_out)?;
    match history.last() {
        Some(r) => println!("epochs={} final_loss={}", r.epoch, r.loss),
        None => println!("epochs=0"),
    }
    Ok(())
}

fn transfer_cmd(args: TransferArgs) -> Result<(), PipelineError> {
    let summary = load_checkpoint(&args.summary_checkpoint)?;
    let graph = load_graph(&args.graph)?;
    let structure = MessagePassingStructure::build(&graph, true);
    let node_labels = labels_of(&graph);
    let mapping_text = read_text(&args.mapping, Stage::Transfer)?;
    let mapping =
        read_mapping(&mapping_text).map_err(|e| PipelineError::data(Stage::Transfer, e))?;

    let summary_index: HashMap<&str, usize> = summary
        .node_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let by_label: HashMap<&str, usize> = mapping
        .iter()
        .filter_map(|(label, pid)| {
            summary_index
                .get(SummaryGraph::partition_label(*pid).as_str())
                .map(|&s| (label.as_str(), s))
        })
        .collect();
    let partition_of: Vec<Option<usize>> = node_labels
        .iter()
        .map(|l| by_label.get(l.as_str()).copied())
        .collect();

    let (params, report) = transfer_params(
        &summary,
        &partition_of,
        &structure,
        &summary.classes,
        summary.params.hidden,
        args.seed,
    )
    .map_err(|e| PipelineError::data(Stage::Transfer, e))?;
    let model = RgcnModel {
        classes: summary.classes.clone(),
        node_labels,
        relations: structure.relation_keys(),
        params,
    };
    save_checkpoint(&model, &args.checkpoint_out)?;
    print!("{report}");
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<(), PipelineError> {
    let model = load_checkpoint(&args.checkpoint)?;
    let graph = load_graph(&args.graph)?;
    let structure = MessagePassingStructure::build(&graph, true);
    let node_labels = labels_of(&graph);
    if model.node_labels != node_labels {
        return Err(PipelineError::data(
            Stage::Training,
            "checkpoint was built for another graph",
        ));
    }
    model
        .check_structure(&structure)
        .map_err(|e| PipelineError::rgcn(Stage::Training, e))?;
    let targets = load_labels(&args.labels, &node_labels, Some(&model.classes))?;
    let rows = targets.masked_rows();
    let eval = EvalSet {
        targets: &targets,
        rows: &rows,
    };
    let (loss, metrics) = assess(&structure, &model.params, &targets, &rows, Some(eval))
        .map_err(|e| PipelineError::rgcn(Stage::Training, e))?;
    let m = metrics.expect("eval set given");
    println!(
        "rows={} loss={loss:.6} subset_acc={:.6} hamming_acc={:.6}",
        rows.len(),
        m.subset_accuracy,
        m.hamming_accuracy
    );
    Ok(())
}
