//! `raa`: prepare graphs, train, evaluate, predict and sweep.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raa_core::anchoring::AblationMode;
use raa_core::graph::Split;
use raa_core::parallel::Exec;
use raa_core::pipeline::{self, EvaluateOptions, PredictOptions, PrepareSource, SweepAxis};
use raa_core::synthetic::SyntheticSpec;
use raa_core::{Error, ModelKind, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "raa", version, about = "Relation-aware anchor enhanced link prediction")]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn raw TSV files, the toy graph or a generated surrogate into a prepared store.
    Prepare(PrepareArgs),
    /// Train a model and write checkpoints.
    Train(TrainArgs),
    /// Filtered evaluation of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Top-m tails for one query.
    Predict(PredictArgs),
    /// Train and evaluate across values of k or alpha.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct PrepareArgs {
    /// Raw directory with train/valid/test files and optional descriptions.tsv.
    #[arg(long, conflicts_with_all = ["toy", "synthetic"])]
    input: Option<PathBuf>,
    /// Use the bundled 30-triple toy graph.
    #[arg(long)]
    toy: bool,
    /// Generate a surrogate graph: `small` or `wordnet` (WordNet-sized).
    #[arg(long, value_name = "SIZE")]
    synthetic: Option<String>,
    /// Seed of the surrogate generator.
    #[arg(long, default_value_t = 0)]
    synthetic_seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    max_seq_len: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Run seed; falls back to RAA_SEED, then to the config file.
    #[arg(long, env = "RAA_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(
            dataset,
            model,
            mode,
            k,
            alpha,
            margin,
            tau,
            dim,
            vocab_size,
            max_seq_len,
            batch_size,
            epochs,
            learning_rate,
            weight_decay,
            patience,
            seed,
            output_dir
        );
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Checkpoint directory (contains manifest.json and params.bin).
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    k: Option<usize>,
    /// Raw directory of an unseen graph; ranks its test split among its own entities.
    #[arg(long)]
    inductive: Option<PathBuf>,
    /// Where to write metrics.json, metrics.csv and rankings.jsonl.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write entity embeddings as TSV to this path.
    #[arg(long)]
    export_embeddings: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    head: String,
    /// Relation name; append `^-1` for the inverse direction.
    #[arg(long)]
    relation: String,
    #[arg(long)]
    top_m: Option<usize>,
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    k: Option<usize>,
    /// Hide tails already known for this query.
    #[arg(long)]
    filter_known: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// `k` or `alpha`.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated values; defaults to 0..=5 for k and 0,0.1,0.3,0.5,1 for alpha.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, default_value = "valid")]
    split: Split,
}

/// Writes one line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), Error> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Prepare(a) => {
            let source = match (a.input, a.toy, a.synthetic.as_deref()) {
                (Some(dir), false, None) => PrepareSource::Raw(dir),
                (None, true, None) => PrepareSource::Toy,
                (None, false, Some("small")) => PrepareSource::Synthetic(SyntheticSpec::small(a.synthetic_seed)),
                (None, false, Some("wordnet")) => {
                    PrepareSource::Synthetic(SyntheticSpec::wordnet_v1_like(a.synthetic_seed))
                }
                (None, false, Some(other)) => {
                    return Err(Error::Config(format!("unknown synthetic size {other:?} (small, wordnet)")))
                }
                _ => return Err(Error::Config("give exactly one of --input, --toy, --synthetic".into())),
            };
            print_json(&pipeline::prepare(&source, &a.output)?)
        }
        Command::Train(a) => {
            let config = a.overrides.resolve()?;
            print_json(&pipeline::train(&config, exec)?)
        }
        Command::Evaluate(a) => {
            let opts = EvaluateOptions {
                checkpoint: a.checkpoint.clone(),
                dataset: a.dataset.clone(),
                split: Some(a.split),
                mode: a.mode,
                k: a.k,
                inductive: a.inductive,
                output_dir: a.output,
            };
            let outcome = pipeline::evaluate(&opts, exec)?;
            if let Some(path) = &a.export_embeddings {
                let n = pipeline::export_entity_embeddings(&a.checkpoint, a.dataset.as_deref(), path, exec)?;
                log::info!("wrote {n} embeddings to {}", path.display());
            }
            emit(&outcome.report.to_json())
        }
        Command::Predict(a) => {
            let opts = PredictOptions {
                checkpoint: a.checkpoint,
                dataset: a.dataset,
                head: a.head,
                relation: a.relation,
                top_m: a.top_m,
                mode: a.mode,
                k: a.k,
                filter_known: a.filter_known,
            };
            print_json(&pipeline::predict(&opts, exec)?)
        }
        Command::Sweep(a) => {
            let config = a.overrides.resolve()?;
            print_json(&pipeline::sweep(&config, a.axis, a.values, a.split, exec)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
