use std::path::PathBuf;
use std::process::ExitCode;

use can_core::cli::{
    cmd_compare, cmd_eval, cmd_prepare, cmd_train, cmd_visualize, CliError, RunConfig, Source, Target, DATA_ROOT_VAR,
};
use clap::{Args, Parser, Subcommand};

/// Constrained attention networks for multi-aspect sentiment analysis.
#[derive(Parser)]
#[command(name = "can", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write instance dumps, vocabulary, split manifest and dataset statistics.
    Prepare(RunArgs),
    /// Train a variant and write checkpoint, history and resolved config.
    Train(RunArgs),
    /// Score a checkpoint on a split or instance dump.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Render attention heatmaps for sentences.
    Visualize {
        #[command(flatten)]
        run: RunArgs,
        /// repeat to show several checkpoints side by side
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        /// sentence id to render; repeatable
        #[arg(long)]
        id: Vec<String>,
        /// raw sentence to render instead of an id
        #[arg(long, requires = "aspects")]
        sentence: Option<String>,
        /// aspects of --sentence as `category:polarity,...`
        #[arg(long)]
        aspects: Option<String>,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Tabulate training histories per evaluation mode.
    Compare {
        #[arg(required = true)]
        histories: Vec<PathBuf>,
        #[arg(long, default_value = "runs/compare")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// dataset split to read: train, val or test
    #[arg(long, default_value = "test")]
    split: String,
    /// instance dump to read instead of a split
    #[arg(long)]
    instances: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> Source {
        match &self.instances {
            Some(p) => Source::Dump(p.clone()),
            None => Source::Split(self.split.clone()),
        }
    }
}

/// Flags mirroring the configuration file keys.
#[derive(Args)]
struct RunArgs {
    /// `key = value` file applied before the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// named variant, e.g. AT-LSTM, ATAE-CAN-Ro or M-CAN-2Ro
    #[arg(long)]
    variant: Option<String>,
    /// accept combinations outside the named variants
    #[arg(long)]
    custom: bool,
    #[arg(long)]
    multi_task: bool,
    /// lstm-avg, at or atae
    #[arg(long)]
    architecture: Option<String>,
    /// none, Rs or Ro
    #[arg(long)]
    reg_alsc: Option<String>,
    #[arg(long)]
    reg_acd: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// KxK or LxL
    #[arg(long)]
    gram: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    /// rest14, rest15 or synthetic
    #[arg(long)]
    dataset: Option<String>,
    /// 3way or binary
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    data_root: Option<String>,
    #[arg(long)]
    train_xml: Option<String>,
    #[arg(long)]
    test_xml: Option<String>,
    #[arg(long)]
    overlap_annotations: Option<String>,
    #[arg(long)]
    embeddings: Option<String>,
    /// directory written by `prepare`
    #[arg(long)]
    prepared: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    init_range: Option<String>,
    #[arg(long)]
    split_seed: Option<String>,
    #[arg(long)]
    synthetic_sentences: Option<String>,
    #[arg(long)]
    synthetic_test: Option<String>,
    #[arg(long)]
    synthetic_categories: Option<String>,
    #[arg(long)]
    synthetic_polarities: Option<String>,
    #[arg(long)]
    synthetic_seed: Option<String>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let flag = |on: bool| on.then(|| "true".to_string());
        [
            ("variant", self.variant.clone()),
            ("custom", flag(self.custom)),
            ("multi-task", flag(self.multi_task)),
            ("architecture", self.architecture.clone()),
            ("reg-alsc", self.reg_alsc.clone()),
            ("reg-acd", self.reg_acd.clone()),
            ("lambda", self.lambda.clone()),
            ("gram", self.gram.clone()),
            ("hidden", self.hidden.clone()),
            ("dataset", self.dataset.clone()),
            ("mode", self.mode.clone()),
            ("data-root", self.data_root.clone()),
            ("train-xml", self.train_xml.clone()),
            ("test-xml", self.test_xml.clone()),
            ("overlap-annotations", self.overlap_annotations.clone()),
            ("embeddings", self.embeddings.clone()),
            ("prepared", self.prepared.clone()),
            ("out", self.out.clone()),
            ("seed", self.seed.clone()),
            ("epochs", self.epochs.clone()),
            ("learning-rate", self.learning_rate.clone()),
            ("batch-size", self.batch_size.clone()),
            ("dropout", self.dropout.clone()),
            ("patience", self.patience.clone()),
            ("init-range", self.init_range.clone()),
            ("split-seed", self.split_seed.clone()),
            ("synthetic-sentences", self.synthetic_sentences.clone()),
            ("synthetic-test", self.synthetic_test.clone()),
            ("synthetic-categories", self.synthetic_categories.clone()),
            ("synthetic-polarities", self.synthetic_polarities.clone()),
            ("synthetic-seed", self.synthetic_seed.clone()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::with_data_root(std::env::var(DATA_ROOT_VAR).ok());
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_pairs(self.pairs())?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Prepare(args) => cmd_prepare(&args.resolve()?),
        Command::Train(args) => cmd_train(&args.resolve()?),
        Command::Eval { run, checkpoint, source } => {
            let cfg = run.resolve()?;
            let mode = run.mode.as_ref().map(|_| cfg.mode);
            cmd_eval(&cfg, &checkpoint, &source.source(), mode)
        }
        Command::Visualize { run, checkpoint, id, sentence, aspects, source } => {
            let cfg = run.resolve()?;
            let mut targets: Vec<Target> = id.into_iter().map(Target::Id).collect();
            if let (Some(text), Some(aspects)) = (sentence, aspects) {
                targets.push(Target::Raw { text, aspects });
            }
            let written = cmd_visualize(&cfg, &checkpoint, &targets, &source.source())?;
            Ok(written.iter().map(|p| format!("{}\n", p.display())).collect())
        }
        Command::Compare { histories, out } => cmd_compare(&histories, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
