use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chillax::data::{self, read_jsonl};
use chillax::experiment::{self, ExperimentConfig, Hyperparameters};
use chillax::synth::SyntheticConfig;
use chillax::textdepth::{Lexicon, TextRecord};
use chillax::training::{load_checkpoint, save_checkpoint};
use chillax::{
    emit_report, evaluate, train, DepthModel, Error, Hierarchy, Method, Result, SgdrSchedule,
};

#[derive(Parser)]
#[command(
    name = "chillax",
    version,
    about = "Hierarchical classification from imprecise labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade a leaf-labeled dataset with a noise model.
    Degrade(DegradeArgs),
    /// Train a head and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a leaf-labeled validation set.
    Eval(EvalArgs),
    /// Degrade, train and evaluate every method over several seeds.
    Experiment(ExperimentArgs),
    /// Histogram of best-label depths for text records.
    Textdepth(TextdepthArgs),
    /// Print the learning rate of every step.
    ScheduleDump(ScheduleArgs),
    /// Write a synthetic hierarchy with Gaussian-cluster datasets.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Geometric,
    Poisson,
    Relabel,
    Benchmark,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Chillax,
    LeavesOnly,
    RandomLeaf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Chillax => Method::Chillax,
            MethodArg::LeavesOnly => Method::LeavesOnly,
            MethodArg::RandomLeaf => Method::RandomLeaf,
        }
    }
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long = "model", value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    shift: Option<usize>,
    #[arg(long)]
    inaccuracy: Option<f64>,
}

impl NoiseArgs {
    fn depth_model(&self) -> Result<Option<DepthModel>> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| {
                Error::InvalidParameters(format!("--{flag} is required for this model"))
            })
        };
        let shift = self.shift.unwrap_or(0);
        Ok(match self.model {
            None => None,
            Some(ModelKind::Geometric) => Some(DepthModel::Geometric {
                q: need(self.q, "q")?,
                shift,
            }),
            Some(ModelKind::Poisson) => Some(DepthModel::Poisson {
                lambda: need(self.lambda, "lambda")?,
                shift,
            }),
            Some(ModelKind::Relabel) => Some(DepthModel::Relabel {
                fraction: need(self.fraction, "fraction")?,
            }),
            Some(ModelKind::Benchmark) => Some(DepthModel::Benchmark),
        })
    }
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    lr_max: Option<f64>,
    #[arg(long)]
    lr_min: Option<f64>,
    #[arg(long)]
    t0: Option<usize>,
    #[arg(long)]
    warmup_steps: Option<usize>,
    #[arg(long)]
    warmup_lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
}

impl HyperArgs {
    fn apply(&self, hp: &mut Hyperparameters) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { hp.$field = v; })*
            };
        }
        set!(
            lr_max,
            lr_min,
            t0,
            warmup_steps,
            warmup_lr,
            batch_size,
            steps,
            momentum,
            weight_decay
        );
        if self.hidden.is_some() {
            hp.hidden = self.hidden;
        }
    }
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON-Lines file; histogram and manifest are written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum, default_value = "chillax")]
    method: MethodArg,
    /// JSON file with hyperparameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Extra top-k accuracies, comma separated.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    /// Report CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    val: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Methods to run; repeat or comma separate.
    #[arg(long = "method", value_enum, value_delimiter = ',')]
    methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', alias = "seed")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TextdepthArgs {
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Nabirds,
    Ilsvrc,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, default_value_t = 1)]
    steps_per_epoch: usize,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    branching: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    train_per_leaf: usize,
    #[arg(long, default_value_t = 100)]
    val_per_leaf: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    noise_dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for hierarchy.tsv, train.jsonl and val.jsonl.
    #[arg(long)]
    out: PathBuf,
}

fn load_hyper(config: Option<&PathBuf>) -> Result<Hyperparameters> {
    match config {
        None => Ok(Hyperparameters::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.clone(),
                line: source.line(),
                source,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degrade(a) => {
            let h = Hierarchy::load(&a.hierarchy)?;
            let examples = data::read_examples(&a.train)?;
            let model = a.noise.depth_model()?.unwrap_or(DepthModel::Benchmark);
            let manifest = experiment::run_degrade(
                &h,
                &examples,
                &model,
                a.noise.inaccuracy.unwrap_or(0.0),
                a.seed,
                &a.out,
            )?;
            println!(
                "wrote {} examples ({} confused, {} imprecise) to {}",
                manifest.examples,
                manifest.confused,
                manifest.imprecise,
                a.out.display()
            );
        }
        Command::Train(a) => {
            let h = Hierarchy::load(&a.hierarchy)?;
            let examples = data::read_examples(&a.train)?;
            let mut hp = load_hyper(a.config.as_ref())?;
            a.hyper.apply(&mut hp);
            let model = train(&h, &examples, a.method.into(), &hp.train_config(a.seed)?)?;
            save_checkpoint(&model, &h, &a.out)?;
        }
        Command::Eval(a) => {
            let h = Hierarchy::load(&a.hierarchy)?;
            let val = data::read_examples(&a.val)?;
            let model = load_checkpoint(&h, &a.checkpoint)?;
            let report = evaluate(&h, &model, &val, &a.ks)?;
            match &a.out {
                Some(path) => emit_report(&report, path)?,
                None => chillax::eval::write_report(&report, std::io::stdout().lock())?,
            }
        }
        Command::Experiment(a) => {
            let mut cfg = match &a.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            if a.hierarchy.is_some() || a.train.is_some() || a.val.is_some() {
                cfg.hierarchy = a.hierarchy.or(cfg.hierarchy);
                cfg.train = a.train.or(cfg.train);
                cfg.val = a.val.or(cfg.val);
            }
            if let Some(model) = a.noise.depth_model()? {
                cfg.noise = model;
            }
            if let Some(x) = a.noise.inaccuracy {
                cfg.inaccuracy = x;
            }
            if !a.methods.is_empty() {
                cfg.methods = a.methods.into_iter().map(Method::from).collect();
            }
            if !a.seeds.is_empty() {
                cfg.seeds = a.seeds;
            }
            if !a.ks.is_empty() {
                cfg.ks = a.ks;
            }
            a.hyper.apply(&mut cfg.hyper);
            if let Some(out) = a.out {
                cfg.out = out;
            }
            let results = experiment::run_experiment(&cfg)?;
            std::io::stdout()
                .write_all(&results.csv)
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
        }
        Command::Textdepth(a) => {
            let h = Hierarchy::load(&a.hierarchy)?;
            let lexicon = Lexicon::load(&h, &a.lexicon)?;
            let records: Vec<TextRecord> = read_jsonl(&a.records)?;
            experiment::run_textdepth(&h, &lexicon, &records, &a.out)?;
        }
        Command::ScheduleDump(a) => {
            let schedule = match a.preset {
                Some(Preset::Nabirds) => SgdrSchedule::nabirds(a.steps_per_epoch),
                Some(Preset::Ilsvrc) => SgdrSchedule::ilsvrc(a.steps_per_epoch),
                None => {
                    let mut hp = Hyperparameters::default();
                    a.hyper.apply(&mut hp);
                    hp.schedule()?
                }
            };
            match &a.out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    experiment::schedule_dump(&schedule, file)?;
                }
                None => experiment::schedule_dump(&schedule, std::io::stdout().lock())?,
            }
        }
        Command::Synth(a) => {
            let cfg = SyntheticConfig {
                branching: a.branching,
                train_per_leaf: a.train_per_leaf,
                val_per_leaf: a.val_per_leaf,
                sigma: a.sigma,
                margin: a.margin,
                noise_dims: a.noise_dims,
                seed: a.seed,
            };
            let d = cfg.generate()?;
            std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
                path: a.out.clone(),
                source: e,
            })?;
            let tsv = a.out.join("hierarchy.tsv");
            std::fs::write(&tsv, d.hierarchy.to_edge_list()).map_err(|e| Error::Io {
                path: tsv,
                source: e,
            })?;
            data::write_jsonl(a.out.join("train.jsonl"), &d.train)?;
            data::write_jsonl(a.out.join("val.jsonl"), &d.val)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
