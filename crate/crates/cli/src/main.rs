use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use graphair_cli::commands::{self, GRADCHECK_TOLERANCE};
use graphair_cli::config::RunConfig;
use graphair_core::analysis::TaylorOptions;
use graphair_core::models::Task;

#[derive(Parser)]
#[command(
    name = "graphair",
    version,
    about = "Graph neural networks with neighborhood aggregation and interaction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Node classification over one or more seeds.
    Train(ConfigArgs),
    /// Link prediction with a graph autoencoder.
    Linkpred(ConfigArgs),
    /// Finite-difference gradient check on the built-in 8-node graph.
    Gradcheck {
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sigmoid Taylor coefficients, remainder bound and cross-term fit.
    Taylor {
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        t_range: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Write an XOR cycle graph as a bundle.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Loss-weight grid search; the coarse grid unless --full.
    Grid {
        #[command(flatten)]
        config: ConfigArgs,
        /// Search all 15 values per weight instead of 4.
        #[arg(long, conflicts_with = "coarse")]
        full: bool,
        /// Search 0.1, 0.5, 1.0 and 1.5 per weight (the default).
        #[arg(long)]
        coarse: bool,
    },
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    k_layers: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    embedding: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    lambda1: Option<String>,
    #[arg(long)]
    lambda2: Option<String>,
    #[arg(long)]
    lambda3: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    normalize_features: Option<String>,
    #[arg(long)]
    val_frac: Option<String>,
    #[arg(long)]
    test_frac: Option<String>,
    #[arg(long)]
    split_seed: Option<String>,
    #[arg(long)]
    pos_weight: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    history: Option<String>,
    /// Any config key as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(self, task: Option<Task>) -> Result<RunConfig> {
        let named = [
            ("dataset", self.dataset),
            ("task", self.task),
            ("base", self.base),
            ("variant", self.variant),
            ("k_layers", self.k_layers),
            ("hidden", self.hidden),
            ("embedding", self.embedding),
            ("dropout", self.dropout),
            ("epochs", self.epochs),
            ("lr", self.lr),
            ("weight_decay", self.weight_decay),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("patience", self.patience),
            ("seeds", self.seeds),
            ("normalize_features", self.normalize_features),
            ("val_frac", self.val_frac),
            ("test_frac", self.test_frac),
            ("split_seed", self.split_seed),
            ("pos_weight", self.pos_weight),
            ("out", self.out),
            ("history", self.history),
        ];
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            overrides.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        overrides.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_owned(), v))));
        RunConfig::load(self.config.as_deref(), &overrides, task)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(args) => {
            let report = commands::run("train", &args.resolve(Some(Task::NodeClassification))?)?;
            print!("{}", commands::summary_text(&report));
        }
        Command::Linkpred(args) => {
            let report = commands::run("linkpred", &args.resolve(Some(Task::LinkPrediction))?)?;
            print!("{}", commands::summary_text(&report));
        }
        Command::Gradcheck { eps, seed } => {
            let lines = commands::gradcheck(eps, seed)?;
            let mut worst: f64 = 0.0;
            for l in &lines {
                println!(
                    "{:<9} {:<7} max rel err {:.3e}  ({} coords, worst {})",
                    l.base.to_string(),
                    l.variant.to_string(),
                    l.max_rel_error,
                    l.coordinates,
                    l.worst.as_deref().unwrap_or("-")
                );
                worst = worst.max(l.max_rel_error);
            }
            let ok = worst < GRADCHECK_TOLERANCE;
            println!(
                "{}: max rel err {worst:.3e} (tolerance {GRADCHECK_TOLERANCE:e})",
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Taylor {
            degree,
            t_max,
            samples,
            t_range,
            seed,
            json,
        } => {
            let report = commands::taylor(&TaylorOptions {
                degree,
                t_max,
                n_samples: samples,
                t_range,
                seed,
            })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", commands::taylor_text(&report));
            }
        }
        Command::Synth { n, seed, out } => {
            let g = commands::synth(n, seed, &out)?;
            println!("wrote {} nodes, {} edges to {}", g.n(), g.n_edges(), out.display());
        }
        Command::Grid { config, full, .. } => {
            let report = commands::grid(&config.resolve(None)?, full)?;
            for p in &report.points {
                let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.4}"));
                println!(
                    "lambda {:>3} {:>3} {:>3}  val {}  test {}",
                    p.lambdas[0],
                    p.lambdas[1],
                    p.lambdas[2],
                    fmt(p.val_mean),
                    fmt(p.test_mean)
                );
            }
            if let Some(b) = &report.best {
                println!(
                    "best: lambda {:?} val {} {:.4}",
                    b.lambdas,
                    report.metric,
                    b.val_mean.unwrap_or(f64::NAN)
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
