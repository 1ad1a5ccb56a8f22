use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use custvec_cli::commands::{self, ClusterArgs, EmbedArgs, SimilarArgs, TrainArgs};
use custvec_cli::config::SplitName;
use custvec_cli::{exit_code, Run, ValidationError};
use custvec_core::network::ActivationKind;
use custvec_core::{ClusterMethod, EmbeddingMode, SimilarityMetric};

/// Customer vectors from a credit-risk classifier: prepare data, train,
/// embed, cluster and screen by similarity.
#[derive(Parser)]
#[command(name = "custvec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter, split, standardize and oversample the input CSV.
    Prepare {
        #[command(flatten)]
        common: Common,
    },
    /// Train the classifier on the prepared splits.
    Train {
        #[command(flatten)]
        common: Common,
        /// sigmoid, tanh, relu or leaky_relu.
        #[arg(long)]
        activation: Option<String>,
        /// Use a 30-unit embedding layer (for `embed --fig6`).
        #[arg(long)]
        fig6: bool,
    },
    /// Write embedding-layer vectors for a prepared split.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        split: Option<SplitName>,
        /// pre or post activation.
        #[arg(long)]
        mode: Option<String>,
        /// Compress a 30-unit embedding to 3 dimensions with a linear autoencoder.
        #[arg(long)]
        fig6: bool,
    },
    /// Cluster the vectors with each method and k and compare.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of kmeans_modified, som, gmm, mean_shift.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Comma-separated cluster counts.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Only cluster customers of this prepared split.
        #[arg(long, value_enum)]
        split: Option<SplitName>,
    },
    /// Nearest customers to one id, or screening against known defaulters.
    Similar {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        defaulters: bool,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        /// cosine or euclidean.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Consolidated text and JSON report of everything produced so far.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn invalid(e: custvec_core::Error) -> anyhow::Error {
    ValidationError(e.to_string()).into()
}

fn parse_mode(s: &str) -> anyhow::Result<EmbeddingMode> {
    match s {
        "pre" => Ok(EmbeddingMode::Pre),
        "post" => Ok(EmbeddingMode::Post),
        other => Err(ValidationError(format!("unknown embedding mode `{other}`")).into()),
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Prepare { common } => {
            let run = Run::new(&common.config, common.seed)?;
            let s = commands::prepare(&run)?;
            for (name, shape) in &s.splits {
                println!("{name:<10} {:>7} rows ({} positive)", shape.rows, shape.positives);
            }
            if s.smote.enabled {
                println!("smote added {} synthetic train rows", s.smote.synthetic_rows);
            }
        }
        Command::Train {
            common,
            activation,
            fig6,
        } => {
            let activation = activation
                .map(|a| ActivationKind::parse(&a).map_err(invalid))
                .transpose()?;
            let run = Run::new(&common.config, common.seed)?;
            let m = commands::train(&run, &TrainArgs { activation, fig6 })?;
            println!(
                "{} epochs (best {}), {} hidden activation",
                m.epochs_run, m.best_epoch, m.activation
            );
            println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "split", "accuracy", "precision", "recall", "f1");
            for (name, r) in [("validation", &m.validation), ("test", &m.test)] {
                println!(
                    "{name:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                    r.accuracy, r.precision, r.recall, r.f1
                );
            }
        }
        Command::Embed {
            common,
            split,
            mode,
            fig6,
        } => {
            let mode = mode.as_deref().map(parse_mode).transpose()?;
            let run = Run::new(&common.config, common.seed)?;
            let set = commands::embed(&run, &EmbedArgs { split, mode, fig6 })?;
            println!("wrote {} vectors of dimension {}", set.len(), set.dim());
        }
        Command::Cluster {
            common,
            methods,
            ks,
            split,
        } => {
            let methods = methods
                .map(|ms| {
                    ms.iter()
                        .map(|m| ClusterMethod::parse(m).map_err(invalid))
                        .collect::<anyhow::Result<Vec<_>>>()
                })
                .transpose()?;
            let run = Run::new(&common.config, common.seed)?;
            let s = commands::cluster(&run, &ClusterArgs { methods, ks, split })?;
            print!("{}", std::fs::read_to_string(run.out.join(commands::COMPARISON_TXT))?);
            for (m, k) in &s.knee {
                println!("knee k for {m}: {}", k.chosen_k);
            }
            if let Some(k) = s.mean_shift_k {
                println!("mean-shift modes: {k}");
            }
        }
        Command::Similar {
            common,
            id,
            k,
            defaulters,
            threshold,
            metric,
        } => {
            let metric = metric
                .map(|m| SimilarityMetric::parse(&m).map_err(invalid))
                .transpose()?;
            let run = Run::new(&common.config, common.seed)?;
            let csv = commands::similar(
                &run,
                &SimilarArgs {
                    id,
                    k,
                    defaulters,
                    threshold,
                    metric,
                },
            )?;
            print!("{csv}");
        }
        Command::Report { common } => {
            let run = Run::new(&common.config, common.seed)?;
            let r = commands::report(&run)?;
            print!("{}", commands::render(&r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
