//! Batch front end for the summarization pipeline. Settings resolve in
//! three layers: built-in defaults, then an optional `--config` file of
//! `key = value` lines, then long-form flags. Errors print one line,
//! `error[<category>]: <message>`, and exit nonzero.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sumhis_core::pipeline::{
    cmd_analyze_distances, cmd_aspects, cmd_evaluate, cmd_oracle, cmd_summarize,
    cmd_sweep_threshold, cmd_train_cluster, cmd_train_rank, default_thresholds,
    parse_config_file, parse_variants, sweep_csv, ConfigOverrides, PipelineConfig,
};
use sumhis_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sumhis",
    version,
    about = "Extractive summarization by sentence ranking with hidden-structure filtering"
)]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: OverrideArgs,

    #[command(subcommand)]
    command: Command,
}

/// Long-form flags for every pipeline setting. Unset flags leave the
/// config-file value or the built-in default in place.
#[derive(Args)]
struct OverrideArgs {
    /// Sentences taken from the top of the ranking before filtering.
    #[arg(long, global = true, value_name = "N")]
    top_k: Option<usize>,

    /// Leading-cluster weight a sentence must exceed to survive filtering.
    #[arg(long, global = true, value_name = "T")]
    threshold: Option<f64>,

    /// Comma-separated ROUGE variants, e.g. 1,2,L.
    #[arg(long, global = true, value_name = "LIST")]
    rouge_variants: Option<String>,

    /// Master seed; stage seeds derive from it.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Dimension for hash-seeded embeddings.
    #[arg(long, global = true, value_name = "DIM")]
    embed_dim: Option<usize>,

    /// Word-vector file to embed with instead of hashing.
    #[arg(long, global = true, value_name = "FILE")]
    vectors: Option<PathBuf>,

    #[arg(long, global = true, value_name = "LR")]
    rank_learning_rate: Option<f64>,

    #[arg(long, global = true, value_name = "N")]
    rank_epochs: Option<usize>,

    /// Ranking objective: triplet_nll or binary_ce.
    #[arg(long, global = true, value_name = "KIND")]
    rank_loss: Option<String>,

    #[arg(long, global = true, value_name = "S")]
    rank_init_scale: Option<f64>,

    /// Rows of the ranking projection; defaults to the embedding dimension.
    #[arg(long, global = true, value_name = "D")]
    rank_projection_dim: Option<usize>,

    /// Number of hidden-structure clusters.
    #[arg(long, global = true, value_name = "K")]
    clusters: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    cluster_epochs: Option<usize>,

    #[arg(long, global = true, value_name = "LR")]
    cluster_learning_rate: Option<f64>,

    /// Cluster initialization: random or kmeans.
    #[arg(long, global = true, value_name = "KIND")]
    cluster_init: Option<String>,

    /// Weight of the orthogonality penalty on cluster rows.
    #[arg(long, global = true, value_name = "W")]
    ortho_weight: Option<f64>,

    /// N-gram order the oracle maximizes.
    #[arg(long, global = true, value_name = "N")]
    oracle_n: Option<usize>,

    /// Selected sentences may total this multiple of the gold length.
    #[arg(long, global = true, value_name = "F")]
    length_factor: Option<f64>,

    /// Oracle search: exhaustive, greedy, or auto.
    #[arg(long, global = true, value_name = "MODE")]
    oracle_mode: Option<String>,

    /// Sentence count up to which auto mode searches exhaustively.
    #[arg(long, global = true, value_name = "N")]
    auto_cutoff: Option<usize>,

    /// Words listed per cluster by the aspects command.
    #[arg(long, global = true, value_name = "M")]
    top_m: Option<usize>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Result<ConfigOverrides> {
        Ok(ConfigOverrides {
            top_k: self.top_k,
            threshold: self.threshold,
            rouge_variants: self
                .rouge_variants
                .as_deref()
                .map(parse_variants)
                .transpose()?,
            seed: self.seed,
            embed_dim: self.embed_dim,
            vectors: self.vectors.clone(),
            rank_learning_rate: self.rank_learning_rate,
            rank_epochs: self.rank_epochs,
            rank_loss: self.rank_loss.as_deref().map(str::parse).transpose()?,
            rank_init_scale: self.rank_init_scale,
            rank_projection_dim: self.rank_projection_dim,
            clusters: self.clusters,
            cluster_epochs: self.cluster_epochs,
            cluster_learning_rate: self.cluster_learning_rate,
            cluster_init: self.cluster_init.as_deref().map(str::parse).transpose()?,
            ortho_weight: self.ortho_weight,
            oracle_n: self.oracle_n,
            length_factor: self.length_factor,
            oracle_mode: self.oracle_mode.as_deref().map(str::parse).transpose()?,
            auto_cutoff: self.auto_cutoff,
            top_m: self.top_m,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Label a dataset with extractive-oracle sentence selections.
    Oracle {
        /// Dataset of {"id","text","summary"} lines.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Label file to write.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Train the sentence-ranking projection from oracle labels.
    TrainRank {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        /// Model file to write.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Train the hidden-structure cluster model on all corpus sentences.
    TrainCluster {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Model file to write.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Write extractive summaries; omit --cluster-model to skip filtering.
    Summarize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        rank_model: PathBuf,
        #[arg(long, value_name = "FILE")]
        cluster_model: Option<PathBuf>,
        /// Summary file to write.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Score summaries against the gold summaries of a dataset.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        summaries: PathBuf,
        /// Dataset whose summary fields are the references.
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
    },
    /// Report keep-rate TPR/FPR against oracle labels per threshold.
    Sweep {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        #[arg(long, value_name = "FILE")]
        rank_model: PathBuf,
        #[arg(long, value_name = "FILE")]
        cluster_model: PathBuf,
        /// Comma-separated threshold list; default 0.00,0.05,...,0.95.
        #[arg(long, value_name = "LIST")]
        thresholds: Option<String>,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Export triplet distance histograms (raw and kernel) as CSV.
    Analyze {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        #[arg(long, value_name = "FILE")]
        rank_model: PathBuf,
        /// CSV file to write.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// List each cluster's nearest vocabulary words.
    Aspects {
        #[arg(long, value_name = "FILE")]
        cluster_model: PathBuf,
        /// WORDVEC v1 file supplying the vocabulary.
        #[arg(long, value_name = "FILE")]
        word_vectors: PathBuf,
    },
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        parse_config_file(path)?.apply(&mut cfg)?;
    }
    cli.overrides.to_overrides()?.apply(&mut cfg)?;
    Ok(cfg)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| Error::config(format!("invalid threshold '{}'", item.trim())))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Oracle { input, output } => {
            let report = cmd_oracle(input, output, &cfg)?;
            warn_all(&report.warnings);
            for (id, reason) in &report.skipped {
                eprintln!("warning: skipped '{id}': {reason}");
            }
            for id in &report.fallbacks {
                eprintln!("warning: '{id}': no subset fit the length budget; kept best single sentence");
            }
            println!(
                "labeled {} documents ({} skipped) -> {}",
                report.labeled,
                report.skipped.len(),
                output.display()
            );
        }
        Command::TrainRank {
            input,
            labels,
            model,
        } => {
            let report = cmd_train_rank(input, labels, model, &cfg)?;
            warn_all(&report.warnings);
            for (id, reason) in &report.docs_skipped {
                eprintln!("warning: no triplets from '{id}': {reason}");
            }
            for (epoch, loss) in report.epoch_losses.iter().enumerate() {
                println!("epoch {} mean loss {loss}", epoch + 1);
            }
            println!(
                "trained on {} triplets -> {}",
                report.triplets,
                model.display()
            );
        }
        Command::TrainCluster { input, model } => {
            let report = cmd_train_cluster(input, model, &cfg)?;
            warn_all(&report.warnings);
            if report.zero_vectors_skipped > 0 {
                eprintln!(
                    "warning: {} zero sentence vectors excluded from training",
                    report.zero_vectors_skipped
                );
            }
            for (epoch, loss) in report.epoch_losses.iter().enumerate() {
                println!("epoch {} mean loss {loss}", epoch + 1);
            }
            println!(
                "trained on {} sentence vectors -> {}",
                report.vectors,
                model.display()
            );
        }
        Command::Summarize {
            input,
            rank_model,
            cluster_model,
            output,
        } => {
            let report = cmd_summarize(input, rank_model, cluster_model.as_deref(), output, &cfg)?;
            warn_all(&report.warnings);
            for id in &report.empty_docs {
                eprintln!("warning: '{id}' has no sentences; wrote an empty summary");
            }
            for id in &report.fallbacks {
                eprintln!("warning: '{id}': filter removed every sentence; kept the top-ranked one");
            }
            println!("wrote {} summaries -> {}", report.written, output.display());
        }
        Command::Evaluate { summaries, gold } => {
            let report = cmd_evaluate(summaries, gold, &cfg.rouge_variants)?;
            for id in &report.skipped {
                eprintln!("warning: '{id}' present on only one side; skipped");
            }
            println!("{}", report.table());
            println!("{}", report.machine_record());
        }
        Command::Sweep {
            input,
            labels,
            rank_model,
            cluster_model,
            thresholds,
            out,
        } => {
            let grid = match thresholds {
                Some(s) => parse_thresholds(s)?,
                None => default_thresholds(),
            };
            let rows =
                cmd_sweep_threshold(input, labels, rank_model, cluster_model, &grid, &cfg)?;
            let csv = sweep_csv(&rows);
            match out {
                Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e))?,
                None => print!("{csv}"),
            }
        }
        Command::Analyze {
            input,
            labels,
            rank_model,
            output,
        } => {
            let report = cmd_analyze_distances(input, labels, rank_model, output, &cfg)?;
            warn_all(&report.warnings);
            for (id, reason) in &report.docs_skipped {
                eprintln!("warning: no triplets from '{id}': {reason}");
            }
            println!(
                "analyzed {} triplets -> {}",
                report.triplets,
                output.display()
            );
        }
        Command::Aspects {
            cluster_model,
            word_vectors,
        } => {
            for line in cmd_aspects(cluster_model, word_vectors, cfg.top_m)? {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // A closed pipe must end the process, not panic the print macros.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
