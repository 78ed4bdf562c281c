//! `sql2text` — experiment driver for SQL-to-text generation.
//!
//! Each subcommand is a client of the pipeline service: with `--server-url`
//! it talks to a running instance, otherwise it spins the service up
//! in-process on an ephemeral port for the duration of the run.

mod commands;
mod config;
mod lockfile;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "sql2text", version, about = "SQL-to-text experiment pipeline")]
struct Cli {
    /// Use an already-running service instead of an in-process one.
    #[arg(long, global = true)]
    server_url: Option<String>,

    /// TOML file with default values for the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args, Default)]
struct CommonFlags {
    #[arg(long)]
    strategy: Option<String>,
    /// Demonstration count (0 for zero_shot).
    #[arg(long, short = 'n')]
    n: Option<usize>,
    /// Selection / sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Backend: mock | remote.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    concurrency: Option<usize>,
}

impl CommonFlags {
    fn into_config(self) -> RunConfig {
        RunConfig {
            strategy: self.strategy,
            n_demos: self.n,
            seed: self.seed,
            backend: self.backend,
            model: self.model,
            template: self.template,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            concurrency: self.concurrency,
            ..RunConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a demonstration pool and build its k-means selection index.
    Index {
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Input format: s2t-jsonl | text2sql-pairs.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        encoder_seed: Option<u64>,
        #[arg(long)]
        kmeans_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Select demonstrations and run generation over a test set.
    Generate {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Run the iterative generate/review/refine workflow over a dataset.
    Repurpose {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Score generation outputs against dataset references.
    Evaluate {
        /// Generations JSONL; repeat to merge several strategies.
        #[arg(long, required = true)]
        generations: Vec<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Re-render the table for an existing report file.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
    /// Sweep k and report silhouette scores.
    TuneK {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        encoder_seed: Option<u64>,
        #[arg(long)]
        kmeans_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Run the pipeline service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8077")]
        addr: SocketAddr,
    },
}

/// Exit codes: 0 success, 1 configuration error, 2 completed with recorded
/// partial failures.
#[tokio::main]
async fn main() {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(code) => std::process::exit(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            std::process::exit(1);
        }
    }
}

async fn run(cli: Cli) -> anyhow::Result<i32> {
    let file_config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };

    if let Command::Serve { addr } = &cli.command {
        tracing_subscriber::fmt::init();
        sql2text_service::serve(*addr).await?;
        return Ok(0);
    }
    if let Command::Report { report } = &cli.command {
        return commands::report(report);
    }

    let (client, _handle) = connect(cli.server_url.as_deref()).await?;

    match cli.command {
        Command::Index {
            pool,
            format,
            k,
            encoder_seed,
            kmeans_seed,
            out,
            common,
        } => {
            let flags = RunConfig {
                pool,
                format,
                k,
                encoder_seed,
                kmeans_seed,
                ..common.into_config()
            };
            let config = file_config.overridden_by(flags);
            commands::index(&client, &config, &out).await
        }
        Command::Generate {
            pool,
            test,
            index,
            out,
            common,
        } => {
            let flags = RunConfig {
                pool,
                test,
                index,
                ..common.into_config()
            };
            let config = file_config.overridden_by(flags);
            commands::generate(&client, &config, &out).await
        }
        Command::Repurpose {
            dataset,
            format,
            out,
            common,
        } => {
            let flags = RunConfig {
                dataset,
                format,
                ..common.into_config()
            };
            let config = file_config.overridden_by(flags);
            commands::repurpose(&client, &config, &out).await
        }
        Command::Evaluate {
            generations,
            dataset,
            alpha,
            out,
            common,
        } => {
            let flags = RunConfig {
                dataset,
                alpha,
                ..common.into_config()
            };
            let config = file_config.overridden_by(flags);
            commands::evaluate(&client, &config, &generations, &out).await
        }
        Command::TuneK {
            pool,
            k_min,
            k_max,
            encoder_seed,
            kmeans_seed,
            out,
            common,
        } => {
            let flags = RunConfig {
                pool,
                k_min,
                k_max,
                encoder_seed,
                kmeans_seed,
                ..common.into_config()
            };
            let config = file_config.overridden_by(flags);
            commands::tune_k(&client, &config, &out).await
        }
        Command::Report { .. } | Command::Serve { .. } => unreachable!("handled above"),
    }
}

async fn connect(
    server_url: Option<&str>,
) -> anyhow::Result<(
    sql2text_client::Sql2TextClient,
    Option<tokio::task::JoinHandle<()>>,
)> {
    match server_url {
        Some(url) => Ok((sql2text_client::Sql2TextClient::new(url), None)),
        None => {
            let (addr, handle) = sql2text_service::spawn("127.0.0.1:0".parse().unwrap()).await?;
            Ok((
                sql2text_client::Sql2TextClient::new(format!("http://{addr}")),
                Some(handle),
            ))
        }
    }
}
