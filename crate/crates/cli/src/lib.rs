//! Operator commands and the recommendation web service.

pub mod service;

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphrec_core::dataset::{build_graph, load_movielens, sample_dataset, RatingMode, SampleSpec};
use graphrec_core::eval::{
    bench_latency, compare_algorithms, format_report, sample_requests, split, KnnPredictor, PearsonPredictor,
    Predictor, SamHybridPredictor, SplitConfig,
};
use graphrec_core::persist;
use graphrec_core::{CfConfig, Graph, RatingMatrixView};

use crate::service::{AppState, Engine, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "graphrec", version, about = "Graph-based movie and widget recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a whole MovieLens directory into a graph file.
    Ingest(IngestArgs),
    /// Sample movies from a MovieLens directory into a graph file.
    Sample(SampleArgs),
    /// Hold out rating pairs from a graph file.
    Split(SplitArgs),
    /// Compare knn, pearson and sam_hybrid on one train/test split.
    Evaluate(EvaluateArgs),
    /// Time single predictions and count node visits.
    Bench(BenchArgs),
    /// Serve recommendations over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Linear,
    Binary,
}

impl From<ModeArg> for RatingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => RatingMode::Linear,
            ModeArg::Binary => RatingMode::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    Knn,
    Pearson,
    Sam,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Linear)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1032)]
    pub n_movies: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Linear)]
    pub mode: ModeArg,
    /// Leave keywords out of the graph.
    #[arg(long)]
    pub no_tags: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    #[arg(long)]
    pub train_out: PathBuf,
    /// Held-out pairs as `person<TAB>movie<TAB>weight`.
    #[arg(long)]
    pub test_out: PathBuf,
}

/// Where the graph comes from: a saved graph file, or a MovieLens directory
/// sampled with `--seed`.
#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct SourceArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Movies to sample from `--data`; ignored with `--graph`.
    #[arg(long, default_value_t = 1032)]
    pub n_movies: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Linear)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Neighborhood size for knn.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = PredictorKind::Sam)]
    pub predictor: PredictorKind,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub requests: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = PredictorKind::Sam)]
    pub predictor: PredictorKind,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
}

fn cf_config(k: usize) -> anyhow::Result<CfConfig> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    Ok(CfConfig {
        knn_k: k,
        ..CfConfig::default()
    })
}

/// Loads a graph file, or samples and builds one from MovieLens.
pub fn load_graph(args: &DataArgs) -> anyhow::Result<Graph> {
    if let Some(path) = &args.source.graph {
        return persist::load(path).with_context(|| format!("loading {}", path.display()));
    }
    let dir = args.source.data.as_ref().expect("clap enforces one source");
    let raw = load_movielens(dir).with_context(|| format!("reading MovieLens data from {}", dir.display()))?;
    let spec = SampleSpec {
        n_movies: args.n_movies,
        seed: args.seed,
        include_tags: true,
    };
    let sample = sample_dataset(&raw, &spec)?;
    log::info!("sampled {} (seed {})", sample.summary(), args.seed);
    Ok(build_graph(&sample, args.mode.into())?)
}

/// The TSV comparison report for one split of the chosen graph.
pub fn evaluate_report(args: &EvaluateArgs) -> anyhow::Result<String> {
    let graph = load_graph(&args.data)?;
    let config = SplitConfig {
        train_fraction: args.train_fraction,
        seed: args.data.seed,
    };
    let parts = split(&graph, &config)?;
    log::info!(
        "split train_interactions={} test_pairs={}",
        parts.train.interaction_count(),
        parts.test.len()
    );
    let rows = compare_algorithms(&parts.train, &parts.test, &cf_config(args.k)?)?;
    for row in &rows {
        let r = &row.report;
        log::info!(
            "result algorithm={} mae={:.4} rmse={:.4} mpe_percent={:.4} n_predictions={} n_undefined={} mae_defined={} n_graph_evidence={}",
            row.algorithm,
            r.mae,
            r.rmse,
            r.mpe,
            r.n_predictions,
            r.n_undefined,
            row.mae_defined.map_or("none".to_string(), |m| format!("{m:.4}")),
            row.n_graph
        );
    }
    Ok(format_report(&rows))
}

fn write_file(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let raw = load_movielens(&a.data)?;
            let graph = build_graph(&raw, a.mode.into())?;
            persist::save(&graph, &a.out)?;
            writeln!(stdout, "{}", raw.summary())?;
        }
        Command::Sample(a) => {
            let raw = load_movielens(&a.data)?;
            let spec = SampleSpec {
                n_movies: a.n_movies,
                seed: a.seed,
                include_tags: !a.no_tags,
            };
            let sample = sample_dataset(&raw, &spec)?;
            persist::save(&build_graph(&sample, a.mode.into())?, &a.out)?;
            writeln!(stdout, "{}", sample.summary())?;
        }
        Command::Split(a) => {
            let graph = persist::load(&a.graph)?;
            let parts = split(
                &graph,
                &SplitConfig {
                    train_fraction: a.train_fraction,
                    seed: a.seed,
                },
            )?;
            persist::save(&parts.train, &a.train_out)?;
            let mut tsv = String::from("person\tmovie\tweight\n");
            for t in &parts.test {
                let _ = writeln!(tsv, "{}\t{}\t{}", t.person, t.movie, t.truth);
            }
            write_file(&a.test_out, tsv.as_bytes())?;
            writeln!(
                stdout,
                "train_interactions={} test_pairs={}",
                parts.train.interaction_count(),
                parts.test.len()
            )?;
        }
        Command::Evaluate(a) => {
            let report = evaluate_report(&a)?;
            if let Some(out) = &a.out {
                write_file(out, report.as_bytes())?;
            }
            stdout.write_all(report.as_bytes())?;
        }
        Command::Bench(a) => {
            let graph = load_graph(&a.data)?;
            let view = RatingMatrixView::build(&graph);
            let config = cf_config(a.k)?;
            let requests = sample_requests(&graph, a.requests, a.data.seed)?;
            let (knn, pearson, sam);
            let predictor: &dyn Predictor = match a.predictor {
                PredictorKind::Knn => {
                    knn = KnnPredictor { view: &view, config };
                    &knn
                }
                PredictorKind::Pearson => {
                    pearson = PearsonPredictor { view: &view, config };
                    &pearson
                }
                PredictorKind::Sam => {
                    sam = SamHybridPredictor {
                        graph: &graph,
                        view: &view,
                        config,
                    };
                    &sam
                }
            };
            let r = bench_latency(predictor, &requests)?;
            if let Some(e) = &r.error {
                bail!("request {} of {} failed: {e}", r.completed + 1, r.requested);
            }
            writeln!(
                stdout,
                "predictor={} requests={} mean_latency_ms={:.4} mean_visits={:.1} max_visits={}",
                r.predictor, r.completed, r.mean_ms, r.mean_visits, r.max_visits
            )?;
        }
        Command::Serve(a) => {
            let graph = load_graph(&a.data)?;
            let state = Arc::new(AppState {
                engine: RwLock::new(Engine::new(graph)),
                config: ServiceConfig {
                    predictor: a.predictor,
                    cf: cf_config(a.k)?,
                },
            });
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(a.listen).await?;
                writeln!(stdout, "listening on {}", listener.local_addr()?)?;
                stdout.flush()?;
                axum::serve(listener, service::router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
