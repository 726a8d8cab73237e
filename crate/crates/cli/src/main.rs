//! `mixtopo`: reconstructs mixer activity graphs from transaction corpora,
//! decomposes them into communities, clusters the community topologies, and
//! mines recurring motifs. Stage subcommands run the same pipeline but stop
//! early, so partial artifacts are always consistent with a full run.

use clap::{Args, Parser, Subcommand};
use mixtopo_core::pipeline::{run_pipeline, PipelineConfig, PipelineError, RunSummary, Stage};
use mixtopo_core::synth::{generate, SynthSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mixtopo",
    version,
    about = "Mixer activity-graph topology analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic corpus with ground truth
    Synth(SynthArgs),
    /// Run the full pipeline: graphs, communities, features, clusters, motifs
    Run(PipelineArgs),
    /// Ingest inputs and construct seeded activity graphs
    Build(PipelineArgs),
    /// Run through community detection with boundary repair
    Detect(PipelineArgs),
    /// Run through topological feature extraction
    Features(PipelineArgs),
    /// Run through clustering and the agreement report
    Cluster(PipelineArgs),
    /// Alias for `run`: every stage plus the motif and entity reports
    Report(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for transactions.jsonl, labels.csv, seeds.txt, ground_truth.json
    #[arg(long, short = 'o', default_value = "synth-corpus")]
    out: PathBuf,
    /// Planted pass-through units
    #[arg(long, default_value_t = 30)]
    units: usize,
    /// Planted peeling chains
    #[arg(long, default_value_t = 6)]
    chains: usize,
    /// Transactions per peeling chain
    #[arg(long, default_value_t = 6)]
    chain_length: usize,
    /// Unconnected background transactions
    #[arg(long, default_value_t = 40)]
    noise: usize,
    /// Distinct exchange entities used for deposit/withdrawal labels
    #[arg(long, default_value_t = 4)]
    exchange_entities: usize,
    /// RNG seed; equal seeds give byte-identical corpora
    #[arg(long, default_value_t = 7)]
    rng_seed: u64,
    /// Smallest base amount in satoshis
    #[arg(long, default_value_t = 100_000)]
    amount_min: u64,
    /// Largest base amount in satoshis
    #[arg(long, default_value_t = 1_000_000)]
    amount_max: u64,
}

#[derive(Args)]
struct PipelineArgs {
    /// `key = value` config file, applied before any flag overrides
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON Lines transaction corpus
    #[arg(long)]
    transactions: Option<PathBuf>,
    /// Optional address,entity,category CSV
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Seed addresses, one per line
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Output directory for all artifacts
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Exploration depth in transaction hops per direction
    #[arg(long)]
    n: Option<usize>,
    /// Louvain resolution γ
    #[arg(long)]
    resolution: Option<f64>,
    /// Density threshold shared by OPTICS and HDBSCAN
    #[arg(long)]
    min_pts: Option<usize>,
    /// Comma-separated ε radii for the OPTICS sweep
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Dominance threshold for pass-through detection
    #[arg(long)]
    theta: Option<f64>,
    /// Worker threads (default: all cores); results are identical either way
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn into_config(self) -> Result<(PipelineConfig, Option<usize>), PipelineError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_config_file(path)?;
        }
        if let Some(v) = self.transactions {
            cfg.transactions = v;
        }
        if let Some(v) = self.labels {
            cfg.labels = Some(v);
        }
        if let Some(v) = self.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = self.out {
            cfg.out_dir = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = self.min_pts {
            cfg.min_pts = v;
        }
        if let Some(v) = self.eps {
            cfg.eps_sweep = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        Ok((cfg, self.threads))
    }
}

fn print_summary(summary: &RunSummary, out_dir: &std::path::Path) {
    println!(
        "graphs: {} ({} seeds; seeds per graph: {:?})",
        summary.n_graphs,
        summary.merge.total_seeds(),
        summary.merge.seeds_per_graph
    );
    if let Some(n) = summary.n_communities {
        println!("communities: {n}");
    }
    if let (Some(o), Some(h)) = (summary.optics_clusters, summary.hdbscan_clusters) {
        match summary.saturation_eps {
            Some(eps) => println!("optics clusters: {o} (sweep saturates at eps = {eps})"),
            None => println!("optics clusters: {o} (sweep did not saturate)"),
        }
        println!("hdbscan clusters: {h}");
    }
    if let Some(ari) = summary.ari {
        println!("adjusted rand index: {ari:.4}");
    }
    if let Some(n) = summary.n_passthrough {
        println!("pass-through matches: {n}");
    }
    println!("artifacts: {}", out_dir.display());
}

fn run_stage(args: PipelineArgs, stage: Stage) -> Result<(), String> {
    let (cfg, threads) = args.into_config().map_err(|e| e.to_string())?;
    if let Some(threads) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    let summary = run_pipeline(&cfg, stage).map_err(|e| e.to_string())?;
    print_summary(&summary, &cfg.out_dir);
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), String> {
    if args.amount_min < 1 || args.amount_min > args.amount_max {
        return Err("amount range must satisfy 1 <= min <= max".into());
    }
    let spec = SynthSpec {
        rng_seed: args.rng_seed,
        n_passthrough: args.units,
        n_peeling_chains: args.chains,
        peeling_length: args.chain_length,
        n_noise_txs: args.noise,
        n_exchange_entities: args.exchange_entities,
        amount_range: (args.amount_min, args.amount_max),
    };
    let corpus = generate(&spec);
    corpus
        .write_to_dir(&args.out)
        .map_err(|e| format!("writing corpus: {e}"))?;
    println!(
        "wrote {} transactions, {} labels, {} seeds to {}",
        corpus.transactions.len(),
        corpus.labels.len(),
        corpus.seeds.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Run(args) | Command::Report(args) => run_stage(args, Stage::Full),
        Command::Build(args) => run_stage(args, Stage::Build),
        Command::Detect(args) => run_stage(args, Stage::Communities),
        Command::Features(args) => run_stage(args, Stage::Features),
        Command::Cluster(args) => run_stage(args, Stage::Cluster),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
