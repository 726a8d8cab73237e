//! End-to-end orchestration: ingest → graph construction → community
//! detection → feature extraction → clustering → agreement → motif mining.
//!
//! Every artifact lands under one output directory. All stages are
//! deterministic, so two runs over the same inputs produce byte-identical
//! artifacts regardless of thread count; the run manifest's timestamp is the
//! single exception. Motif mining and entity profiles are keyed to the
//! saturated OPTICS assignment; HDBSCAN serves as the cross-check partner.

use crate::clustering::{
    compare_assignments, hdbscan, sweep_eps, write_agreement_json, write_assignment_csv,
    write_sweep_csv, AgreementReport, ClusterConfig, ClusterError, ReachabilityPlot,
};
use crate::community::{extract_communities, Community, CommunityError, LouvainConfig};
use crate::export::{dot, graphml, write_community_index};
use crate::features::{community_features, standardize, write_feature_matrix, FeatureVector};
use crate::graph::{build_graphs, index_transactions, merge_report, BuildConfig, MergeReport};
use crate::ingest::{parse_labels, parse_seeds, parse_transactions, IngestError, LabelDirectory};
use crate::patterns::{
    detect_passthrough, entity_profile, predominant_topology, EntityProfile, PassThroughReport,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{role} file not found at {path}: {hint}")]
    MissingInput {
        role: &'static str,
        path: String,
        hint: &'static str,
    },
    #[error("reading {stage}: {source}")]
    Ingest {
        stage: &'static str,
        #[source]
        source: IngestError,
    },
    #[error("community detection: {0}")]
    Community(#[from] CommunityError),
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("{stage}: {source}")]
    Io {
        stage: &'static str,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {stage}: {message}")]
    Artifact {
        stage: &'static str,
        message: String,
    },
    #[error("config {path} line {line}: {reason}")]
    Config {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// How far the pipeline runs before writing its manifest and returning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Build,
    Communities,
    Features,
    Cluster,
    Full,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Communities => "communities",
            Stage::Features => "features",
            Stage::Cluster => "cluster",
            Stage::Full => "full",
        }
    }
}

/// Run parameters. `out_dir` is excluded from the serialized manifest so an
/// output tree never depends on where it was written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub transactions: PathBuf,
    pub labels: Option<PathBuf>,
    pub seeds: PathBuf,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    /// Exploration budget in transaction hops per direction from each seed.
    pub n: usize,
    pub resolution: f64,
    pub threshold: f64,
    pub min_pts: usize,
    pub eps_sweep: Vec<f64>,
    /// Dominance threshold for pass-through detection.
    pub theta: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            transactions: PathBuf::from("transactions.jsonl"),
            labels: None,
            seeds: PathBuf::from("seeds.txt"),
            out_dir: PathBuf::from("out"),
            n: 2,
            resolution: 1.0,
            threshold: 1e-7,
            min_pts: 5,
            eps_sweep: ClusterConfig::<f64>::default().eps_sweep,
            theta: 0.8,
        }
    }
}

impl PipelineConfig {
    /// Applies `key = value` lines from a config file. Blank lines and `#`
    /// comments are skipped; unknown keys are errors. Recognized keys:
    /// transactions, labels, seeds, out_dir, n, resolution, threshold,
    /// min_pts, eps_sweep (comma-separated), theta.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            stage: "config file",
            source,
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let fail = |reason: String| PipelineError::Config {
                path: path.display().to_string(),
                line,
                reason,
            };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| fail("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let numeric = |v: &str| v.parse::<f64>().map_err(|e| fail(format!("{key}: {e}")));
            let integer = |v: &str| v.parse::<usize>().map_err(|e| fail(format!("{key}: {e}")));
            match key {
                "transactions" => self.transactions = PathBuf::from(value),
                "labels" => {
                    self.labels = match value {
                        "" | "none" => None,
                        other => Some(PathBuf::from(other)),
                    }
                }
                "seeds" => self.seeds = PathBuf::from(value),
                "out_dir" => self.out_dir = PathBuf::from(value),
                "n" => self.n = integer(value)?,
                "resolution" => self.resolution = numeric(value)?,
                "threshold" => self.threshold = numeric(value)?,
                "min_pts" => self.min_pts = integer(value)?,
                "eps_sweep" => {
                    self.eps_sweep = value
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| fail(format!("eps_sweep: {e}")))?
                }
                "theta" => self.theta = numeric(value)?,
                other => return Err(fail(format!("unknown key `{other}`"))),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |m: &str| Err(PipelineError::Invalid(m.into()));
        if self.n < 1 {
            return invalid("exploration depth n must be at least 1");
        }
        if self.resolution <= 0.0 {
            return invalid("resolution must be positive");
        }
        if self.threshold < 0.0 {
            return invalid("threshold must be non-negative");
        }
        if self.min_pts < 2 {
            return invalid("min_pts must be at least 2");
        }
        if self.eps_sweep.is_empty() {
            return invalid("eps_sweep must list at least one radius");
        }
        if !(self.theta > 0.5 && self.theta <= 1.0) {
            return invalid("theta must lie in (0.5, 1]");
        }
        Ok(())
    }
}

/// What the run produced; later-stage fields are `None` when the run was
/// stopped at an earlier stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub n_graphs: usize,
    pub merge: MergeReport,
    pub n_communities: Option<usize>,
    pub optics_clusters: Option<usize>,
    pub hdbscan_clusters: Option<usize>,
    pub saturation_eps: Option<f64>,
    pub ari: Option<f64>,
    pub n_passthrough: Option<usize>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    format_version: u32,
    tool_version: &'static str,
    generated_at_unix: u64,
    stage: &'static str,
    config: &'a PipelineConfig,
    input_digests: &'a BTreeMap<&'static str, String>,
    summary: &'a RunSummary,
}

#[derive(Serialize)]
struct PassThroughEntry {
    graph_id: usize,
    community_id: usize,
    #[serde(flatten)]
    report: PassThroughReport<f64>,
}

#[derive(Serialize)]
struct ClusterTopology {
    cluster: i32,
    size: usize,
    predominant_certificate: String,
    predominant_exact: bool,
    predominant_count: usize,
    exemplar_graph_id: usize,
    exemplar_community_id: usize,
    exemplar_dot: String,
    passthroughs: Vec<PassThroughEntry>,
}

#[derive(Serialize)]
struct MotifReport<'a> {
    theta: f64,
    clusters: Vec<ClusterTopology>,
    entity_profile: &'a EntityProfile,
}

fn open_input(role: &'static str, path: &Path, hint: &'static str) -> Result<File, PipelineError> {
    File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            PipelineError::MissingInput {
                role,
                path: path.display().to_string(),
                hint,
            }
        } else {
            PipelineError::Io {
                stage: role,
                source,
            }
        }
    })
}

fn io_stage(stage: &'static str) -> impl FnOnce(std::io::Error) -> PipelineError {
    move |source| PipelineError::Io { stage, source }
}

fn artifact_stage<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Artifact {
        stage,
        message: e.to_string(),
    }
}

fn write_json<T: Serialize>(
    value: &T,
    stage: &'static str,
    path: &Path,
) -> Result<(), PipelineError> {
    let mut writer = BufWriter::new(File::create(path).map_err(io_stage(stage))?);
    serde_json::to_writer_pretty(&mut writer, value).map_err(artifact_stage(stage))?;
    writer.write_all(b"\n").map_err(io_stage(stage))
}

fn file_digest(path: &Path, stage: &'static str) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(io_stage(stage))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_reachability_csv<W: std::io::Write>(
    plot: &ReachabilityPlot<f64>,
    coords: &[(usize, usize)],
    writer: W,
) -> csv::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record([
        "position",
        "graph_id",
        "community_id",
        "reachability",
        "core_distance",
    ])?;
    for (position, &point) in plot.ordering.iter().enumerate() {
        let (graph_id, community_id) = coords[point];
        csv_writer.write_record([
            position.to_string(),
            graph_id.to_string(),
            community_id.to_string(),
            plot.reachability[position].to_string(),
            plot.core_distance[point].to_string(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Runs the pipeline over the configured inputs, stopping after `stage`.
/// Artifacts land under `cfg.out_dir`; a `run_manifest.json` records the
/// configuration, input digests, and summary of whatever stage completed.
pub fn run_pipeline(cfg: &PipelineConfig, stage: Stage) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out.join("graphs")).map_err(io_stage("output directory"))?;
    std::fs::create_dir_all(out.join("communities")).map_err(io_stage("output directory"))?;

    // Ingest.
    let records = parse_transactions(BufReader::new(open_input(
        "transactions",
        &cfg.transactions,
        "point --transactions at a JSON Lines corpus or generate one with the synth command",
    )?))
    .map_err(|source| PipelineError::Ingest {
        stage: "transactions",
        source,
    })?;
    let labels = match &cfg.labels {
        Some(path) => parse_labels(open_input(
            "labels",
            path,
            "point --labels at an address,entity,category CSV or omit the flag",
        )?)
        .map_err(|source| PipelineError::Ingest {
            stage: "labels",
            source,
        })?,
        None => LabelDirectory::new(),
    };
    let seeds = parse_seeds(BufReader::new(open_input(
        "seeds",
        &cfg.seeds,
        "point --seeds at a one-address-per-line file produced by your seed selection",
    )?))
    .map_err(|source| PipelineError::Ingest {
        stage: "seeds",
        source,
    })?;
    if seeds.is_empty() {
        return Err(PipelineError::Invalid(format!(
            "seed file {} lists no addresses",
            cfg.seeds.display()
        )));
    }
    let mut input_digests = BTreeMap::new();
    input_digests.insert(
        "transactions",
        file_digest(&cfg.transactions, "transactions")?,
    );
    input_digests.insert("seeds", file_digest(&cfg.seeds, "seeds")?);
    if let Some(path) = &cfg.labels {
        input_digests.insert("labels", file_digest(path, "labels")?);
    }

    // Graph construction.
    let index = index_transactions(records);
    let graphs = build_graphs(&index, &seeds, &labels, &BuildConfig { n: cfg.n });
    let merge = merge_report(&graphs);
    let mut summary = RunSummary {
        n_graphs: graphs.len(),
        merge,
        n_communities: None,
        optics_clusters: None,
        hdbscan_clusters: None,
        saturation_eps: None,
        ari: None,
        n_passthrough: None,
    };
    write_json(
        &summary.merge,
        "merge report",
        &out.join("merge_report.json"),
    )?;
    for (i, graph) in graphs.iter().enumerate() {
        let path = out.join("graphs").join(format!("graph-{i:03}.graphml"));
        std::fs::write(path, graphml(graph)).map_err(io_stage("graph export"))?;
    }
    let finish = |summary: RunSummary| -> Result<RunSummary, PipelineError> {
        let manifest = RunManifest {
            format_version: 1,
            tool_version: env!("CARGO_PKG_VERSION"),
            generated_at_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs(),
            stage: stage.name(),
            config: cfg,
            input_digests: &input_digests,
            summary: &summary,
        };
        write_json(&manifest, "run manifest", &out.join("run_manifest.json"))?;
        Ok(summary)
    };
    if stage <= Stage::Build {
        return finish(summary);
    }

    // Community detection.
    let louvain = LouvainConfig {
        resolution: cfg.resolution,
        threshold: cfg.threshold,
    };
    let communities = extract_communities(&graphs, &louvain)?;
    summary.n_communities = Some(communities.len());
    let index_file = File::create(out.join("communities").join("index.csv"))
        .map_err(io_stage("community index"))?;
    write_community_index(&communities, BufWriter::new(index_file))
        .map_err(artifact_stage("community index"))?;
    if stage <= Stage::Communities {
        return finish(summary);
    }

    // Feature extraction.
    let vectors: Vec<FeatureVector<f64>> = communities.iter().map(community_features).collect();
    let (points, _standardization) = standardize(&vectors);
    let features_file = File::create(out.join("features.csv")).map_err(io_stage("features"))?;
    write_feature_matrix(
        &communities,
        &vectors,
        Some(&points),
        BufWriter::new(features_file),
    )
    .map_err(artifact_stage("features"))?;
    if stage <= Stage::Features {
        return finish(summary);
    }

    // Clustering: OPTICS ε-sweep plus HDBSCAN on the same standardized points.
    let cluster_cfg = ClusterConfig {
        min_pts: cfg.min_pts,
        eps_sweep: cfg.eps_sweep.clone(),
    };
    let coords: Vec<(usize, usize)> = communities
        .iter()
        .map(|c| (c.graph_id, c.community_id))
        .collect();
    let sweep = sweep_eps(&points, &cluster_cfg)?;
    let sweep_file = File::create(out.join("optics_sweep.csv")).map_err(io_stage("sweep table"))?;
    write_sweep_csv(&sweep, BufWriter::new(sweep_file)).map_err(artifact_stage("sweep table"))?;
    let reach_file =
        File::create(out.join("reachability.csv")).map_err(io_stage("reachability plot"))?;
    write_reachability_csv(&sweep.plot, &coords, BufWriter::new(reach_file))
        .map_err(artifact_stage("reachability plot"))?;
    let optics = match sweep.saturation_eps {
        Some(eps) => sweep
            .per_eps
            .iter()
            .find(|p| p.eps == eps)
            .expect("saturation eps comes from the sweep")
            .assignment
            .clone(),
        // No saturation within the sweep: fall back to the widest radius.
        None => sweep
            .per_eps
            .last()
            .expect("validated sweep is non-empty")
            .assignment
            .clone(),
    };
    let hdb = hdbscan(&points, cfg.min_pts);
    summary.optics_clusters = Some(optics.n_clusters());
    summary.hdbscan_clusters = Some(hdb.n_clusters());
    summary.saturation_eps = sweep.saturation_eps;
    let assignments_file =
        File::create(out.join("assignments.csv")).map_err(io_stage("assignments"))?;
    write_assignment_csv(&coords, &optics, &hdb, BufWriter::new(assignments_file))
        .map_err(artifact_stage("assignments"))?;
    let agreement: AgreementReport<f64> = compare_assignments(&optics, &hdb)?;
    summary.ari = Some(agreement.ari);
    let agreement_file =
        File::create(out.join("agreement.json")).map_err(io_stage("agreement report"))?;
    write_agreement_json(&agreement, BufWriter::new(agreement_file))
        .map_err(artifact_stage("agreement report"))?;
    if stage <= Stage::Cluster {
        return finish(summary);
    }

    // Motif mining on the OPTICS clusters.
    let mut members: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &label) in optics.labels().iter().enumerate() {
        members.entry(label).or_default().push(i);
    }
    let mut clusters = Vec::new();
    let mut n_passthrough = 0;
    for (&cluster, indices) in &members {
        let group: Vec<&Community> = indices.iter().map(|&i| &communities[i]).collect();
        let (signature, count, exemplar) =
            predominant_topology(&group).expect("cluster groups are non-empty");
        let exemplar_rel = format!("communities/exemplar-cluster-{cluster}.dot");
        let exemplar_name = format!(
            "cluster {cluster} exemplar g{}c{}",
            exemplar.graph_id, exemplar.community_id
        );
        std::fs::write(
            out.join(&exemplar_rel),
            dot(&exemplar.subgraph, &exemplar_name),
        )
        .map_err(io_stage("exemplar export"))?;
        let mut passthroughs = Vec::new();
        for &community in &group {
            if let Some(report) = detect_passthrough::<f64>(community, cfg.theta) {
                passthroughs.push(PassThroughEntry {
                    graph_id: community.graph_id,
                    community_id: community.community_id,
                    report,
                });
            }
        }
        n_passthrough += passthroughs.len();
        clusters.push(ClusterTopology {
            cluster,
            size: group.len(),
            predominant_certificate: signature.certificate,
            predominant_exact: signature.exact,
            predominant_count: count,
            exemplar_graph_id: exemplar.graph_id,
            exemplar_community_id: exemplar.community_id,
            exemplar_dot: exemplar_rel,
            passthroughs,
        });
    }
    summary.n_passthrough = Some(n_passthrough);
    let profile = entity_profile(&communities, &optics);
    let motifs = MotifReport {
        theta: cfg.theta,
        clusters,
        entity_profile: &profile,
    };
    write_json(&motifs, "motif report", &out.join("motif_report.json"))?;
    finish(summary)
}
