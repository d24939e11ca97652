//! Ingestion, configuration, end-to-end analysis and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{rescale_opinions, BuildStats, GraphError, NodeIx, OpinionGraph, Perspective};
use crate::intervals::{
    interaction_matrix, interval_offsets_csv, interval_rates_csv, interval_rates_full_csv, mean_matrix,
    null_interaction_matrix, per_interval_offsets, per_interval_rates, residual_matrix, IntervalError,
    IntervalOffsets, IntervalPartition, IntervalRateRow, InteractionMatrix,
};
use crate::metrics::{
    csv_field, population_rates, profiles, profiles_csv, summarize_rates, MetricsError, NeighborProfile,
    RateReport, RateSummary, TrialProfiles,
};
use crate::null_models::{run_trials, NullModel, NullModelError, NullTrial, DEFAULT_RETRY_CAP};
use crate::numeric::{fmt_float, median_iqr};
use crate::stats::{distance_decay, two_sample_test, DecayClass, DecayDiagnostic, TestResult};
use crate::topology::{topology_csv, topology_report, TopologyReport};

pub const THREADS_ENV: &str = "BC_HOMOPHILY_THREADS";
pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Schema { path: PathBuf, expected: String, found: String },
    #[error("{path}, line {line}: node `{node}` has no opinion")]
    MissingOpinion { path: PathBuf, line: u64, node: String },
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("graph has no edges")]
    NoEdges,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    NullModel(#[from] NullModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Which null models a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSelection {
    Randomized,
    RangeBased,
    Both,
}

impl NullSelection {
    pub fn models(self) -> Vec<NullModel> {
        match self {
            NullSelection::Randomized => vec![NullModel::Randomized],
            NullSelection::RangeBased => vec![NullModel::RangeBased],
            NullSelection::Both => NullModel::ALL.to_vec(),
        }
    }

    /// Model behind the unsuffixed interval tables.
    pub fn primary(self) -> NullModel {
        match self {
            NullSelection::Randomized => NullModel::Randomized,
            _ => NullModel::RangeBased,
        }
    }
}

impl FromStr for NullSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "randomized" => Ok(NullSelection::Randomized),
            "range_based" | "range" => Ok(NullSelection::RangeBased),
            "both" => Ok(NullSelection::Both),
            other => Err(format!("expected randomized, range_based or both, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub perspective: Perspective,
    pub trials: usize,
    pub master_seed: u64,
    pub partition_k: usize,
    pub decay_bin_width: f64,
    pub null_model: NullSelection,
    pub min_neighbors_r3: usize,
    pub retry_cap: usize,
    /// Katz attenuation; `None` uses `0.9 / lambda_max`.
    pub katz_attenuation: Option<f64>,
    /// Source interval mapped linearly onto `[0, 1]` at load time.
    pub rescale: Option<(f64, f64)>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            perspective: Perspective::Follower,
            trials: 20,
            master_seed: 0,
            partition_k: 5,
            decay_bin_width: 0.1,
            null_model: NullSelection::Both,
            min_neighbors_r3: 2,
            retry_cap: DEFAULT_RETRY_CAP,
            katz_attenuation: None,
            rescale: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| PipelineError::ConfigValue { key: key.to_string(), message: e.to_string() })
}

impl AnalysisConfig {
    /// Sets one key from its textual form. Used for both config files and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let key = key.trim();
        match key {
            "perspective" => self.perspective = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" | "master_seed" => self.master_seed = parse_value(key, value)?,
            "partition_k" | "intervals" => self.partition_k = parse_value(key, value)?,
            "decay_bin_width" => self.decay_bin_width = parse_value(key, value)?,
            "null_model" => self.null_model = parse_value(key, value)?,
            "min_neighbors_r3" => self.min_neighbors_r3 = parse_value(key, value)?,
            "retry_cap" => self.retry_cap = parse_value(key, value)?,
            "katz_attenuation" => {
                self.katz_attenuation = match value.trim() {
                    "" | "auto" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "rescale" => {
                self.rescale = match value.trim() {
                    "" | "none" => None,
                    v => {
                        let (lo, hi) = v.split_once(',').ok_or_else(|| PipelineError::ConfigValue {
                            key: key.to_string(),
                            message: "expected `lo,hi`".to_string(),
                        })?;
                        Some((parse_value(key, lo)?, parse_value(key, hi)?))
                    }
                }
            }
            other => return Err(PipelineError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Flat `key = value` lines; `#`/`;` comments and `[section]` headers are ignored.
    pub fn from_ini(text: &str) -> Result<AnalysisConfig, PipelineError> {
        let mut cfg = AnalysisConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| PipelineError::ConfigSyntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<AnalysisConfig, PipelineError> {
        AnalysisConfig::from_ini(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |key: &str, message: &str| {
            Err(PipelineError::ConfigValue { key: key.to_string(), message: message.to_string() })
        };
        if self.trials == 0 {
            return bad("trials", "must be at least 1");
        }
        if !(self.decay_bin_width > 0.0 && self.decay_bin_width <= 1.0) {
            return bad("decay_bin_width", "must lie in (0, 1]");
        }
        if self.partition_k < 2 {
            return bad("partition_k", "must be at least 2");
        }
        if self.min_neighbors_r3 != 2 {
            return bad("min_neighbors_r3", "is fixed at 2");
        }
        if self.retry_cap == 0 {
            return bad("retry_cap", "must be at least 1");
        }
        if let Some(a) = self.katz_attenuation {
            if !(a > 0.0 && a.is_finite()) {
                return bad("katz_attenuation", "must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

impl InputDigest {
    fn of(role: &str, path: &Path, data: &[u8]) -> InputDigest {
        InputDigest {
            role: role.to_string(),
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: OpinionGraph,
    pub inputs: Vec<InputDigest>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(io_err(path))
}

/// Parses a two-column CSV with the given header into `(line, a, b)` rows.
fn read_pairs(path: &Path, data: &[u8], header: [&str; 2]) -> Result<Vec<(u64, String, String)>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
    let found = rdr
        .headers()
        .map_err(|e| PipelineError::Parse { path: path.to_path_buf(), line: 1, message: e.to_string() })?
        .clone();
    if found.len() != 2 || found.get(0) != Some(header[0]) || found.get(1) != Some(header[1]) {
        return Err(PipelineError::Schema {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| PipelineError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(PipelineError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        out.push((line, rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// Reads `src,dst` edges and `node,opinion` opinions, optionally rescaling
/// opinions from `rescale` onto `[0, 1]` first.
pub fn load_dataset(
    edge_path: &Path,
    opinion_path: &Path,
    rescale: Option<(f64, f64)>,
) -> Result<Dataset, PipelineError> {
    let edge_bytes = read_bytes(edge_path)?;
    let opinion_bytes = read_bytes(opinion_path)?;

    let mut opinions = Vec::new();
    for (line, node, value) in read_pairs(opinion_path, &opinion_bytes, ["node", "opinion"])? {
        let x: f64 = value.parse().map_err(|_| PipelineError::Parse {
            path: opinion_path.to_path_buf(),
            line,
            message: format!("opinion `{value}` is not a number"),
        })?;
        opinions.push((node, x));
    }
    let opinions = match rescale {
        Some((lo, hi)) => rescale_opinions(&opinions, lo, hi)?,
        None => opinions,
    };

    let known: BTreeSet<&str> = opinions.iter().map(|(n, _)| n.as_str()).collect();
    let rows = read_pairs(edge_path, &edge_bytes, ["src", "dst"])?;
    for (line, s, d) in &rows {
        for node in [s, d] {
            if !known.contains(node.as_str()) {
                return Err(PipelineError::MissingOpinion {
                    path: edge_path.to_path_buf(),
                    line: *line,
                    node: node.clone(),
                });
            }
        }
    }
    let edges: Vec<(String, String)> = rows.into_iter().map(|(_, s, d)| (s, d)).collect();
    let graph = OpinionGraph::build(&edges, opinions)?;
    let stats = graph.build_stats();
    log::info!(
        "loaded {} nodes, {} edges ({} duplicates collapsed, {} self-loops dropped, {} opinions clamped)",
        graph.node_count(),
        graph.edge_count(),
        stats.duplicate_edges,
        stats.self_loops,
        stats.clamped_opinions
    );
    Ok(Dataset {
        graph,
        inputs: vec![
            InputDigest::of("edges", edge_path, &edge_bytes),
            InputDigest::of("opinions", opinion_path, &opinion_bytes),
        ],
    })
}

/// Fixed-width histogram over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new<I: IntoIterator<Item = f64>>(values: I, lo: f64, hi: f64, bins: usize) -> Histogram {
        let mut counts = vec![0u64; bins];
        let w = (hi - lo) / bins as f64;
        for v in values {
            let k = (((v - lo) / w).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn edge(&self, j: usize) -> f64 {
        self.lo + (self.hi - self.lo) * j as f64 / self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub nodes: usize,
    pub edges: usize,
    pub build: BuildStats,
    /// Nodes with at least one incident edge.
    pub active_nodes: usize,
    pub followers: usize,
    pub leaders: usize,
    pub followers_min2: usize,
    pub leaders_min2: usize,
}

/// Median and interquartile range of the confidence range per perspective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSummary {
    pub perspective: Perspective,
    pub egos: usize,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricHistograms {
    pub opinion: Histogram,
    pub gap: Histogram,
    pub range: Histogram,
    pub mean_dev: Histogram,
    pub max_dev: Histogram,
}

impl MetricHistograms {
    fn of(profiles: &[NeighborProfile], opinions: &[f64]) -> MetricHistograms {
        MetricHistograms {
            opinion: Histogram::new(opinions.iter().copied(), 0.0, 1.0, HISTOGRAM_BINS),
            gap: Histogram::new(profiles.iter().map(|p| p.gap), -1.0, 1.0, HISTOGRAM_BINS),
            range: Histogram::new(profiles.iter().filter(|p| p.has_range()).map(|p| p.range), 0.0, 1.0, HISTOGRAM_BINS),
            mean_dev: Histogram::new(profiles.iter().map(|p| p.mean_dev), 0.0, 1.0, HISTOGRAM_BINS),
            max_dev: Histogram::new(profiles.iter().map(|p| p.max_dev), 0.0, 1.0, HISTOGRAM_BINS),
        }
    }
}

/// Empirical-versus-null comparison of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub metric: String,
    pub model: NullModel,
    pub result: Option<TestResult>,
    pub skipped: Option<String>,
}

/// Everything computed against one null model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSection {
    pub model: NullModel,
    /// Egos dropped from every rate because some trial skipped them.
    pub excluded_egos: Vec<String>,
    pub rates: Vec<RateReport>,
    pub rate_summary: RateSummary,
    /// Pooled over all trials; opinions' histogram is unused and left empty.
    pub histograms: MetricHistograms,
    pub tests: Vec<MetricTest>,
    pub null_matrices: Vec<InteractionMatrix>,
    pub null_mean_matrix: InteractionMatrix,
    pub residual_matrix: InteractionMatrix,
    pub interval_rates: Vec<IntervalRateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub node: String,
    pub diagnostic: DecayDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub bin_width: f64,
    pub egos: usize,
    pub dd: usize,
    pub ndd: usize,
    pub undefined: usize,
    pub mean_pearson_r: Option<f64>,
    pub rows: Vec<DecayRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub config: AnalysisConfig,
    /// Short statements of the conventions behind each section.
    pub methods: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub dataset: DatasetSummary,
    pub range_summary: Vec<RangeSummary>,
    pub node_labels: Vec<String>,
    pub profiles: Vec<NeighborProfile>,
    pub histograms: MetricHistograms,
    pub nulls: Vec<NullSection>,
    pub interaction_matrix: InteractionMatrix,
    pub interval_offsets: Vec<IntervalOffsets>,
    pub decay: DecaySummary,
    pub topology: Option<TopologyReport>,
    /// Section name to reason, for analyses that could not be produced.
    pub skipped: BTreeMap<String, String>,
}

impl AnalysisReport {
    pub fn null(&self, model: NullModel) -> Option<&NullSection> {
        self.nulls.iter().find(|n| n.model == model)
    }

    pub fn to_json(&self) -> Result<String, PipelineError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<AnalysisReport, PipelineError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn dataset_summary(g: &OpinionGraph) -> DatasetSummary {
    DatasetSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        build: g.build_stats(),
        active_nodes: g.active_nodes().len(),
        followers: g.eligible_users(Perspective::Follower, 1).len(),
        leaders: g.eligible_users(Perspective::Leader, 1).len(),
        followers_min2: g.eligible_users(Perspective::Follower, 2).len(),
        leaders_min2: g.eligible_users(Perspective::Leader, 2).len(),
    }
}

fn range_summary(g: &OpinionGraph) -> Vec<RangeSummary> {
    Perspective::ALL
        .iter()
        .map(|&p| {
            let ranges: Vec<f64> = profiles(g, p).iter().filter(|x| x.has_range()).map(|x| x.range).collect();
            let mi = median_iqr(&ranges);
            RangeSummary { perspective: p, egos: ranges.len(), median: mi.map(|m| m.0), iqr: mi.map(|m| m.1) }
        })
        .collect()
}

fn metric_test(metric: &str, model: NullModel, a: &[f64], b: &[f64]) -> MetricTest {
    let (result, skipped) = match two_sample_test(a, b) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MetricTest { metric: metric.to_string(), model, result, skipped }
}

/// Empirical-versus-null tests; the empirical sample comes first, so a
/// negative Cohen's d means the empirical values are smaller.
pub fn null_tests(empirical: &[NeighborProfile], trials: &[TrialProfiles], model: NullModel) -> Vec<MetricTest> {
    let pooled: Vec<&NeighborProfile> = trials.iter().flat_map(|t| &t.profiles).collect();
    let field = |f: fn(&NeighborProfile) -> f64, range_only: bool| {
        let a: Vec<f64> = empirical.iter().filter(|p| !range_only || p.has_range()).map(f).collect();
        let b: Vec<f64> = pooled.iter().filter(|p| !range_only || p.has_range()).map(|p| f(p)).collect();
        (a, b)
    };
    let mut out = Vec::new();
    for (name, f, range_only) in [
        ("range", (|p: &NeighborProfile| p.range) as fn(&NeighborProfile) -> f64, true),
        ("mean_dev", |p: &NeighborProfile| p.mean_dev, false),
        ("max_dev", |p: &NeighborProfile| p.max_dev, false),
    ] {
        let (a, b) = field(f, range_only);
        out.push(metric_test(name, model, &a, &b));
    }
    out
}

fn restrict(profiles: &[NeighborProfile], excluded: &BTreeSet<NodeIx>) -> Vec<NeighborProfile> {
    profiles.iter().filter(|p| !excluded.contains(&p.ego)).cloned().collect()
}

fn null_section(
    g: &OpinionGraph,
    config: &AnalysisConfig,
    empirical: &[NeighborProfile],
    empirical_matrix: &InteractionMatrix,
    partition: &IntervalPartition,
    model: NullModel,
) -> Result<NullSection, PipelineError> {
    let trials = run_trials(g, config.perspective, model, config.trials, config.master_seed, config.retry_cap)?;
    section_from_trials(g, empirical, empirical_matrix, partition, model, &trials)
}

pub fn section_from_trials(
    g: &OpinionGraph,
    empirical: &[NeighborProfile],
    empirical_matrix: &InteractionMatrix,
    partition: &IntervalPartition,
    model: NullModel,
    trials: &[NullTrial],
) -> Result<NullSection, PipelineError> {
    let excluded: BTreeSet<NodeIx> = trials.iter().flat_map(|t| t.skipped.iter().copied()).collect();
    if !excluded.is_empty() {
        log::warn!("{model}: {} egos excluded after skips", excluded.len());
    }
    let emp = restrict(empirical, &excluded);
    let trial_profiles: Vec<TrialProfiles> = trials
        .iter()
        .map(|t| {
            let tp = t.profiles(g);
            TrialProfiles { profiles: restrict(&tp.profiles, &excluded), ..tp }
        })
        .collect();
    let rates = trial_profiles
        .iter()
        .map(|tp| population_rates(&emp, tp))
        .collect::<Result<Vec<_>, _>>()?;
    let rate_summary = summarize_rates(&rates);
    let pooled: Vec<NeighborProfile> = trial_profiles.iter().flat_map(|t| t.profiles.iter().cloned()).collect();
    let mut histograms = MetricHistograms::of(&pooled, &[]);
    histograms.opinion.counts.iter_mut().for_each(|c| *c = 0);
    let null_matrices = trials
        .iter()
        .map(|t| null_interaction_matrix(g, t, partition))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NullSection {
        model,
        excluded_egos: excluded.iter().map(|&i| g.label(i).to_string()).collect(),
        tests: null_tests(&emp, &trial_profiles, model),
        interval_rates: per_interval_rates(&emp, &trial_profiles, partition)?,
        null_mean_matrix: mean_matrix(&null_matrices)?,
        residual_matrix: residual_matrix(empirical_matrix, &null_matrices)?,
        null_matrices,
        rates,
        rate_summary,
        histograms,
    })
}

fn decay_summary(g: &OpinionGraph, profiles: &[NeighborProfile], p: Perspective, w: f64) -> DecaySummary {
    let rows: Vec<DecayRow> = profiles
        .iter()
        .filter(|x| x.has_range())
        .filter_map(|x| {
            let nb: Vec<f64> = g.neighbor_slice(x.ego, p).iter().map(|&j| g.opinion(j)).collect();
            distance_decay(x.ego, x.opinion, &nb, w)
                .ok()
                .map(|diagnostic| DecayRow { node: g.label(x.ego).to_string(), diagnostic })
        })
        .collect();
    let count = |c: DecayClass| rows.iter().filter(|r| r.diagnostic.classification == c).count();
    let rs: Vec<f64> = rows.iter().filter_map(|r| r.diagnostic.pearson_r).collect();
    DecaySummary {
        bin_width: w,
        egos: rows.len(),
        dd: count(DecayClass::Dd),
        ndd: count(DecayClass::Ndd),
        undefined: count(DecayClass::Undefined),
        mean_pearson_r: crate::numeric::mean(&rs),
        rows,
    }
}

fn methods() -> BTreeMap<String, String> {
    [
        ("t_test", "Welch two-sided test, empirical egos against all null trials pooled into one sample"),
        ("cohens_d", "(mean empirical - mean null) / pooled sd"),
        ("rates", "R1/R2 over egos with >= 1 neighbor, R3 over egos with >= 2; differences within 1e-12 are ties and never satisfy R1/R2"),
        ("skipped_egos", "egos skipped in any trial of a model are excluded from all of that model's rates and tests"),
        ("intervals", "interval 1 is [0,1/k], interval j > 1 is ((j-1)/k, j/k]; egos and edges use the same rule"),
        ("null_matrix", "each synthetic neighbor counts as one edge, oriented by perspective; residual = empirical - mean null"),
        ("decay", "|x_ego - x_j| binned by width w, last bin closed; Pearson r over all bins including zeros"),
        ("histograms", "50 equal bins over [0,1] (gap: [-1,1]); last bin closed"),
        ("clustering", crate::topology::CLUSTERING_FORMULA),
        ("katz", "x = a A x + 1 on the symmetrized graph, a = 0.9 / lambda_max unless configured"),
        ("eigenvector", "largest weakly connected component of the symmetrized graph, max-normalized"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Full analysis of `g` under `config`.
pub fn run_analysis(
    g: &OpinionGraph,
    config: &AnalysisConfig,
    inputs: Vec<InputDigest>,
) -> Result<AnalysisReport, PipelineError> {
    config.validate()?;
    if g.edge_count() == 0 {
        return Err(PipelineError::NoEdges);
    }
    let p = config.perspective;
    let partition = IntervalPartition::new(config.partition_k)?;
    let empirical = profiles(g, p);
    let matrix = interaction_matrix(g, &partition)?;
    let nulls = config
        .null_model
        .models()
        .into_iter()
        .map(|m| null_section(g, config, &empirical, &matrix, &partition, m))
        .collect::<Result<Vec<_>, _>>()?;

    let mut skipped = BTreeMap::new();
    let topology = match topology_report(g, &partition, config.katz_attenuation) {
        Ok(t) => Some(t),
        Err(e) => {
            log::warn!("topology skipped: {e}");
            skipped.insert("topology".to_string(), e.to_string());
            None
        }
    };

    Ok(AnalysisReport {
        tool: ToolInfo { name: env!("CARGO_PKG_NAME").to_string(), version: env!("CARGO_PKG_VERSION").to_string() },
        config: config.clone(),
        methods: methods(),
        inputs,
        dataset: dataset_summary(g),
        range_summary: range_summary(g),
        node_labels: g.labels().to_vec(),
        histograms: MetricHistograms::of(&empirical, g.opinions()),
        decay: decay_summary(g, &empirical, p, config.decay_bin_width),
        interval_offsets: per_interval_offsets(&empirical, &partition),
        interaction_matrix: matrix,
        profiles: empirical,
        nulls,
        topology,
        skipped,
    })
}

fn hist_rows(out: &mut String, prefix: &str, h: &Histogram) {
    for (j, c) in h.counts.iter().enumerate() {
        out.push_str(&format!("{prefix}{},{},{}\n", fmt_float(h.edge(j)), fmt_float(h.edge(j + 1)), c));
    }
}

fn single_hist_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    hist_rows(&mut out, "", h);
    out
}

/// Every CSV/JSON table derived from a report, keyed by file name.
pub fn render_tables(report: &AnalysisReport) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut t = BTreeMap::new();
    t.insert("profiles.csv".into(), profiles_csv(&report.node_labels, &report.profiles));
    t.insert("fig2_opinion_hist.csv".into(), single_hist_csv(&report.histograms.opinion));
    t.insert("fig2_gap_hist.csv".into(), single_hist_csv(&report.histograms.gap));

    let mut range = String::from("source,bin_lo,bin_hi,count\n");
    hist_rows(&mut range, "empirical,", &report.histograms.range);
    let mut dev = String::from("metric,source,bin_lo,bin_hi,count\n");
    hist_rows(&mut dev, "mean_dev,empirical,", &report.histograms.mean_dev);
    hist_rows(&mut dev, "max_dev,empirical,", &report.histograms.max_dev);
    let mut rates = String::from("model,trial,trial_seed,R1,R2,R3,R3_null,n_r1r2,n_r3\n");
    let mut tests = String::from("metric,model,n_empirical,n_null,mean_empirical,mean_null,t,df,p_value,cohens_d,note\n");
    for n in &report.nulls {
        let m = n.model.as_str();
        hist_rows(&mut range, &format!("{m},"), &n.histograms.range);
        hist_rows(&mut dev, &format!("mean_dev,{m},"), &n.histograms.mean_dev);
        hist_rows(&mut dev, &format!("max_dev,{m},"), &n.histograms.max_dev);
        for (i, r) in n.rates.iter().enumerate() {
            rates.push_str(&format!(
                "{m},{i},{},{},{},{},{},{},{}\n",
                r.trial_seed,
                r.r1,
                r.r2,
                r.r3.map(|v| v.to_string()).unwrap_or_default(),
                r.r3_null.map(|v| v.to_string()).unwrap_or_default(),
                r.n_r1r2,
                r.n_r3
            ));
        }
        for test in &n.tests {
            match &test.result {
                Some(r) => tests.push_str(&format!(
                    "{},{m},{},{},{},{},{},{},{},{},{}\n",
                    test.metric,
                    r.n_a,
                    r.n_b,
                    fmt_float(r.mean_a),
                    fmt_float(r.mean_b),
                    fmt_float(r.t_statistic),
                    fmt_float(r.df),
                    fmt_float(r.p_value),
                    fmt_float(r.cohens_d),
                    if r.degenerate { "degenerate" } else { "" }
                )),
                None => tests.push_str(&format!(
                    "{},{m},,,,,,,,,{}\n",
                    test.metric,
                    csv_field(test.skipped.as_deref().unwrap_or(""))
                )),
            }
        }
        t.insert(format!("null_matrix_{m}.csv"), n.null_mean_matrix.to_csv());
        t.insert(format!("residual_matrix_{m}.csv"), n.residual_matrix.to_csv());
        t.insert(format!("interval_rates_{m}.csv"), interval_rates_full_csv(&n.interval_rates));
    }
    t.insert("fig3_range_hist.csv".into(), range);
    t.insert("fig3_deviation_hist.csv".into(), dev);
    t.insert("fig3_tests.csv".into(), tests);
    t.insert("fig4_rates.csv".into(), rates);

    if let Some(primary) = report.null(report.config.null_model.primary()) {
        t.insert("residual_matrix.csv".into(), primary.residual_matrix.to_csv());
        t.insert("interval_rates.csv".into(), interval_rates_csv(&primary.interval_rates));
    }
    t.insert("interaction_matrix.csv".into(), report.interaction_matrix.to_csv());
    t.insert("interaction_chord.csv".into(), report.interaction_matrix.to_chord_csv());
    t.insert("interval_offsets.csv".into(), interval_offsets_csv(&report.interval_offsets));
    t.insert("decay_diagnostics.csv".into(), decay_csv(&report.decay));
    if let Some(topo) = &report.topology {
        t.insert("topology.csv".into(), topology_csv(&topo.nodes));
        let mut s = serde_json::to_string_pretty(&topo.summary)?;
        s.push('\n');
        t.insert("topology_summary.json".into(), s);
    }
    Ok(t)
}

/// `node,pearson_r,classification,bin_1..bin_B`.
pub fn decay_csv(d: &DecaySummary) -> String {
    let bins = d.rows.first().map_or(0, |r| r.diagnostic.bin_counts.len());
    let mut out = String::from("node,pearson_r,classification");
    for b in 1..=bins {
        out.push_str(&format!(",bin_{b}"));
    }
    out.push('\n');
    for r in &d.rows {
        out.push_str(&format!(
            "{},{},{}",
            csv_field(&r.node),
            r.diagnostic.pearson_r.map(|v| v.to_string()).unwrap_or_default(),
            r.diagnostic.classification.as_str()
        ));
        for c in &r.diagnostic.bin_counts {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

/// Writes `report.json` and every rendered table into `dir`.
pub fn write_report(dir: &Path, report: &AnalysisReport) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json()?).map_err(io_err(&json_path))?;
    written.push(json_path);
    written.extend(write_tables(dir, report)?);
    Ok(written)
}

pub fn write_tables(dir: &Path, report: &AnalysisReport) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, body) in render_tables(report)? {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn requested_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Configures the global rayon pool from [`THREADS_ENV`]; a no-op when unset
/// or when the pool is already running.
pub fn configure_threads() {
    if let Some(n) = requested_threads() {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
}
