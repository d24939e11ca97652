use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use homophily::bc_sim::{self, BCState, InitialProfile};
use homophily::null_models::run_trials;
use homophily::intervals::IntervalPartition;
use homophily::pipeline::{self, AnalysisConfig, AnalysisReport};
use homophily::topology::{topology_csv, topology_report};

const ANALYZE_OUTPUTS: &str = "\
Output files (written to --out):
  report.json                  complete machine-readable report
  profiles.csv                 per-ego gap, range, deviations, offsets, asymmetry, inclusion
  fig2_opinion_hist.csv        opinion distribution (50 bins on [0,1])
  fig2_gap_hist.csv            opinion gap distribution (50 bins on [-1,1])
  fig3_range_hist.csv          confidence range, empirical vs each null model
  fig3_deviation_hist.csv      mean and max deviation, empirical vs each null model
  fig3_tests.csv               Welch t-tests and Cohen's d, empirical vs null
  fig4_rates.csv               R1, R2, R3 and null R3 for every trial
  interaction_matrix.csv       interval-to-interval interaction percentages
  interaction_chord.csv        the same matrix as src,dst,count
  null_matrix_<model>.csv      mean null interaction matrix
  residual_matrix[_<model>].csv  empirical minus mean null matrix
  interval_rates[_<model>].csv   R1, R2, R3 per ego opinion interval
  interval_offsets.csv         -gamma, delta and asymmetry per interval
  decay_diagnostics.csv        distance-decay bins, Pearson r and DD/NDD class
  topology.csv                 degrees, clustering, Katz and eigenvector centrality
  topology_summary.json        reciprocity, component sizes, per-interval degrees

Unsuffixed residual and interval-rate tables use the range-based null unless
only the randomized null is enabled.";

#[derive(Parser)]
#[command(name = "homophily", version, about = "Interval-based opinion homophily analysis for directed interaction graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis and write a report directory.
    #[command(after_help = ANALYZE_OUTPUTS)]
    Analyze(AnalyzeArgs),
    /// Emit null-model trials as JSON records.
    Nulltrials(NullTrialArgs),
    /// Run bounded-confidence dynamics and emit a fixture graph.
    Simulate(SimulateArgs),
    /// Topology indicators only.
    Topology(TopologyArgs),
    /// Re-render tables from a saved report.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Edge list CSV with header `src,dst`.
    #[arg(long)]
    edges: PathBuf,
    /// Opinion table CSV with header `node,opinion`.
    #[arg(long)]
    opinions: PathBuf,
    /// Map opinions from this source interval onto [0,1], e.g. `-1,1`.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    rescale: Option<String>,
}

#[derive(Args)]
struct ConfigArgs {
    /// INI-style config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for the null-model trials.
    #[arg(long)]
    seed: Option<u64>,
    /// Null-model trials per model (default 20).
    #[arg(long)]
    trials: Option<usize>,
    /// follower: out-neighbors; leader: in-neighbors.
    #[arg(long, value_parser = ["follower", "leader"])]
    perspective: Option<String>,
    /// randomized, range_based or both.
    #[arg(long)]
    null_model: Option<String>,
    /// Number of opinion intervals.
    #[arg(long)]
    intervals: Option<usize>,
    /// Distance-decay bin width (default 0.1).
    #[arg(long)]
    decay_bin_width: Option<f64>,
    /// Center redraws per ego for the range-based null (default 10000).
    #[arg(long)]
    retry_cap: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct NullTrialArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    agents: usize,
    /// Confidence bound used for both directions unless --lower/--upper are given.
    #[arg(long, default_value_t = 0.2)]
    bounds: f64,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial opinions: uniform or bimodal.
    #[arg(long, default_value = "uniform")]
    init: String,
    #[arg(long, default_value_t = bc_sim::DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long, default_value_t = bc_sim::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Trajectory step used for the emitted fixture graph.
    #[arg(long, default_value_t = 0)]
    snapshot_step: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TopologyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 5)]
    intervals: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved report.json.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_rescale(s: &Option<String>) -> Result<Option<(f64, f64)>> {
    let Some(s) = s else { return Ok(None) };
    let (lo, hi) = s.split_once(',').context("--rescale expects LO,HI")?;
    Ok(Some((lo.trim().parse()?, hi.trim().parse()?)))
}

fn build_config(args: &ConfigArgs, input: &InputArgs) -> Result<AnalysisConfig> {
    let mut cfg = match &args.config {
        Some(p) => AnalysisConfig::from_file(p)?,
        None => AnalysisConfig::default(),
    };
    let overrides: [(&str, Option<String>); 7] = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("trials", args.trials.map(|v| v.to_string())),
        ("perspective", args.perspective.clone()),
        ("null_model", args.null_model.clone()),
        ("partition_k", args.intervals.map(|v| v.to_string())),
        ("decay_bin_width", args.decay_bin_width.map(|v| v.to_string())),
        ("retry_cap", args.retry_cap.map(|v| v.to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(r) = parse_rescale(&input.rescale)? {
        cfg.rescale = Some(r);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let cfg = build_config(&args.config, &args.input)?;
    let data = pipeline::load_dataset(&args.input.edges, &args.input.opinions, cfg.rescale)?;
    let report = pipeline::run_analysis(&data.graph, &cfg, data.inputs)?;
    let written = pipeline::write_report(&args.out, &report)?;
    log::info!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn null_trials(args: &NullTrialArgs) -> Result<()> {
    let cfg = build_config(&args.config, &args.input)?;
    let data = pipeline::load_dataset(&args.input.edges, &args.input.opinions, cfg.rescale)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for model in cfg.null_model.models() {
        let trials = run_trials(&data.graph, cfg.perspective, model, cfg.trials, cfg.master_seed, cfg.retry_cap)?;
        for (t, trial) in trials.iter().enumerate() {
            let path = args.out.join(format!("trial_{}_{t:03}.json", model.as_str()));
            let body = serde_json::to_string_pretty(&trial.to_record(&data.graph))? + "\n";
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let profile = match args.init.as_str() {
        "uniform" => InitialProfile::Uniform,
        "bimodal" => InitialProfile::Bimodal { separation: 0.6, sd: 0.08 },
        other => bail!("unknown initial profile `{other}` (expected uniform or bimodal)"),
    };
    let n = args.agents;
    let opinions = bc_sim::initial_opinions(n, profile, args.seed);
    let lower = vec![args.lower.unwrap_or(args.bounds); n];
    let upper = vec![args.upper.unwrap_or(args.bounds); n];
    let state = BCState::new(opinions, lower.clone(), upper.clone())?;
    let sim = bc_sim::simulate(&state, args.max_steps, args.tol)?;
    let step = args.snapshot_step.min(sim.trajectory.len() - 1);
    let snapshot = BCState::new(sim.trajectory[step].clone(), lower, upper)?;
    let g = bc_sim::snapshot_graph(&snapshot);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut edges = String::from("src,dst\n");
    for (s, d) in g.edges() {
        edges.push_str(&format!("{s},{d}\n"));
    }
    let mut ops = String::from("node,opinion\n");
    for (i, x) in g.opinions().iter().enumerate() {
        ops.push_str(&format!("{i},{x}\n"));
    }
    let summary = serde_json::json!({
        "agents": n,
        "steps": sim.final_state.step,
        "converged": sim.converged,
        "clusters": sim.clusters.len(),
        "cluster_sizes": sim.clusters.iter().map(Vec::len).collect::<Vec<_>>(),
        "snapshot_step": step,
    });
    write(&args.out.join("edges.csv"), &edges)?;
    write(&args.out.join("opinions.csv"), &ops)?;
    write(&args.out.join("trajectory.csv"), &bc_sim::trajectory_csv(&sim.trajectory))?;
    write(&args.out.join("simulation.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(())
}

fn topology(args: &TopologyArgs) -> Result<()> {
    let data = pipeline::load_dataset(&args.input.edges, &args.input.opinions, parse_rescale(&args.input.rescale)?)?;
    let partition = IntervalPartition::new(args.intervals)?;
    let report = topology_report(&data.graph, &partition, None)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out.join("topology.csv"), &topology_csv(&report.nodes))?;
    write(&args.out.join("topology_summary.json"), &(serde_json::to_string_pretty(&report.summary)? + "\n"))?;
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("reading {}", args.report.display()))?;
    let report = AnalysisReport::from_json(&text)?;
    pipeline::write_tables(&args.out, &report)?;
    Ok(())
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    pipeline::configure_threads();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Nulltrials(a) => null_trials(a),
        Command::Simulate(a) => simulate(a),
        Command::Topology(a) => topology(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
