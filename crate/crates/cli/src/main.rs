use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use overlap_core::bench::{run_bench, to_csv, to_table, BenchConfig};
use overlap_core::grouping::{merge_overlapping, MergePass};
use overlap_core::io::{parse_cluster_set, parse_single_cluster, AdjacencyRecord, ClusterSet};
use overlap_core::measures::{merge_verdict, timed};
use overlap_core::scenarios::{
    ellipse_points, generate, merge_figure, polylines_csv, Point, ScenarioKind, ScenarioSpec,
};
use overlap_core::{
    adjacency_from_threshold, maximal_cliques, merge_groups, pairwise_matrix, partition_into_groups,
    AdjacencyMatrix, GaussianCluster, GroupPartition, MeasureKind, Thresholds,
};

#[derive(Parser)]
#[command(name = "gauss-overlap", version, about = "Overlap measures and merging for Gaussian clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one measure on two cluster files.
    Measure(MeasureArgs),
    /// Merge groups of overlapping clusters in one step.
    Merge(MergeArgs),
    /// Generate a canonical scenario and its plot data.
    Scenario(ScenarioArgs),
    /// Maximal cliques and greedy groups of the overlap graph.
    Cliques(CliquesArgs),
    /// Timing and detection benchmark over the canonical cases.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

fn parse_kind(s: &str) -> Result<MeasureKind, String> {
    s.parse().map_err(|e: overlap_core::Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: overlap_core::Error| e.to_string())
}

#[derive(clap::Args)]
struct MeasureArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    /// One of B, JS, W, eGauss, aB, O, Oh.
    #[arg(long, default_value = "O", value_parser = parse_kind)]
    kind: MeasureKind,
    /// Merge when value < threshold. Defaults: O/Oh 0, eGauss 1.
    #[arg(long)]
    threshold: Option<f64>,
    /// Timed calls; the reported time is their median.
    #[arg(long, default_value_t = 25)]
    repeats: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MergeArgs {
    file_in: PathBuf,
    /// Partition JSON ({"groups": [[...]]}); computed from the overlap graph when absent.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, default_value = "O", value_parser = parse_kind)]
    kind: MeasureKind,
    #[arg(long)]
    threshold: Option<f64>,
    /// Also emit adjacency, partition and merged ellipses (2-D only).
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// overlap, separate, nested, orthogonal or random_field.
    #[arg(long, value_parser = parse_scenario)]
    kind: ScenarioKind,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of clusters for random_field.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Output directory; the cluster set goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    k_sigma: f64,
    #[arg(long, default_value_t = 64)]
    segments: usize,
}

#[derive(clap::Args)]
struct CliquesArgs {
    /// Cluster set, or an adjacency file ({"adjacency": [[bool]]}).
    file_in: PathBuf,
    #[arg(long, default_value = "O", value_parser = parse_kind)]
    kind: MeasureKind,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,100")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(10..))]
    repeats: u64,
    /// Scenario draws per case.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Seed of the first draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold applied to every measure (overrides defaults and calibration).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn threshold_for(kind: MeasureKind, given: Option<f64>) -> Option<f64> {
    given.or_else(|| Thresholds::default().get(kind))
}

fn require_threshold(kind: MeasureKind, given: Option<f64>) -> Result<f64> {
    match threshold_for(kind, given) {
        Some(t) => Ok(t),
        None => bail!("measure {kind} has no default threshold; pass --threshold"),
    }
}

fn cmd_measure(args: &MeasureArgs) -> Result<()> {
    let p = parse_single_cluster(&read(&args.file_a)?)
        .with_context(|| format!("parsing {}", args.file_a.display()))?;
    let q = parse_single_cluster(&read(&args.file_b)?)
        .with_context(|| format!("parsing {}", args.file_b.display()))?;
    let result = timed(args.kind, &p, &q, args.repeats)?;
    let threshold = threshold_for(args.kind, args.threshold);
    let report = json!({
        "kind": result.kind,
        "value": result.value,
        "elapsed_us": result.elapsed_us,
        "threshold": threshold,
        "merge": threshold.map(|t| merge_verdict(result.value, t)),
    });
    emit(args.out.as_deref(), &to_json(&report)?)
}

fn ellipses_2d(clusters: &[GaussianCluster]) -> Result<Option<Vec<Vec<Point>>>> {
    if clusters.first().is_none_or(|c| c.dim() != 2) {
        return Ok(None);
    }
    Ok(Some(
        clusters
            .iter()
            .map(|c| ellipse_points(c, 2.0, 64))
            .collect::<overlap_core::Result<_>>()?,
    ))
}

fn cmd_merge(args: &MergeArgs) -> Result<()> {
    let set = parse_cluster_set(&read(&args.file_in)?)
        .with_context(|| format!("parsing {}", args.file_in.display()))?;
    let pass = match &args.partition {
        Some(path) => {
            let partition: GroupPartition = serde_json::from_str(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            let merged = merge_groups(&set.clusters, &partition)?;
            (None, partition, merged)
        }
        None => {
            let threshold = require_threshold(args.kind, args.threshold)?;
            let MergePass {
                adjacency,
                partition,
                merged,
            } = merge_overlapping(&set.clusters, args.kind, threshold)?;
            (Some(adjacency), partition, merged)
        }
    };
    let (adjacency, partition, merged) = pass;
    let mut doc = serde_json::to_value(ClusterSet {
        clusters: merged.clone(),
    })?;
    if args.trace {
        doc["trace"] = json!({
            "adjacency": adjacency.as_ref().map(|a| AdjacencyRecord::from(a).adjacency),
            "partition": partition,
            "ellipses": ellipses_2d(&merged)?,
        });
    }
    emit(args.out.as_deref(), &to_json(&doc)?)
}

fn cmd_scenario(args: &ScenarioArgs) -> Result<()> {
    let spec = ScenarioSpec::new(args.kind, args.dim, args.seed).with_count(args.count);
    let clusters = generate(&spec)?;
    let set_json = to_json(&ClusterSet {
        clusters: clusters.clone(),
    })?;
    let Some(dir) = &args.out else {
        return emit(None, &set_json);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("clusters.json"), set_json)?;
    if args.dim == 2 {
        let figure = if args.kind == ScenarioKind::RandomField {
            let pass = merge_overlapping(&clusters, MeasureKind::Overlap, 0.0)?;
            let mut lines = Vec::new();
            for (i, c) in clusters.iter().enumerate() {
                lines.push((format!("input {i}"), ellipse_points(c, args.k_sigma, args.segments)?));
            }
            for (g, c) in pass.merged.iter().enumerate() {
                lines.push((format!("merged {g}"), ellipse_points(c, args.k_sigma, args.segments)?));
            }
            lines
        } else {
            merge_figure(&clusters, args.k_sigma, args.segments)?
        };
        fs::write(
            dir.join("ellipses.csv"),
            polylines_csv(figure.iter().map(|(_, l)| l.as_slice())),
        )?;
        let labels: String = figure.iter().map(|(label, _)| format!("{label}\n")).collect();
        fs::write(dir.join("ellipse_labels.txt"), labels)?;
    }
    Ok(())
}

fn cmd_cliques(args: &CliquesArgs) -> Result<()> {
    let text = read(&args.file_in)?;
    let adjacency = match serde_json::from_str::<AdjacencyRecord>(&text) {
        Ok(record) => AdjacencyMatrix::try_from(record)?,
        Err(_) => {
            let set = parse_cluster_set(&text)
                .with_context(|| format!("parsing {}", args.file_in.display()))?;
            let threshold = require_threshold(args.kind, args.threshold)?;
            if set.clusters.len() < 2 {
                AdjacencyMatrix::empty(set.clusters.len())
            } else {
                adjacency_from_threshold(&pairwise_matrix(&set.clusters, args.kind)?, threshold)
            }
        }
    };
    let report = json!({
        "cliques": maximal_cliques(&adjacency),
        "groups": partition_into_groups(&adjacency).groups,
    });
    emit(args.out.as_deref(), &to_json(&report)?)
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut config = BenchConfig {
        dims: args.dims.clone(),
        repeats: args.repeats as usize,
        seeds: args.seeds,
        base_seed: args.seed,
        ..BenchConfig::default()
    };
    if let Some(t) = args.threshold {
        for kind in MeasureKind::ALL {
            config.thresholds.set(kind, t);
        }
    }
    let rows = run_bench(&config)?;
    let text = match args.format {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows)?,
        Format::Table => to_table(&rows),
    };
    emit(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Measure(a) => cmd_measure(a),
        Command::Merge(a) => cmd_merge(a),
        Command::Scenario(a) => cmd_scenario(a),
        Command::Cliques(a) => cmd_cliques(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
