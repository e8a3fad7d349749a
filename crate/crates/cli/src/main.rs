use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use exview::config::Config;
use exview::gnn::{classify_database, GcnModel};
use exview::graph::{ClassLabel, GraphDatabase, GraphId, Pattern};
use exview::io::synth::{standin_model, synth_motif_dataset};
use exview::io::tu::{load_tu_dataset, save_tu_dataset};
use exview::io::viewfile::ViewFile;
use exview::io::weights::{load_weights, save_weights};
use exview::matching::match_pattern;
use exview::metrics::evaluate;
use exview::pipeline::{generate_views, Algorithm};

#[derive(Parser)]
#[command(name = "exview", version, about = "Explanation views for GCN graph classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Approx,
    Stream,
}

#[derive(clap::Args)]
struct Inputs {
    /// Dataset path prefix: `DIR/NAME` for the TU files `DIR/NAME_*.txt`.
    #[arg(long)]
    dataset: PathBuf,
    /// Model weights (JSON).
    #[arg(long)]
    weights: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic motif dataset, its ground truth and the stand-in weights.
    Synth {
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "SYN")]
        name: String,
        #[arg(long, default_value_t = 40)]
        graphs: usize,
        #[arg(long, default_value_t = 30)]
        base_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate explanation views and write them as a view file.
    Explain {
        #[command(flatten)]
        inputs: Inputs,
        /// Configuration (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "approx")]
        algo: Algo,
        /// Comma-separated labels; all labels the model assigns when omitted.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<ClassLabel>>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses one per core.
        #[arg(long, env = "EXVIEW_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Evaluate a view file: Fidelity+/-, Sparsity, Compression, edge loss.
    Metrics {
        #[arg(long)]
        views: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "EXVIEW_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Re-check constraints C1-C3 on a view file. Exits with status 1 on failure.
    Verify {
        #[arg(long)]
        views: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, env = "EXVIEW_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Find node-induced matches of a pattern in every graph of a dataset.
    Match {
        /// Dataset path prefix: `DIR/NAME`.
        #[arg(long)]
        dataset: PathBuf,
        /// Pattern file (JSON `{"node_types": [...], "edges": [[u, v, type], ...]}`).
        #[arg(long, conflicts_with = "node_type", required_unless_present = "node_type")]
        pattern: Option<PathBuf>,
        /// Query a single node of this type instead of a pattern file.
        #[arg(long)]
        node_type: Option<u32>,
    },
}

fn split_prefix(prefix: &Path) -> Result<(PathBuf, String)> {
    let name = prefix
        .file_name()
        .and_then(|n| n.to_str())
        .with_context(|| format!("dataset prefix {} has no name", prefix.display()))?;
    let dir = match prefix.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((dir, name.to_string()))
}

fn timed<T>(phase: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    info!("phase={phase} elapsed_ms={:.3}", start.elapsed().as_secs_f64() * 1e3);
    out
}

fn load_dataset(prefix: &Path) -> Result<GraphDatabase> {
    let (dir, name) = split_prefix(prefix)?;
    timed("load_dataset", || load_tu_dataset(&dir, &name)).context("loading dataset")
}

fn load_model(path: &Path) -> Result<GcnModel> {
    timed("load_weights", || load_weights(path)).context("loading weights")
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(out: &Path, name: &str, graphs: usize, base_nodes: usize, seed: u64) -> Result<()> {
    if base_nodes < 5 {
        bail!("--base-nodes must be at least 5");
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let data = timed("synth", || synth_motif_dataset(graphs, base_nodes, seed));
    save_tu_dataset(&data.db, out, name)?;
    write_json(&data.motifs, Some(&out.join(format!("{name}_motifs.json"))))?;
    save_weights(&standin_model(), &out.join("standin_weights.json"))?;
    Ok(())
}

fn explain(
    inputs: &Inputs,
    config: Option<&Path>,
    algo: Algo,
    labels: Option<Vec<ClassLabel>>,
    out: &Path,
    workers: usize,
) -> Result<()> {
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::from_toml_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Config::default(),
    };
    let mut db = load_dataset(&inputs.dataset)?;
    let m = load_model(&inputs.weights)?;
    let algorithm = match algo {
        Algo::Approx => Algorithm::Approx,
        Algo::Stream => Algorithm::Stream,
    };
    let pool = pool(workers)?;
    let views = pool.install(|| -> Result<_> {
        timed("classify", || classify_database(&m, &mut db))?;
        let mut labels = labels.unwrap_or_else(|| db.labels().collect());
        labels.sort_unstable();
        labels.dedup();
        if let Some(&bad) = labels.iter().find(|&&l| l >= m.num_classes()) {
            bail!("label {bad} is not a class of the model ({} classes)", m.num_classes());
        }
        Ok(timed("explain", || generate_views(&db, &m, &cfg, &labels, algorithm))?)
    })?;
    for v in &views {
        info!(
            "label={} subgraphs={} unexplained={} patterns={}",
            v.view.label,
            v.view.subgraphs.len(),
            v.unexplained.len(),
            v.view.patterns.len()
        );
    }
    timed("write_views", || ViewFile::new(algorithm, &cfg, &views).save(out))?;
    Ok(())
}

fn metrics(views: &Path, inputs: &Inputs, out: Option<&Path>, workers: usize) -> Result<()> {
    let file = ViewFile::load(views)?;
    let db = load_dataset(&inputs.dataset)?;
    let m = load_model(&inputs.weights)?;
    let report = pool(workers)?.install(|| {
        let views: Vec<_> = file.to_views(&db).into_iter().map(|g| g.view).collect();
        for v in &views {
            for s in &v.subgraphs {
                if s.source >= db.len() || s.subgraph.original_ids.len() != s.nodes.len() {
                    bail!("view file references graph {} or its nodes, which the dataset lacks", s.source);
                }
            }
        }
        Ok(timed("metrics", || evaluate(&db, &views, &m))?)
    })?;
    write_json(&report, out)
}

fn verify(views: &Path, inputs: &Inputs, workers: usize) -> Result<bool> {
    let file = ViewFile::load(views)?;
    let db = load_dataset(&inputs.dataset)?;
    let m = load_model(&inputs.weights)?;
    let report = pool(workers)?.install(|| timed("verify", || file.verify(&db, &m)))?;
    if report.is_ok() {
        println!("ok: {} views satisfy C1, C2 and C3", file.views.len());
        return Ok(true);
    }
    for v in &report.violations {
        eprintln!("{v}");
    }
    let failed: Vec<String> = report.failed().iter().map(|c| c.to_string()).collect();
    eprintln!("verification failed: {}", failed.join(", "));
    Ok(false)
}

#[derive(Serialize)]
struct MatchHit {
    graph: GraphId,
    matches: usize,
}

#[derive(Serialize)]
struct MatchReport {
    pattern: Pattern,
    graphs_matched: usize,
    hits: Vec<MatchHit>,
}

fn query(dataset: &Path, pattern: Option<&Path>, node_type: Option<u32>) -> Result<()> {
    let p = match (pattern, node_type) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(t)) => Pattern::singleton(t),
        (None, None) => bail!("either --pattern or --node-type is required"),
    };
    let db = load_dataset(dataset)?;
    let hits: Vec<MatchHit> = timed("match", || {
        db.graphs
            .iter()
            .enumerate()
            .map(|(graph, g)| MatchHit {
                graph,
                matches: match_pattern(&p, g).len(),
            })
            .filter(|h| h.matches > 0)
            .collect()
    });
    write_json(
        &MatchReport {
            pattern: p,
            graphs_matched: hits.len(),
            hits,
        },
        None,
    )
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth {
            out,
            name,
            graphs,
            base_nodes,
            seed,
        } => synth(&out, &name, graphs, base_nodes, seed)?,
        Command::Explain {
            inputs,
            config,
            algo,
            labels,
            out,
            workers,
        } => explain(&inputs, config.as_deref(), algo, labels, &out, workers)?,
        Command::Metrics {
            views,
            inputs,
            out,
            workers,
        } => metrics(&views, &inputs, out.as_deref(), workers)?,
        Command::Verify {
            views,
            inputs,
            workers,
        } => return verify(&views, &inputs, workers),
        Command::Match {
            dataset,
            pattern,
            node_type,
        } => query(&dataset, pattern.as_deref(), node_type)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
