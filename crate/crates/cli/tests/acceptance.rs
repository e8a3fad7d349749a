//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 when any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use exview::config::Config;
use exview::gnn::{classify_database, GcnModel};
use exview::graph::{Graph, GraphDatabase, Labeled, NodeId, NodeSet};
use exview::influence::influence_exact;
use exview::io::synth::{standin_model, synth_motif_dataset};
use exview::matching::{has_match, match_pattern};
use exview::metrics::{evaluate, graph_fidelity_plus};
use exview::pipeline::{generate_views, Algorithm};
use exview::scoring::Objective;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use support::{brute_matches, fd_influence, objective_oracle, random_graph, random_model, random_pattern};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed <= l);
    let pass = out.pass && in_time;
    let timing = match limit {
        Some(l) if in_time => format!("{:.1}s of {}s", elapsed.as_secs_f64(), l.as_secs()),
        Some(l) => format!("{:.1}s, over the {}s limit", elapsed.as_secs_f64(), l.as_secs()),
        None => format!("{:.1}s", elapsed.as_secs_f64()),
    };
    println!("{} {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, out.detail);
    pass
}

fn jacobian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let graphs = 60;
    let mut worst = 0.0f64;
    for _ in 0..graphs {
        let n = rng.gen_range(1..=10);
        let m = random_model(&mut rng, &[3, 4, 4, 3], 2);
        let g = random_graph(&mut rng, n, 3, 2, 1, 0.4);
        let exact = influence_exact(&m, &g).unwrap().i1;
        let fd = fd_influence(&m, &g, 1e-6);
        for (a, b) in exact.iter().zip(fd.iter()) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-6));
        }
    }
    outcome(
        worst <= 1e-4,
        format!("{graphs} graphs with at most 10 nodes, worst relative error {worst:.2e} (limit 1e-4)"),
    )
}

fn submodularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let graphs = 25;
    let per_graph = 50;
    let mut violations = 0;
    for _ in 0..graphs {
        let n = rng.gen_range(3..=10);
        let m = random_model(&mut rng, &[3, 4, 4], 2);
        let g = random_graph(&mut rng, n, 3, 2, 1, 0.35);
        let t = influence_exact(&m, &g).unwrap();
        let (theta, r, gamma) = (rng.gen_range(0.0..0.6), rng.gen_range(0.0..1.5), rng.gen_range(0.0..=1.0));
        let obj = Objective::with_params(&t, theta, r, gamma);
        for _ in 0..per_graph {
            let b: NodeSet = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let a: NodeSet = b.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            let u = rng.gen_range(0..n);
            let with = |s: &NodeSet| {
                let mut s = s.clone();
                s.insert(u);
                s
            };
            let (fa, fb) = (obj.value(&a), obj.value(&b));
            let ok = (fa - objective_oracle(&t, &a, theta, r, gamma)).abs() < 1e-12
                && (fb - objective_oracle(&t, &b, theta, r, gamma)).abs() < 1e-12
                && fa <= fb + 1e-12
                && obj.value(&with(&a)) - fa >= obj.value(&with(&b)) - fb - 1e-12;
            if !ok {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{} trials on {graphs} graphs, {violations} violations", graphs * per_graph),
    )
}

fn greedy_half() -> Outcome {
    let r = support::greedy_half_check(120, 100);
    outcome(
        r.violations == 0 && r.checked >= 50,
        format!(
            "{} instances ({} without a feasible set skipped), {} violations, worst ratio {:.3}",
            r.checked, r.vacuous, r.violations, r.worst_ratio
        ),
    )
}

fn stream_quarter() -> Outcome {
    let r = support::stream_quarter_check(60, 200);
    outcome(
        r.violations == 0 && r.checked >= 30,
        format!(
            "{} prefix checkpoints ({} without a feasible set skipped), {} violations, worst ratio {:.3}",
            r.checked, r.vacuous, r.violations, r.worst_ratio
        ),
    )
}

fn cover_bound() -> Outcome {
    let (r, uncovered) = support::cover_check(40, 300);
    outcome(
        r.violations == 0 && uncovered == 0 && r.checked >= 30,
        format!(
            "{} instances, {uncovered} with uncovered nodes, {} over the harmonic bound",
            r.checked, r.violations
        ),
    )
}

fn matching() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let pairs = 250;
    let mut discrepancies = 0;
    for _ in 0..pairs {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(0..=8);
        let p = random_pattern(&mut rng, k);
        let density = rng.gen_range(0.2..0.8);
        let g = random_graph(&mut rng, n, 1, 2, 2, density);
        let found: BTreeSet<Vec<NodeId>> = match_pattern(&p, &g).into_iter().map(|m| m.map).collect();
        let want = brute_matches(&p, &g);
        if found != want || has_match(&p, &g) == want.is_empty() {
            discrepancies += 1;
        }
    }
    outcome(
        discrepancies == 0,
        format!("{pairs} pattern/graph pairs with at most 8 nodes, {discrepancies} discrepancies"),
    )
}

fn exview(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exview"))
        .args(args)
        .env_remove("EXVIEW_WORKERS")
        .env_remove("RUST_LOG")
        .output()
        .expect("exview runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn explain_cli(dir: &Path, name: &str, algo: &str, workers: &str, out: &Path) -> Result<(), String> {
    let dataset = dir.join(name);
    let weights = dir.join("standin_weights.json");
    let o = exview(&[
        "explain",
        "--dataset",
        path(&dataset),
        "--weights",
        path(&weights),
        "--algo",
        algo,
        "--workers",
        workers,
        "--out",
        path(out),
    ]);
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("explain failed: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn verify_cli(dir: &Path, name: &str, views: &Path) -> (bool, String) {
    let o = exview(&[
        "verify",
        "--views",
        path(views),
        "--dataset",
        path(&dir.join(name)),
        "--weights",
        path(&dir.join("standin_weights.json")),
    ]);
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    (o.status.success(), text)
}

fn synth_cli(dir: &Path, graphs: usize, base: usize, seed: u64) -> Result<(), String> {
    let o = exview(&[
        "synth",
        "--out",
        path(dir),
        "--graphs",
        &graphs.to_string(),
        "--base-nodes",
        &base.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("synth failed: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn closed_loop() -> Outcome {
    match closed_loop_checks() {
        Ok(detail) => outcome(true, detail),
        Err(e) => outcome(false, e),
    }
}

fn closed_loop_checks() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    synth_cli(dir, 12, 12, 3)?;
    let mut emitted = 0;
    for algo in ["approx", "stream"] {
        let views = dir.join(format!("{algo}.json"));
        explain_cli(dir, "SYN", algo, "1", &views)?;
        let (ok, text) = verify_cli(dir, "SYN", &views);
        if !ok {
            return Err(format!("{algo} output rejected: {text}"));
        }
        emitted += 1;
    }
    let base: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("approx.json")).unwrap()).unwrap();
    let max_size = base["views"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|v| v["subgraphs"].as_array().unwrap().iter())
        .map(|s| s["nodes"].as_array().unwrap().len())
        .max()
        .ok_or("no subgraphs were emitted")?;
    type Fault = fn(&mut Value, usize);
    let faults: [(&str, &str, Fault); 3] = [
        ("node uncovered", "C3", |v, _| v["views"][0]["patterns"] = Value::Array(vec![])),
        ("size out of window", "C3", |v, max| {
            v["config"]["default_coverage"] = serde_json::json!({ "lower": max + 1, "upper": max + 4 });
        }),
        ("label flip", "C2", |v, _| {
            let l = v["views"][0]["label"].as_u64().unwrap();
            v["views"][0]["label"] = Value::from(1 - l);
        }),
    ];
    for (what, expected, inject) in faults {
        let mut v = base.clone();
        inject(&mut v, max_size);
        let file = dir.join("fault.json");
        std::fs::write(&file, serde_json::to_string_pretty(&v).unwrap()).unwrap();
        let (ok, text) = verify_cli(dir, "SYN", &file);
        let named = text
            .lines()
            .find_map(|l| l.strip_prefix("verification failed: "))
            .unwrap_or_default()
            .to_string();
        if ok || named != expected {
            return Err(format!("{what}: expected rejection naming {expected}, got {named:?} ({text})"));
        }
    }
    Ok(format!(
        "{emitted} emitted view files verified; node uncovered -> C3, size out of window -> C3, label flip -> C2"
    ))
}

fn motif_recovery() -> Outcome {
    let data = synth_motif_dataset(40, 30, 0);
    let mut db: GraphDatabase = data.db.clone();
    let m: GcnModel = standin_model();
    classify_database(&m, &mut db).unwrap();
    let cfg = Config::default();
    let views = generate_views(&db, &m, &cfg, &[0, 1], Algorithm::Approx).unwrap();
    let views: Vec<_> = views.into_iter().map(|g| g.view).collect();
    let explained: Vec<(usize, usize, &NodeSet)> = views
        .iter()
        .flat_map(|v| v.subgraphs.iter().map(move |s| (s.source, v.label, &s.nodes)))
        .collect();
    let hits = data
        .motifs
        .iter()
        .filter(|motif| {
            explained
                .iter()
                .any(|&(g, _, nodes)| g == motif.graph && motif.nodes.iter().any(|v| nodes.contains(v)))
        })
        .count();
    let intersect = hits as f64 / data.motifs.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut ours = 0.0;
    let mut baseline = 0.0;
    for &(g, label, nodes) in &explained {
        let graph: &Graph = db.graph(g);
        ours += graph_fidelity_plus(&m, graph, nodes, label).unwrap();
        let mut sum = 0.0;
        for _ in 0..20 {
            let random: NodeSet = sample(&mut rng, graph.node_count(), nodes.len()).into_iter().collect();
            sum += graph_fidelity_plus(&m, graph, &random, label).unwrap();
        }
        baseline += sum / 20.0;
    }
    let k = explained.len().max(1) as f64;
    let (ours, baseline) = (ours / k, baseline / k);
    let report = evaluate(&db, &views, &m).unwrap();
    let pass = intersect >= 0.9
        && ours > baseline
        && report.compression >= 0.5
        && report.sparsity >= 0.6;
    outcome(
        pass,
        format!(
            "motif intersection {:.1}% (>= 90%), Fidelity+ {ours:.3} vs random {baseline:.3}, Compression {:.3} (>= 0.5), Sparsity {:.3} (>= 0.6)",
            100.0 * intersect,
            report.compression,
            report.sparsity
        ),
    )
}

fn parallel_equivalence() -> Outcome {
    let run = || -> Result<String, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let dir = tmp.path();
        synth_cli(dir, 40, 30, 0)?;
        for algo in ["approx", "stream"] {
            let one = dir.join(format!("{algo}-1.json"));
            let four = dir.join(format!("{algo}-4.json"));
            explain_cli(dir, "SYN", algo, "1", &one)?;
            explain_cli(dir, "SYN", algo, "4", &four)?;
            if std::fs::read(&one).unwrap() != std::fs::read(&four).unwrap() {
                return Err(format!("{algo}: --workers 4 output differs from --workers 1"));
            }
        }
        Ok("approx and stream view files byte-identical under --workers 1 and 4".into())
    };
    match run() {
        Ok(d) => outcome(true, d),
        Err(e) => outcome(false, e),
    }
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        criterion("jacobian", secs(10), jacobian),
        criterion("submodularity", secs(30), submodularity),
        criterion("half-approximation", secs(300), greedy_half),
        criterion("quarter-anytime", secs(600), stream_quarter),
        criterion("pattern-cover-bound", secs(120), cover_bound),
        criterion("matching-oracle", secs(60), matching),
        criterion("verify-closed-loop", None, closed_loop),
        criterion("motif-recovery", secs(300), motif_recovery),
        criterion("parallel-determinism", None, parallel_equivalence),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
