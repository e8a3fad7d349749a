//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's propagation, influence, scoring or
//! matching code; inputs are built with the public graph and model types only.

#![allow(dead_code)]

use std::collections::BTreeSet;

use exview::gnn::GcnModel;
use exview::graph::{Graph, Labeled, NodeId, NodeSet, Pattern};
use exview::influence::InfluenceTable;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Dense `D^-1/2 (A + I) D^-1/2`.
pub fn dense_propagation(g: &Graph) -> Array2<f64> {
    let n = g.node_count();
    let mut a = Array2::<f64>::eye(n);
    for e in g.edge_list() {
        a[[e.u, e.v]] = 1.0;
        a[[e.v, e.u]] = 1.0;
    }
    let d: Vec<f64> = (0..n).map(|v| a.row(v).sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt())
}

pub fn feature_matrix(g: &Graph) -> Array2<f64> {
    Array2::from_shape_fn((g.node_count(), g.feature_dim()), |(v, j)| g.features(v)[j])
}

pub fn dense_embeddings_from(m: &GcnModel, g: &Graph, x: Array2<f64>) -> Array2<f64> {
    let p = dense_propagation(g);
    let mut h = x;
    for w in m.layers() {
        h = p.dot(&h).dot(w).mapv(|z| z.max(0.0));
    }
    h
}

pub fn dense_embeddings(m: &GcnModel, g: &Graph) -> Array2<f64> {
    dense_embeddings_from(m, g, feature_matrix(g))
}

pub fn dense_logits(m: &GcnModel, g: &Graph) -> Array1<f64> {
    let h = dense_embeddings(m, g);
    let mut pooled = Array1::zeros(m.embedding_dim());
    for (v, row) in h.rows().into_iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            if v == 0 || x > pooled[c] {
                pooled[c] = x;
            }
        }
    }
    pooled.dot(m.classifier_weight()) + m.classifier_bias()
}

pub fn dense_label(m: &GcnModel, g: &Graph) -> usize {
    let l = dense_logits(m, g);
    let mut best = 0;
    for i in 1..l.len() {
        if l[i] > l[best] {
            best = i;
        }
    }
    best
}

fn subgraph(g: &Graph, keep: &NodeSet) -> Graph {
    let ids: Vec<NodeId> = keep.iter().copied().collect();
    let pos = |v: NodeId| ids.iter().position(|&w| w == v);
    let edges: Vec<_> = g
        .edge_list()
        .into_iter()
        .filter_map(|e| Some((pos(e.u)?, pos(e.v)?, e.edge_type)))
        .collect();
    Graph::from_parts(
        g.feature_dim(),
        ids.iter().map(|&v| (g.node_type(v), g.features(v).to_vec())),
        edges,
    )
    .unwrap()
}

/// Consistent and counterfactual, from the dense oracle.
pub fn everify_oracle(m: &GcnModel, g: &Graph, s: &NodeSet, label: usize) -> bool {
    if s.is_empty() {
        return false;
    }
    let rest: NodeSet = g.nodes().filter(|v| !s.contains(v)).collect();
    dense_label(m, &subgraph(g, s)) == label && dense_label(m, &subgraph(g, &rest)) != label
}

/// `i1[[v, u]] = Σ |∂ out_v / ∂ x_u|` by central differences.
pub fn fd_influence(m: &GcnModel, g: &Graph, h: f64) -> Array2<f64> {
    let n = g.node_count();
    let x = feature_matrix(g);
    let mut i1 = Array2::zeros((n, n));
    for u in 0..n {
        for j in 0..g.feature_dim() {
            let mut plus = x.clone();
            plus[[u, j]] += h;
            let mut minus = x.clone();
            minus[[u, j]] -= h;
            let d = (dense_embeddings_from(m, g, plus) - dense_embeddings_from(m, g, minus)) / (2.0 * h);
            for v in 0..n {
                i1[[v, u]] += d.row(v).iter().map(|z| z.abs()).sum::<f64>();
            }
        }
    }
    i1
}

/// Every injective map from pattern nodes to graph nodes that preserves node
/// types, and maps edges to edges of the same type and non-edges to non-edges.
pub fn brute_matches(p: &Pattern, g: &Graph) -> BTreeSet<Vec<NodeId>> {
    fn edge<G: Labeled>(g: &G, a: NodeId, b: NodeId) -> Option<u32> {
        g.neighbors(a).iter().find(|&&(w, _)| w == b).map(|&(_, t)| t)
    }
    let k = p.node_count();
    let n = g.node_count();
    let mut out = BTreeSet::new();
    let mut map = vec![0; k];
    fn rec(
        i: usize,
        k: usize,
        n: usize,
        map: &mut Vec<NodeId>,
        p: &Pattern,
        g: &Graph,
        out: &mut BTreeSet<Vec<NodeId>>,
    ) {
        if i == k {
            for a in 0..k {
                if p.node_type(a) != g.node_type(map[a]) {
                    return;
                }
                for b in a + 1..k {
                    if edge(p, a, b) != edge(g, map[a], map[b]) {
                        return;
                    }
                }
            }
            out.insert(map.clone());
            return;
        }
        for v in 0..n {
            if !map[..i].contains(&v) {
                map[i] = v;
                rec(i + 1, k, n, map, p, g, out);
            }
        }
    }
    rec(0, k, n, &mut map, p, g, &mut out);
    out
}

/// `(|Inf(S)| + γ |Div(S)|) / n` straight from the influence table.
pub fn objective_oracle(t: &InfluenceTable, s: &NodeSet, theta: f64, r: f64, gamma: f64) -> f64 {
    let n = t.i2.nrows();
    if n == 0 {
        return 0.0;
    }
    let influenced: Vec<NodeId> = (0..n)
        .filter(|&v| s.iter().any(|&u| t.i2[[u, v]] >= theta))
        .collect();
    let unit = |v: NodeId| {
        let row = t.embeddings.row(v);
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            row.to_owned()
        } else {
            row.mapv(|x| x / norm)
        }
    };
    let diverse = (0..n)
        .filter(|&w| {
            influenced.iter().any(|&v| {
                let d = unit(v) - unit(w);
                d.dot(&d).sqrt() <= r
            })
        })
        .count();
    (influenced.len() as f64 + gamma * diverse as f64) / n as f64
}

/// All subsets of `0..n` with at most `max` elements.
pub fn subsets(n: usize, max: usize) -> impl Iterator<Item = NodeSet> {
    (0u32..1 << n)
        .filter(move |m| m.count_ones() as usize <= max)
        .map(move |m| (0..n).filter(|v| m >> v & 1 == 1).collect())
}

/// Best objective value over node sets with size in `[lower, upper]` that
/// pass the dense explanation oracle.
pub fn exhaustive_optimum(
    m: &GcnModel,
    g: &Graph,
    label: usize,
    lower: usize,
    upper: usize,
    value: impl Fn(&NodeSet) -> f64,
) -> Option<(NodeSet, f64)> {
    let mut best: Option<(NodeSet, f64)> = None;
    for s in subsets(g.node_count(), upper) {
        if s.len() < lower.max(1) || !everify_oracle(m, g, &s, label) {
            continue;
        }
        let f = value(&s);
        if best.as_ref().map_or(true, |(_, b)| f > *b) {
            best = Some((s, f));
        }
    }
    best
}

/// Minimum total weight of a family of sets covering `universe`, over bit masks.
pub fn min_cover_weight(sets: &[(u64, f64)], universe: u64) -> Option<f64> {
    let bits: Vec<u64> = (0..64).filter(|b| universe >> b & 1 == 1).collect();
    let compress = |m: u64| {
        bits.iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | (((m >> b & 1) as usize) << i))
    };
    let full = (1usize << bits.len()) - 1;
    let mut dp = vec![f64::INFINITY; full + 1];
    dp[0] = 0.0;
    for mask in 0..=full {
        if dp[mask].is_infinite() {
            continue;
        }
        for &(s, w) in sets {
            let next = mask | compress(s);
            if dp[mask] + w < dp[next] {
                dp[next] = dp[mask] + w;
            }
        }
    }
    dp[full].is_finite().then_some(dp[full])
}

pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Random GCN with weights in `[-1, 1)` and the given channel widths.
pub fn random_model<R: Rng>(rng: &mut R, widths: &[usize], classes: usize) -> GcnModel {
    let layers = widths
        .windows(2)
        .map(|w| Array2::from_shape_fn((w[0], w[1]), |_| rng.gen_range(-1.0..1.0)))
        .collect();
    let last = *widths.last().unwrap();
    GcnModel::new(
        layers,
        Array2::from_shape_fn((last, classes), |_| rng.gen_range(-1.0..1.0)),
        Array1::from_shape_fn(classes, |_| rng.gen_range(-0.1..0.1)),
    )
    .unwrap()
}

/// Random graph with `types` node types, `edge_types` edge types and edge
/// probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, dim: usize, types: u32, edge_types: u32, p: f64) -> Graph {
    let mut g = Graph::new(dim);
    for _ in 0..n {
        let f: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        g.add_node(rng.gen_range(0..types), &f).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v, rng.gen_range(0..edge_types)).unwrap();
            }
        }
    }
    g
}

/// Random connected pattern on `k` nodes with two node and two edge types.
pub fn random_pattern<R: Rng>(rng: &mut R, k: usize) -> Pattern {
    let types = (0..k).map(|_| rng.gen_range(0..2)).collect();
    let mut edges: Vec<(NodeId, NodeId, u32)> = (1..k).map(|v| (rng.gen_range(0..v), v, rng.gen_range(0..2))).collect();
    for u in 0..k {
        for v in u + 1..k {
            if rng.gen_bool(0.3) && !edges.iter().any(|&(a, b, _)| (a, b) == (u, v)) {
                edges.push((u, v, rng.gen_range(0..2)));
            }
        }
    }
    Pattern::new(types, edges).unwrap()
}

/// Outcome of a batch of ratio checks against an exhaustive optimum.
#[derive(Debug, Default, Clone)]
pub struct RatioCheck {
    /// Comparisons made (instances, or checkpoints for the streaming check).
    pub checked: usize,
    /// Comparisons skipped because no feasible set exists.
    pub vacuous: usize,
    pub violations: usize,
    /// Smallest achieved / optimum over comparisons with a positive optimum.
    pub worst_ratio: f64,
}

impl RatioCheck {
    fn new() -> Self {
        RatioCheck {
            worst_ratio: f64::INFINITY,
            ..Default::default()
        }
    }

    fn record(&mut self, achieved: f64, optimum: f64, factor: f64) {
        self.checked += 1;
        if optimum > 0.0 {
            self.worst_ratio = self.worst_ratio.min(achieved / optimum);
        }
        if achieved < factor * optimum - 1e-12 {
            self.violations += 1;
        }
    }
}

pub struct KeyedCase {
    pub graph: Graph,
    pub model: GcnModel,
    pub cfg: exview::config::Config,
}

/// Random keyed instance with `n ≤ 12` nodes, upper bound at most 4 and
/// random objective parameters.
pub fn keyed_case(seed: u64) -> KeyedCase {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let n = rng.gen_range(5..=12);
    let (graph, model) = exview::io::synth::keyed_instance(n, seed);
    let upper = rng.gen_range(1..=4);
    let cfg = exview::config::Config {
        theta: rng.gen_range(0.02..0.3),
        r: rng.gen_range(0.05..1.0),
        gamma: rng.gen_range(0.0..=1.0),
        default_coverage: exview::config::Coverage::new(rng.gen_range(0..=upper), upper),
        ..Default::default()
    };
    KeyedCase { graph, model, cfg }
}

fn value_on<'a>(t: &'a InfluenceTable, cfg: &exview::config::Config) -> impl Fn(&NodeSet) -> f64 + 'a {
    let (theta, r, gamma) = (cfg.theta, cfg.r, cfg.gamma);
    move |s: &NodeSet| objective_oracle(t, s, theta, r, gamma)
}

/// Greedy explainer against the exhaustive optimum, factor 1/2.
pub fn greedy_half_check(instances: u64, seed: u64) -> RatioCheck {
    let mut out = RatioCheck::new();
    for i in 0..instances {
        let c = keyed_case(seed + i);
        let t = exview::influence::influence_table(&c.model, &c.graph, &c.cfg).unwrap();
        let w = c.cfg.default_coverage;
        let Some((_, best)) = exhaustive_optimum(&c.model, &c.graph, 0, w.lower, w.upper, value_on(&t, &c.cfg))
        else {
            out.vacuous += 1;
            continue;
        };
        let got = exview::explain::explain_graph(&c.model, &c.graph, &c.cfg, 0, &t)
            .unwrap()
            .map_or(0.0, |s| value_on(&t, &c.cfg)(&s));
        out.record(got, best, 0.5);
    }
    out
}

/// Streaming explainer over a random arrival order, compared at 25/50/75/100%
/// of the stream with the exhaustive optimum on the prefix, factor 1/4.
pub fn stream_quarter_check(instances: u64, seed: u64) -> RatioCheck {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut out = RatioCheck::new();
    for i in 0..instances {
        let c = keyed_case(seed + i);
        let n = c.graph.node_count();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + i);
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut rng);
        let checkpoints: Vec<usize> = [0.25, 0.5, 0.75, 1.0].iter().map(|q| (q * n as f64).ceil() as usize).collect();
        let mut st = exview::stream::StreamState::new(c.graph.feature_dim(), 0);
        let mut seen = vec![false; n];
        for (k, &v) in order.iter().enumerate() {
            let edges: Vec<_> = c.graph.neighbors(v).iter().copied().filter(|&(w, _)| seen[w]).collect();
            st.step(&c.model, &c.cfg, v, c.graph.node_type(v), c.graph.features(v), &edges).unwrap();
            seen[v] = true;
            if !checkpoints.contains(&(k + 1)) {
                continue;
            }
            let t = st.influence().unwrap();
            let w = c.cfg.default_coverage;
            let Some((_, best)) = exhaustive_optimum(&c.model, st.prefix(), 0, w.lower, w.upper, value_on(t, &c.cfg))
            else {
                out.vacuous += 1;
                continue;
            };
            let got = st.view(&c.model, &c.cfg).map_or(0.0, |view| {
                let local: NodeSet = view
                    .nodes
                    .iter()
                    .map(|v| st.original_ids().iter().position(|w| w == v).unwrap())
                    .collect();
                value_on(t, &c.cfg)(&local)
            });
            out.record(got, best, 0.25);
        }
    }
    out
}

/// Greedy pattern cover against the exhaustive minimum-weight cover, factor
/// `H(u)` for upper bound `u`. Reported ratios are optimum / greedy weight.
/// Also returns the number of instances whose greedy cover missed a node.
pub fn cover_check(instances: u64, seed: u64) -> (RatioCheck, usize) {
    use exview::explain::ExplanationSubgraph;
    use exview::summarize::{all_nodes, greedy_cover, mine_candidates};
    use rand::SeedableRng;
    let mut out = RatioCheck::new();
    let mut uncovered = 0;
    for i in 0..instances {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + i);
        let upper = rng.gen_range(1..=4);
        let graphs: Vec<Graph> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let n = rng.gen_range(3..=6);
                random_graph(&mut rng, n, 1, 2, 1, 0.5)
            })
            .collect();
        let subs: Vec<ExplanationSubgraph> = graphs
            .iter()
            .enumerate()
            .map(|(id, g)| {
                let mut nodes: NodeSet = [rng.gen_range(0..g.node_count())].into();
                let size = rng.gen_range(1..=upper);
                while nodes.len() < size {
                    let frontier: Vec<NodeId> = nodes
                        .iter()
                        .flat_map(|&v| g.neighbors(v).iter().map(|&(w, _)| w))
                        .filter(|w| !nodes.contains(w))
                        .collect();
                    let Some(&w) = frontier.get(rng.gen_range(0..frontier.len().max(1))) else { break };
                    nodes.insert(w);
                }
                ExplanationSubgraph::new(id, 0, g, nodes)
            })
            .collect();
        let cfg = exview::config::Config {
            pattern_min_support: rng.gen_range(1..=2),
            pattern_max_nodes: 4,
            ..Default::default()
        };
        let cands = mine_candidates(&subs, &cfg);
        let universe: Vec<_> = all_nodes(&subs).into_iter().collect();
        let mask = |set: &BTreeSet<(usize, NodeId)>| {
            set.iter()
                .map(|x| 1u64 << universe.iter().position(|y| y == x).unwrap())
                .fold(0, |a, b| a | b)
        };
        let full = (1u64 << universe.len()) - 1;
        let chosen = greedy_cover(&cands, &universe.iter().copied().collect()).unwrap();
        let covered = chosen.iter().map(|&c| mask(&cands[c].covered_nodes)).fold(0, |a, b| a | b);
        if covered != full {
            uncovered += 1;
        }
        let greedy: f64 = chosen.iter().map(|&c| cands[c].weight).sum();
        let family: Vec<(u64, f64)> = cands.iter().map(|c| (mask(&c.covered_nodes), c.weight)).collect();
        let best = min_cover_weight(&family, full).unwrap();
        out.checked += 1;
        if greedy > 0.0 {
            out.worst_ratio = out.worst_ratio.min(best / greedy);
        }
        if greedy > harmonic(upper) * best + 1e-12 {
            out.violations += 1;
        }
    }
    (out, uncovered)
}
